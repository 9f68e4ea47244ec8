#![allow(clippy::needless_range_loop)]

//! Numerical Finsler geometry on the slit tangent bundle.
//!
//! From an energy function `E(x, y)` the crate computes the fundamental
//! tensor, fundamental 2-form, canonical spray, Barthel nonlinear connection,
//! and the four fundamental linear connections (Berwald, Cartan, Chern,
//! Hashiguchi) with their torsion and curvature blocks, all as exact
//! component data at sample points obtained through truncated Taylor
//! arithmetic. A verification suite evaluates the classical identities
//! relating these objects as numerical residuals and reports them in a
//! machine-readable form.

mod error;
mod util;

pub mod cli;
pub mod connections;
pub mod fncalc;
pub mod frontend;
pub mod geometry;
pub mod jets;
pub mod verify;

pub use error::{Error, Result};

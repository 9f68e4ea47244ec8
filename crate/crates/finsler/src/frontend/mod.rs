//! User-facing surface: the builtin metric zoo, the expression DSL, sample
//! point generation, and report serialization.

pub mod expr;
pub mod report;
pub mod sampling;
pub mod zoo;

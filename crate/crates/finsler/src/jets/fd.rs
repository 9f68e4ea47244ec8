//! Finite-difference derivative oracle.
//!
//! Mixed partials are computed by nesting one central difference per
//! derivative order, each Richardson-extrapolated from steps h and h/2 so a
//! single level carries an O(h^4) truncation error. The oracle shares no code
//! with the Taylor engine and serves as its independent cross-check.

use super::{eval_value, JetError, ScalarField, TangentPoint};
use crate::Error as CrateError;

/// Base step per differentiation level. Chosen so that four nested levels
/// keep both the O(h^4) truncation and the eps/h^k rounding amplification
/// below 1e-7 on O(1)-scaled fields.
const STEP: f64 = 8e-3;

/// Largest total order the oracle supports before rounding noise dominates.
pub const MAX_FD_ORDER: usize = 4;

/// Central-difference approximation of a mixed partial derivative, one
/// Richardson-extrapolated central difference per order.
///
/// `multi_index` lists exponents over the 2n coordinates (x then y). Errors
/// if the total order exceeds [`MAX_FD_ORDER`] or the stencil would leave the
/// slit bundle.
pub fn fd_partial(
    f: &dyn ScalarField,
    p: &TangentPoint,
    multi_index: &[usize],
) -> Result<f64, CrateError> {
    let n = p.dim();
    if multi_index.len() != 2 * n {
        return Err(JetError::Domain(format!(
            "multi-index length {} does not match 2n = {}",
            multi_index.len(),
            2 * n
        ))
        .into());
    }
    let total: usize = multi_index.iter().sum();
    if total > MAX_FD_ORDER {
        return Err(JetError::OrderTooHigh {
            requested: total,
            max: MAX_FD_ORDER,
        }
        .into());
    }
    // The stencil shifts each fiber axis by at most order * STEP in every
    // nesting level; reject when that could reach y = 0.
    let fiber_reach: f64 = multi_index[n..]
        .iter()
        .map(|&e| e as f64 * STEP)
        .sum::<f64>()
        * 2.0;
    if p.fiber_norm() <= fiber_reach {
        return Err(JetError::Domain(
            "finite-difference stencil would cross the zero section".into(),
        )
        .into());
    }
    let coords = p.coords();
    fd_rec(f, &coords, n, multi_index)
}

fn fd_rec(
    f: &dyn ScalarField,
    coords: &[f64],
    n: usize,
    multi: &[usize],
) -> Result<f64, CrateError> {
    let axis = match multi.iter().position(|&e| e > 0) {
        None => {
            let x = coords[..n].to_vec();
            let y = coords[n..].to_vec();
            let p = TangentPoint::new(x, y)?;
            return eval_value(f, &p);
        }
        Some(a) => a,
    };
    let mut remaining = multi.to_vec();
    remaining[axis] -= 1;
    let diff = |h: f64| -> Result<f64, CrateError> {
        let mut up = coords.to_vec();
        up[axis] += h;
        let mut dn = coords.to_vec();
        dn[axis] -= h;
        Ok((fd_rec(f, &up, n, &remaining)? - fd_rec(f, &dn, n, &remaining)?) / (2.0 * h))
    };
    let d1 = diff(STEP)?;
    let d2 = diff(STEP / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

//! Derivative engine on the slit tangent bundle.
//!
//! Scalar fields are evaluated over [`Taylor`] arithmetic, so that a single
//! evaluation at a seeded point yields all mixed partial derivatives in the
//! base coordinates `x` and the fiber coordinates `y` up to the seed order.
//! An independent finite-difference oracle ([`fd_partial`]) cross-checks the
//! engine in tests.

mod fd;
pub mod taylor;

use std::sync::Arc;

use thiserror::Error;

pub use fd::fd_partial;
pub use taylor::{Basis, Taylor, MAX_ORDER, MAX_VARS};

use crate::Error as CrateError;

/// Largest order accepted by [`eval_jet`]. The engine reserves one extra
/// internal order for covariant derivatives of the deepest curvature blocks.
pub const MAX_JET_ORDER: usize = 5;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("requested derivative order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// A point (x, y) of the slit tangent bundle, y != 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPoint {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TangentPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<TangentPoint, JetError> {
        if x.len() != y.len() {
            return Err(JetError::Domain(format!(
                "base and fiber dimensions differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        let n = x.len();
        if n < 2 {
            return Err(JetError::Domain(format!(
                "dimension must be at least 2, got {n}"
            )));
        }
        if 2 * n > MAX_VARS {
            return Err(JetError::Domain(format!(
                "dimension {n} exceeds the supported maximum {}",
                MAX_VARS / 2
            )));
        }
        if y.iter().map(|v| v * v).sum::<f64>() == 0.0 {
            return Err(JetError::Domain("fiber vector y must be nonzero".into()));
        }
        Ok(TangentPoint { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn fiber_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Flat coordinate vector (x_1..x_n, y_1..y_n).
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        c.extend_from_slice(&self.y);
        c
    }

    /// The same base point with the fiber scaled by `lambda`.
    pub fn scaled_fiber(&self, lambda: f64) -> Result<TangentPoint, JetError> {
        TangentPoint::new(self.x.clone(), self.y.iter().map(|v| lambda * v).collect())
    }
}

/// A smooth scalar field on the slit tangent bundle, evaluated over Taylor
/// arithmetic. `coords` holds the 2n seeded coordinates (x then y).
///
/// `depth` declares how many derivative orders the evaluation consumes
/// internally (fields defined through derivatives of another field report a
/// positive depth); the returned value has order `coords order - depth`.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn depth(&self) -> usize {
        0
    }

    fn eval(&self, coords: &[Taylor]) -> Result<Taylor, CrateError>;
}

/// Seed the 2n coordinates of `p` as Taylor variables of the given order.
pub fn seed_point(p: &TangentPoint, order: usize) -> Result<Vec<Taylor>, JetError> {
    if order > MAX_ORDER {
        return Err(JetError::OrderTooHigh {
            requested: order,
            max: MAX_ORDER,
        });
    }
    let nvars = 2 * p.dim();
    let basis = Basis::shared(nvars);
    Ok(p.coords()
        .iter()
        .enumerate()
        .map(|(v, &value)| Taylor::variable(basis.clone(), v, value, order))
        .collect())
}

/// Evaluate a field at a point; plain value, no derivatives.
pub fn eval_value(f: &dyn ScalarField, p: &TangentPoint) -> Result<f64, CrateError> {
    let coords = seed_point(p, f.depth())?;
    Ok(f.eval(&coords)?.value())
}

/// Exact mixed partial derivatives of a scalar field at a point, stored as
/// raw partials (not divided by the multi-index factorial) over all
/// multi-indices of total order up to `order`.
#[derive(Clone)]
pub struct Jet {
    center: TangentPoint,
    order: usize,
    basis: Arc<Basis>,
    /// Raw partial derivative per basis rank.
    partials: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Jet(order={}, value={})", self.order, self.value())
    }
}

impl Jet {
    pub fn center(&self) -> &TangentPoint {
        &self.center
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.partials[0]
    }

    /// Raw partial for a multi-index given as exponents over the 2n
    /// coordinates (x_1..x_n, y_1..y_n). Zero exponents may be omitted only
    /// by passing the full-length slice; the length must be 2n.
    pub fn partial(&self, multi_index: &[usize]) -> Option<f64> {
        let total: usize = multi_index.iter().sum();
        if total > self.order {
            return None;
        }
        self.basis.rank_of(multi_index).map(|r| self.partials[r])
    }

    /// Raw partial named by a list of differentiation axes, e.g.
    /// `&[0, n + 1]` for d/dx_1 d/dy_2. Axes may repeat.
    pub fn deriv(&self, axes: &[usize]) -> Option<f64> {
        let mut multi = vec![0usize; self.basis.nvars()];
        for &a in axes {
            if a >= multi.len() {
                return None;
            }
            multi[a] += 1;
        }
        self.partial(&multi)
    }

    /// Leibniz product of two jets at the same center:
    /// d^g(fg) = sum over a <= g of binom(g, a) d^a f d^(g-a) g.
    pub fn product(&self, other: &Jet) -> Jet {
        assert!(Arc::ptr_eq(&self.basis, &other.basis));
        assert_eq!(self.center, other.center);
        let order = self.order.min(other.order);
        let basis = &self.basis;
        let len = basis.len_at(order);
        let mut partials = vec![0.0; len];
        for ia in 0..len {
            let fa = self.partials[ia];
            if fa == 0.0 {
                continue;
            }
            let da = basis.degree(ia);
            for ib in 0..basis.len_at(order - da) {
                let fb = other.partials[ib];
                if fb == 0.0 {
                    continue;
                }
                let ic = {
                    // rank of the exponent sum
                    let ea = basis.exponents(ia);
                    let eb = basis.exponents(ib);
                    let sum: Vec<usize> = ea
                        .iter()
                        .zip(eb.iter())
                        .map(|(&a, &b)| (a + b) as usize)
                        .collect();
                    basis.rank_of(&sum).expect("sum within order")
                };
                let weight = basis.factorial(ic) / (basis.factorial(ia) * basis.factorial(ib));
                partials[ic] += weight * fa * fb;
            }
        }
        Jet {
            center: self.center.clone(),
            order,
            basis: self.basis.clone(),
            partials,
        }
    }
}

/// Evaluate all mixed partials of `f` at `p` up to total `order`.
///
/// Fields with a positive internal depth consume extra seed orders; the
/// combined requirement must stay within the engine maximum.
pub fn eval_jet(f: &dyn ScalarField, p: &TangentPoint, order: usize) -> Result<Jet, CrateError> {
    if order > MAX_JET_ORDER {
        return Err(JetError::OrderTooHigh {
            requested: order,
            max: MAX_JET_ORDER,
        }
        .into());
    }
    if p.dim() != f.dim() {
        return Err(JetError::Domain(format!(
            "field dimension {} does not match point dimension {}",
            f.dim(),
            p.dim()
        ))
        .into());
    }
    let seed_order = order + f.depth();
    if seed_order > MAX_ORDER {
        return Err(JetError::OrderTooHigh {
            requested: seed_order,
            max: MAX_ORDER,
        }
        .into());
    }
    let coords = seed_point(p, seed_order)?;
    let value = f.eval(&coords)?;
    let basis = value.basis().clone();
    let len = basis.len_at(order);
    let partials: Vec<f64> = (0..len).map(|r| value.partial_by_rank(r)).collect();
    Ok(Jet {
        center: p.clone(),
        order,
        basis,
        partials,
    })
}

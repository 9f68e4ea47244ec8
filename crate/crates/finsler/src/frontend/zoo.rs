//! Built-in energy functions.
//!
//! The zoo covers the qualitatively distinct cases: flat and curved
//! Riemannian energies (vanishing Cartan tensor), a Randers energy with
//! position-dependent drift (neither h- nor v-degenerate anywhere), and a
//! locally Minkowski quartic energy (flat horizontally, curved vertically).

use std::sync::Arc;

use thiserror::Error;

use crate::jets::{TangentPoint, Taylor};
use crate::{Error as CrateError, Result as CrateResult};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("bad metric parameters: {0}")]
    BadParams(String),
}

/// Slope of the Randers drift along x1. The drift must stay below unit
/// length on the sample domain |x1| <= 1 for the metric to remain positive
/// definite.
pub const RANDERS_DRIFT_SLOPE: f64 = 0.2;

/// Per-axis quadratic coefficients of the diagonal Riemannian family.
const RIEM_DIAG_COEFF: [f64; 4] = [0.5, 0.3, 0.2, 0.4];

#[derive(Clone, Debug)]
enum Family {
    /// E = |y|^2 / 2
    Euclid,
    /// E = (y1^2 + x1^2 y2^2) / 2 on x1 > 0, dimension 2
    Polar,
    /// E = sum a_i(x) y_i^2 / 2 with a_i(x) = 1 + c_i x_{i+1}^2
    RiemDiag,
    /// E = (|y| + b(x).y)^2 / 2 with b(x) = (beta_1 + slope * x1, beta_2, ..)
    Randers { beta: Vec<f64> },
    /// E = sqrt(sum y_i^4) / 2
    Quartic,
}

/// A zoo member: the energy field plus the structural facts the
/// verification suite needs to decide which identity checks apply.
pub struct ZooMetric {
    name: String,
    n: usize,
    family: Family,
}

impl ZooMetric {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// True when the fundamental tensor is independent of y (Cartan tensor
    /// vanishes identically and the four connections coincide).
    pub fn is_riemannian(&self) -> bool {
        matches!(
            self.family,
            Family::Euclid | Family::Polar | Family::RiemDiag
        )
    }

    /// True when the energy is independent of x (Barthel connection and all
    /// horizontal curvature blocks vanish identically).
    pub fn is_locally_minkowski(&self) -> bool {
        matches!(self.family, Family::Euclid | Family::Quartic)
    }

    /// The documented point where the non-metricity witnesses are evaluated.
    pub fn witness_point(&self) -> Option<TangentPoint> {
        match self.family {
            Family::Randers { .. } => {
                let mut x = vec![0.0; self.n];
                x[0] = 0.5;
                if self.n > 1 {
                    x[1] = -0.3;
                }
                let mut y = vec![0.4; self.n];
                y[0] = 1.2;
                y[1] = 0.7;
                Some(TangentPoint::new(x, y).expect("witness point is valid"))
            }
            _ => None,
        }
    }

    /// Map a raw base sample (each coordinate in [-1, 1]) into the metric's
    /// validity domain.
    pub fn adjust_base_point(&self, x: &mut [f64]) {
        if let Family::Polar = self.family {
            // the polar energy degenerates at x1 = 0
            x[0] = 1.25 + 0.5 * x[0];
        }
    }

    /// Reject fiber samples too close to a degenerate direction.
    pub fn fiber_acceptable(&self, y: &[f64]) -> bool {
        match self.family {
            Family::Quartic => {
                // the quartic fundamental tensor degenerates on the axes
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                y.iter().all(|v| v.abs() > 0.15 * norm)
            }
            _ => true,
        }
    }
}

impl crate::jets::ScalarField for ZooMetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, coords: &[Taylor]) -> std::result::Result<Taylor, CrateError> {
        let n = self.n;
        let (x, y) = coords.split_at(n);
        let basis = coords[0].basis().clone();
        let order = coords[0].order();
        let zero = || Taylor::constant(basis.clone(), 0.0, order);
        match &self.family {
            Family::Euclid => {
                let mut acc = zero();
                for yi in y {
                    acc = acc.add(&yi.mul(yi));
                }
                Ok(acc.scale(0.5))
            }
            Family::Polar => {
                let term = x[0].mul(&x[0]).mul(&y[1].mul(&y[1]));
                Ok(y[0].mul(&y[0]).add(&term).scale(0.5))
            }
            Family::RiemDiag => {
                let mut acc = zero();
                for i in 0..n {
                    let j = (i + 1) % n;
                    let a = x[j].mul(&x[j]).scale(RIEM_DIAG_COEFF[i]).add_scalar(1.0);
                    acc = acc.add(&a.mul(&y[i].mul(&y[i])));
                }
                Ok(acc.scale(0.5))
            }
            Family::Randers { beta } => {
                let mut sq = zero();
                for yi in y {
                    sq = sq.add(&yi.mul(yi));
                }
                let alpha = sq.sqrt()?;
                let mut drift = y[0].mul(&x[0].scale(RANDERS_DRIFT_SLOPE).add_scalar(beta[0]));
                for i in 1..n {
                    drift = drift.add(&y[i].scale(beta[i]));
                }
                let f = alpha.add(&drift);
                Ok(f.mul(&f).scale(0.5))
            }
            Family::Quartic => {
                let mut acc = zero();
                for yi in y {
                    let sq = yi.mul(yi);
                    acc = acc.add(&sq.mul(&sq));
                }
                Ok(acc.sqrt()?.scale(0.5))
            }
        }
    }
}

/// All builtin names, in registry order.
pub const BUILTIN_NAMES: [&str; 5] = ["euclid", "polar", "riem-diag", "randers", "quartic"];

/// Construct a builtin energy. `params` is the Randers drift vector beta
/// (constant part); other families take no parameters.
pub fn builtin_metric(name: &str, params: &[f64], n: usize) -> CrateResult<Arc<ZooMetric>> {
    if !(2..=4).contains(&n) {
        return Err(
            MetricError::BadParams(format!("dimension {n} outside supported range 2..=4")).into(),
        );
    }
    let family = match name {
        "euclid" => Family::Euclid,
        "polar" => {
            if n != 2 {
                return Err(MetricError::BadParams("polar requires dimension 2".into()).into());
            }
            Family::Polar
        }
        "riem-diag" => Family::RiemDiag,
        "randers" => {
            let beta: Vec<f64> = if params.is_empty() {
                let mut b = vec![0.0; n];
                b[0] = 0.1;
                b
            } else {
                if params.len() != n {
                    return Err(MetricError::BadParams(format!(
                        "randers drift needs {n} components, got {}",
                        params.len()
                    ))
                    .into());
                }
                params.to_vec()
            };
            let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm + RANDERS_DRIFT_SLOPE >= 1.0 {
                return Err(MetricError::BadParams(format!(
                    "randers drift magnitude {norm} too large; positive definiteness needs |b(x)| < 1 on the sample domain"
                ))
                .into());
            }
            Family::Randers { beta }
        }
        "quartic" => Family::Quartic,
        other => return Err(MetricError::UnknownMetric(other.into()).into()),
    };
    if !params.is_empty() && !matches!(family, Family::Randers { .. }) {
        return Err(MetricError::BadParams(format!("{name} takes no parameters")).into());
    }
    Ok(Arc::new(ZooMetric {
        name: name.to_string(),
        n,
        family,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::eval_value;

    fn value(m: &ZooMetric, x: &[f64], y: &[f64]) -> f64 {
        let p = TangentPoint::new(x.to_vec(), y.to_vec()).unwrap();
        eval_value(m, &p).unwrap()
    }

    #[test]
    fn euclid_value() {
        let m = builtin_metric("euclid", &[], 2).unwrap();
        assert!((value(&m, &[0.0, 0.0], &[3.0, 4.0]) - 12.5).abs() < 1e-14);
    }

    #[test]
    fn randers_value_at_origin_fiber() {
        // (1 + 0.1)^2 / 2 = 0.605; the drift modulation vanishes at x = 0.
        let m = builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        assert!((value(&m, &[0.0, 0.0], &[1.0, 0.0]) - 0.605).abs() < 1e-14);
    }

    #[test]
    fn quartic_value() {
        let m = builtin_metric("quartic", &[], 2).unwrap();
        let expect = 0.5 * 2.0f64.sqrt();
        assert!((value(&m, &[0.0, 0.0], &[1.0, 1.0]) - expect).abs() < 1e-14);
    }

    #[test]
    fn randers_rejects_unit_drift() {
        assert!(builtin_metric("randers", &[0.9, 0.0], 2).is_err());
        assert!(builtin_metric("randers", &[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn unknown_name_errors() {
        assert!(builtin_metric("funk", &[], 2).is_err());
    }

    #[test]
    fn polar_requires_dim_two() {
        assert!(builtin_metric("polar", &[], 3).is_err());
    }

    #[test]
    fn every_builtin_is_expressible() {
        use crate::frontend::expr::ExprField;
        use crate::frontend::sampling::sample_points;
        // each zoo member against its closed-form expression, 50 points
        let cases: [(&str, usize, &str); 7] = [
            ("euclid", 2, "0.5*(y1^2+y2^2)"),
            ("euclid", 3, "0.5*(y1^2+y2^2+y3^2)"),
            ("polar", 2, "0.5*(y1^2+x1^2*y2^2)"),
            ("riem-diag", 2, "0.5*((1+0.5*x2^2)*y1^2+(1+0.3*x1^2)*y2^2)"),
            (
                "riem-diag",
                3,
                "0.5*((1+0.5*x2^2)*y1^2+(1+0.3*x3^2)*y2^2+(1+0.2*x1^2)*y3^2)",
            ),
            ("randers", 2, "0.5*(sqrt(y1^2+y2^2)+(0.1+0.2*x1)*y1)^2"),
            ("quartic", 2, "0.5*sqrt(y1^4+y2^4)"),
        ];
        for (name, n, source) in cases {
            let builtin = builtin_metric(name, &[], n).unwrap();
            let expr = ExprField::parse(source, n).unwrap();
            for p in sample_points(&builtin, 50, 23) {
                let a = eval_value(builtin.as_ref(), &p).unwrap();
                let b = eval_value(expr.as_ref(), &p).unwrap();
                assert!(
                    (a - b).abs() < 1e-12 * (1.0 + a.abs()),
                    "{name}/{n} at {p:?}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn randers_reduces_to_constant_drift_on_the_origin_fiber() {
        use crate::frontend::expr::ExprField;
        use rand::{Rng, SeedableRng};
        // the drift modulation vanishes at x1 = 0, where the constant-drift
        // closed form applies
        let builtin = builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let expr = ExprField::parse("0.5*(sqrt(y1^2+y2^2)+0.1*y1)^2", 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let y = vec![rng.gen_range(0.5..2.0), rng.gen_range(-2.0..2.0)];
            if y.iter().map(|v| v * v).sum::<f64>() < 0.25 {
                continue;
            }
            let p = TangentPoint::new(vec![0.0, rng.gen_range(-1.0..1.0)], y).unwrap();
            let a = eval_value(builtin.as_ref(), &p).unwrap();
            let b = eval_value(expr.as_ref(), &p).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn homogeneity_of_every_builtin() {
        // E(x, 2y) = 4 E(x, y) for a degree-2 homogeneous energy.
        for name in BUILTIN_NAMES {
            let n = 2;
            let m = builtin_metric(name, &[], n).unwrap();
            let mut x = vec![0.4, -0.6];
            m.adjust_base_point(&mut x);
            let y = [0.9, 0.7];
            let e1 = value(&m, &x, &y);
            let e2 = value(&m, &x, &[1.8, 1.4]);
            assert!(
                (e2 - 4.0 * e1).abs() < 1e-12 * (1.0 + e1.abs()),
                "{name}: {e2} vs {}",
                4.0 * e1
            );
            assert_eq!(crate::jets::ScalarField::dim(m.as_ref()), n);
        }
    }
}

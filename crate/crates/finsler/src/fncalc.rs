//! Numerical Frölicher-Nijenhuis calculus on the double tangent bundle.
//!
//! Vector fields and vector 1-forms on TM are represented by their
//! components against the natural frame (d/dx_i, d/dy_i), evaluated over
//! Taylor arithmetic so that the coordinate brackets
//! `[u, w]^a = u^b d_b w^a - w^b d_b u^a` come out exactly. All bracket
//! operations are pointwise; nothing is stored globally.

use std::sync::Arc;

use crate::jets::{seed_point, ScalarField, TangentPoint, Taylor};
use crate::util::{mat_vec, Mat};
use crate::{Error, Result};

type FieldEval = dyn Fn(&[Taylor]) -> Result<Vec<Taylor>> + Send + Sync;
type FormEval = dyn Fn(&[Taylor]) -> Result<Vec<Vec<Taylor>>> + Send + Sync;

/// A vector field on TM: 2n components against the natural frame.
#[derive(Clone)]
pub struct VectorFieldTM {
    n: usize,
    /// Derivative orders the evaluation consumes internally.
    depth: usize,
    eval: Arc<FieldEval>,
}

/// A vector 1-form on TM: a 2n x 2n endomorphism field in the natural frame.
#[derive(Clone)]
pub struct VectorOneFormTM {
    n: usize,
    depth: usize,
    eval: Arc<FormEval>,
}

impl VectorFieldTM {
    pub fn new(
        n: usize,
        depth: usize,
        eval: impl Fn(&[Taylor]) -> Result<Vec<Taylor>> + Send + Sync + 'static,
    ) -> Self {
        VectorFieldTM {
            n,
            depth,
            eval: Arc::new(eval),
        }
    }

    /// Field with constant components.
    pub fn constant(n: usize, components: Vec<f64>) -> Self {
        assert_eq!(components.len(), 2 * n);
        VectorFieldTM::new(n, 0, move |coords| {
            let basis = coords[0].basis().clone();
            let order = coords[0].order();
            Ok(components
                .iter()
                .map(|&c| Taylor::constant(basis.clone(), c, order))
                .collect())
        })
    }

    /// The a-th natural frame field.
    pub fn frame(n: usize, a: usize) -> Self {
        let mut c = vec![0.0; 2 * n];
        c[a] = 1.0;
        VectorFieldTM::constant(n, c)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn components(&self, coords: &[Taylor]) -> Result<Vec<Taylor>> {
        let out = (self.eval)(coords)?;
        debug_assert_eq!(out.len(), 2 * self.n);
        Ok(out)
    }

    pub fn values_at(&self, at: &TangentPoint) -> Result<Vec<f64>> {
        let coords = seed_point(at, self.depth)?;
        Ok(self
            .components(&coords)?
            .iter()
            .map(Taylor::value)
            .collect())
    }
}

impl VectorOneFormTM {
    pub fn new(
        n: usize,
        depth: usize,
        eval: impl Fn(&[Taylor]) -> Result<Vec<Vec<Taylor>>> + Send + Sync + 'static,
    ) -> Self {
        VectorOneFormTM {
            n,
            depth,
            eval: Arc::new(eval),
        }
    }

    /// Form with constant matrix entries.
    pub fn constant(n: usize, matrix: Mat) -> Self {
        assert_eq!(matrix.len(), 2 * n);
        VectorOneFormTM::new(n, 0, move |coords| {
            let basis = coords[0].basis().clone();
            let order = coords[0].order();
            Ok(matrix
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&c| Taylor::constant(basis.clone(), c, order))
                        .collect()
                })
                .collect())
        })
    }

    pub fn identity(n: usize) -> Self {
        VectorOneFormTM::constant(n, crate::util::mat_identity(2 * n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entries(&self, coords: &[Taylor]) -> Result<Vec<Vec<Taylor>>> {
        let out = (self.eval)(coords)?;
        debug_assert_eq!(out.len(), 2 * self.n);
        Ok(out)
    }

    pub fn matrix_at(&self, at: &TangentPoint) -> Result<Mat> {
        let coords = seed_point(at, self.depth)?;
        Ok(self
            .entries(&coords)?
            .iter()
            .map(|row| row.iter().map(Taylor::value).collect())
            .collect())
    }

    /// The composite field u -> L(u) zeta(u).
    pub fn applied(&self, zeta: &VectorFieldTM) -> VectorFieldTM {
        let form = self.clone();
        let field = zeta.clone();
        VectorFieldTM::new(self.n, self.depth.max(zeta.depth), move |coords| {
            let m = form.entries(coords)?;
            let v = field.components(coords)?;
            Ok(taylor_mat_vec(&m, &v))
        })
    }
}

/// The natural almost tangent structure J and the Liouville field C.
///
/// J sends d/dx_i to d/dy_i and annihilates vertical vectors; C has
/// components (0, y).
pub fn natural_structures(n: usize) -> (VectorOneFormTM, VectorFieldTM) {
    assert!(n >= 2);
    let mut j = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        j[n + i][i] = 1.0;
    }
    let j_form = VectorOneFormTM::constant(n, j);
    let c_field = VectorFieldTM::new(n, 0, move |coords| {
        let basis = coords[0].basis().clone();
        let order = coords[0].order();
        let mut out: Vec<Taylor> = (0..n)
            .map(|_| Taylor::constant(basis.clone(), 0.0, order))
            .collect();
        out.extend(coords[n..2 * n].iter().cloned());
        Ok(out)
    });
    (j_form, c_field)
}

pub(crate) fn taylor_mat_vec(m: &[Vec<Taylor>], v: &[Taylor]) -> Vec<Taylor> {
    m.iter()
        .map(|row| {
            let mut acc = row[0].mul(&v[0]);
            for (e, x) in row.iter().zip(v).skip(1) {
                acc = acc.add(&e.mul(x));
            }
            acc
        })
        .collect()
}

/// Value of [u, w] at the center from order >= 1 component Taylors.
fn bracket_values(u: &[Taylor], w: &[Taylor]) -> Vec<f64> {
    let dim = u.len();
    (0..dim)
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..dim {
                acc += u[b].value() * w[a].deriv(b).value();
                acc -= w[b].value() * u[a].deriv(b).value();
            }
            acc
        })
        .collect()
}

fn value_matrix(m: &[Vec<Taylor>]) -> Mat {
    m.iter()
        .map(|row| row.iter().map(Taylor::value).collect())
        .collect()
}

/// Lie bracket [zeta, eta] of two vector fields, evaluated at a point.
pub fn lie_bracket(
    zeta: &VectorFieldTM,
    eta: &VectorFieldTM,
    at: &TangentPoint,
) -> Result<Vec<f64>> {
    let order = 1 + zeta.depth.max(eta.depth);
    let coords = seed_point(at, order)?;
    let u = zeta.components(&coords)?;
    let w = eta.components(&coords)?;
    Ok(bracket_values(&u, &w))
}

/// The Frölicher-Nijenhuis bracket [zeta, L] of a vector field with a vector
/// 1-form, evaluated at a point as a matrix over the natural frame. Columns
/// come from [zeta, L]e = [zeta, Le] - L[zeta, e] over the frame fields e.
pub fn fn_bracket_vf_form(
    zeta: &VectorFieldTM,
    form: &VectorOneFormTM,
    at: &TangentPoint,
) -> Result<Mat> {
    let n = zeta.dim();
    let dim = 2 * n;
    let order = 1 + zeta.depth.max(form.depth);
    let coords = seed_point(at, order)?;
    let z = zeta.components(&coords)?;
    let l = form.entries(&coords)?;
    let mut out = vec![vec![0.0; dim]; dim];
    for c in 0..dim {
        for a in 0..dim {
            let mut acc = 0.0;
            for b in 0..dim {
                // [zeta, L e_c]^a
                acc += z[b].value() * l[a][c].deriv(b).value();
                acc -= l[b][c].value() * z[a].deriv(b).value();
                // - (L [zeta, e_c])^a with [zeta, e_c] = -d_c zeta
                acc += l[a][b].value() * z[b].deriv(c).value();
            }
            out[a][c] = acc;
        }
    }
    Ok(out)
}

/// The Frölicher-Nijenhuis bracket [K, L](zeta, eta) of two vector 1-forms,
/// evaluated on two vector fields at a point:
/// [K z, L e] + [L z, K e] + KL[z, e] + LK[z, e]
/// - K[L z, e] - K[z, L e] - L[K z, e] - L[z, K e].
pub fn fn_bracket_forms(
    k_form: &VectorOneFormTM,
    l_form: &VectorOneFormTM,
    zeta: &VectorFieldTM,
    eta: &VectorFieldTM,
    at: &TangentPoint,
) -> Result<Vec<f64>> {
    let dim = 2 * k_form.dim();
    let order = 1 + k_form
        .depth
        .max(l_form.depth)
        .max(zeta.depth)
        .max(eta.depth);
    let coords = seed_point(at, order)?;
    let k = k_form.entries(&coords)?;
    let l = l_form.entries(&coords)?;
    let z = zeta.components(&coords)?;
    let e = eta.components(&coords)?;
    let kz = taylor_mat_vec(&k, &z);
    let ke = taylor_mat_vec(&k, &e);
    let lz = taylor_mat_vec(&l, &z);
    let le = taylor_mat_vec(&l, &e);
    let k0 = value_matrix(&k);
    let l0 = value_matrix(&l);

    let mut acc = vec![0.0; dim];
    let mut add = |v: Vec<f64>, sign: f64| {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += sign * x;
        }
    };
    add(bracket_values(&kz, &le), 1.0);
    add(bracket_values(&lz, &ke), 1.0);
    let ze = bracket_values(&z, &e);
    add(mat_vec(&k0, &mat_vec(&l0, &ze)), 1.0);
    add(mat_vec(&l0, &mat_vec(&k0, &ze)), 1.0);
    add(mat_vec(&k0, &bracket_values(&lz, &e)), -1.0);
    add(mat_vec(&k0, &bracket_values(&z, &le)), -1.0);
    add(mat_vec(&l0, &bracket_values(&kz, &e)), -1.0);
    add(mat_vec(&l0, &bracket_values(&z, &ke)), -1.0);
    Ok(acc)
}

/// Nijenhuis torsion N_K(zeta, eta) = [K zeta, K eta] + K^2 [zeta, eta]
/// - K [K zeta, eta] - K [zeta, K eta], evaluated at a point.
pub fn nijenhuis(
    k_form: &VectorOneFormTM,
    zeta: &VectorFieldTM,
    eta: &VectorFieldTM,
    at: &TangentPoint,
) -> Result<Vec<f64>> {
    let dim = 2 * k_form.dim();
    let order = 1 + k_form.depth.max(zeta.depth).max(eta.depth);
    let coords = seed_point(at, order)?;
    let k = k_form.entries(&coords)?;
    let z = zeta.components(&coords)?;
    let e = eta.components(&coords)?;
    let kz = taylor_mat_vec(&k, &z);
    let ke = taylor_mat_vec(&k, &e);
    let k0 = value_matrix(&k);

    let mut acc = vec![0.0; dim];
    let mut add = |v: Vec<f64>, sign: f64| {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += sign * x;
        }
    };
    add(bracket_values(&kz, &ke), 1.0);
    add(mat_vec(&k0, &mat_vec(&k0, &bracket_values(&z, &e))), 1.0);
    add(mat_vec(&k0, &bracket_values(&kz, &e)), -1.0);
    add(mat_vec(&k0, &bracket_values(&z, &ke)), -1.0);
    Ok(acc)
}

/// Lie derivative of a scalar field along a vector field at a point.
pub fn lie_scalar(zeta: &VectorFieldTM, f: &dyn ScalarField, at: &TangentPoint) -> Result<f64> {
    let order = (1 + f.depth()).max(zeta.depth);
    let coords = seed_point(at, order)?;
    let z = zeta.components(&coords)?;
    let fv = f.eval(&coords)?;
    if fv.order() < 1 {
        return Err(Error::Jet(crate::jets::JetError::OrderTooHigh {
            requested: 1 + f.depth(),
            max: fv.order() + f.depth(),
        }));
    }
    let dim = z.len();
    Ok((0..dim).map(|a| z[a].value() * fv.deriv(a).value()).sum())
}

//! From an energy function to the canonical geometry at a point: fundamental
//! tensor, fundamental 2-form, canonical spray, Barthel nonlinear connection,
//! adapted frame with projectors and almost complex structure, and the
//! Barthel curvature.
//!
//! Everything is computed by evaluating the energy over Taylor arithmetic and
//! applying polynomial calculus, so each derived quantity carries its own
//! truncated expansion around the point. A quantity that is d derivative
//! orders deep in E keeps `seed order - d` valid orders of its own.

use std::sync::Arc;

use once_cell::unsync::OnceCell;
use thiserror::Error;

use crate::fncalc::{VectorFieldTM, VectorOneFormTM};
use crate::jets::{seed_point, ScalarField, TangentPoint, Taylor};
use crate::util::{t1, t2, t3, t4, Mat, T3, T4};
use crate::{Error as CrateError, Result};

/// Condition-number threshold above which the fundamental tensor is treated
/// as singular and the point rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("singular fundamental tensor: condition estimate {cond:.3e}")]
    SingularMetric { cond: f64 },
}

/// Fundamental tensor g_ij = d/dy_i d/dy_j E and its inverse at a point.
pub struct MetricData {
    pub g: Mat,
    pub g_inv: Mat,
    /// One-norm condition estimate of g.
    pub cond: f64,
}

/// Spray and nonlinear-connection component data at a point:
/// G^h, N^h_i, G^h_ij and G^h_ijk (successive fiber derivatives).
pub struct SprayData {
    pub g: Vec<f64>,
    pub n: Mat,
    pub gc: T3,
    pub gc3: T4,
}

/// Adapted frame data in the natural frame: the horizontal basis vectors
/// delta_i as 2n-component columns, the projectors h and v, and the almost
/// complex structure F.
pub struct FrameData {
    pub delta: Mat,
    pub h: Mat,
    pub v: Mat,
    pub f: Mat,
}

/// Barthel curvature components R^i_jk = delta_k N^i_j - delta_j N^i_k.
pub struct BarthelCurvature {
    pub r: T3,
}

/// Taylor-valued geometry of one energy at one point. The seed order bounds
/// how many derivative levels remain available downstream.
pub(crate) struct GeometryCtx {
    pub n: usize,
    pub coords: Vec<Taylor>,
    pub e: Taylor,
    pub g: Vec<Vec<Taylor>>,
    pub g_inv: Vec<Vec<Taylor>>,
    pub cond: f64,
    spray: OnceCell<Vec<Taylor>>,
    nconn: OnceCell<Vec<Vec<Taylor>>>,
    gc: OnceCell<Vec<Vec<Vec<Taylor>>>>,
    gc3: OnceCell<Vec<Vec<Vec<Vec<Taylor>>>>>,
}

/// Invert a Taylor-valued matrix by Gauss-Jordan elimination with partial
/// pivoting on the value part. Returns the inverse and the one-norm
/// condition estimate of the value matrix.
fn invert_taylor(m: &[Vec<Taylor>]) -> Result<(Vec<Vec<Taylor>>, f64)> {
    let n = m.len();
    let order = m[0][0].order();
    let basis = m[0][0].basis().clone();
    let mut a: Vec<Vec<Taylor>> = m.to_vec();
    let mut inv: Vec<Vec<Taylor>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Taylor::constant(basis.clone(), if i == j { 1.0 } else { 0.0 }, order))
                .collect()
        })
        .collect();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].value().abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs < 1e-300 {
            return Err(GeomError::SingularMetric {
                cond: f64::INFINITY,
            }
            .into());
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot_inv = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&pivot_inv);
            inv[col][j] = inv[col][j].mul(&pivot_inv);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&factor.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&factor.mul(&inv[col][j]));
            }
        }
    }
    let norm1 = |mm: &[Vec<Taylor>]| -> f64 {
        (0..n)
            .map(|j| (0..n).map(|i| mm[i][j].value().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(GeomError::SingularMetric { cond }.into());
    }
    Ok((inv, cond))
}

impl GeometryCtx {
    /// Build from already seeded coordinates. Requires enough remaining
    /// orders to form the fundamental tensor.
    pub fn from_coords(field: &dyn ScalarField, coords: Vec<Taylor>) -> Result<GeometryCtx> {
        let n = field.dim();
        assert_eq!(coords.len(), 2 * n);
        let e = field.eval(&coords)?;
        if e.order() < 2 {
            return Err(crate::jets::JetError::OrderTooHigh {
                requested: coords[0].order() + 2,
                max: crate::jets::MAX_ORDER,
            }
            .into());
        }
        let g = t2(n, |i, j| e.deriv(n + i).deriv(n + j));
        let (g_inv, cond) = invert_taylor(&g)?;
        Ok(GeometryCtx {
            n,
            coords,
            e,
            g,
            g_inv,
            cond,
            spray: OnceCell::new(),
            nconn: OnceCell::new(),
            gc: OnceCell::new(),
            gc3: OnceCell::new(),
        })
    }

    pub fn at(field: &dyn ScalarField, p: &TangentPoint, order: usize) -> Result<GeometryCtx> {
        let coords = seed_point(p, order + field.depth())?;
        GeometryCtx::from_coords(field, coords)
    }

    fn need(&self, levels: usize, have: usize) -> Result<()> {
        if have < levels {
            return Err(crate::jets::JetError::OrderTooHigh {
                requested: self.coords[0].order() + levels - have,
                max: crate::jets::MAX_ORDER,
            }
            .into());
        }
        Ok(())
    }

    /// Spray coefficients G^h = g^{hr} (y^s d_s dy_r E - d_r E) / 2.
    pub fn spray(&self) -> Result<&Vec<Taylor>> {
        self.spray.get_or_try_init(|| {
            let n = self.n;
            self.need(2, self.e.order())?;
            let rhs: Vec<Taylor> = t1(n, |r| {
                let mut acc = self.e.deriv(r).neg();
                for s in 0..n {
                    acc = acc.add(&self.coords[n + s].mul(&self.e.deriv(s).deriv(n + r)));
                }
                acc
            });
            Ok(t1(n, |h| {
                let mut acc = self.g_inv[h][0].mul(&rhs[0]);
                for r in 1..n {
                    acc = acc.add(&self.g_inv[h][r].mul(&rhs[r]));
                }
                acc.scale(0.5)
            }))
        })
    }

    /// Nonlinear connection N^h_i = dy_i G^h.
    pub fn nconn(&self) -> Result<&Vec<Vec<Taylor>>> {
        self.nconn.get_or_try_init(|| {
            let spray = self.spray()?;
            self.need(1, spray[0].order())?;
            Ok(t2(self.n, |h, i| spray[h].deriv(self.n + i)))
        })
    }

    /// Berwald coefficients G^h_ij = dy_j N^h_i.
    pub fn gc(&self) -> Result<&Vec<Vec<Vec<Taylor>>>> {
        self.gc.get_or_try_init(|| {
            let nconn = self.nconn()?;
            self.need(1, nconn[0][0].order())?;
            Ok(t3(self.n, |h, i, j| nconn[h][i].deriv(self.n + j)))
        })
    }

    /// G^h_ijk = dy_k G^h_ij, the Berwald hv-curvature block.
    pub fn gc3(&self) -> Result<&Vec<Vec<Vec<Vec<Taylor>>>>> {
        self.gc3.get_or_try_init(|| {
            let gc = self.gc()?;
            self.need(1, gc[0][0][0].order())?;
            Ok(t4(self.n, |h, i, j, k| gc[h][i][j].deriv(self.n + k)))
        })
    }

    /// Horizontal frame derivative of a scalar Taylor:
    /// delta_j t = d_{x_j} t - N^h_j d_{y_h} t.
    pub fn delta(&self, j: usize, t: &Taylor) -> Result<Taylor> {
        let nconn = self.nconn()?;
        let mut acc = t.deriv(j);
        for h in 0..self.n {
            acc = acc.sub(&nconn[h][j].mul(&t.deriv(self.n + h)));
        }
        Ok(acc)
    }

    /// Barthel curvature R^i_jk = delta_k N^i_j - delta_j N^i_k as Taylor.
    pub fn barthel_r(&self) -> Result<Vec<Vec<Vec<Taylor>>>> {
        let nconn = self.nconn()?;
        self.need(1, nconn[0][0].order())?;
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut mi = Vec::with_capacity(self.n);
            for j in 0..self.n {
                let mut mj = Vec::with_capacity(self.n);
                for k in 0..self.n {
                    mj.push(
                        self.delta(k, &nconn[i][j])?
                            .sub(&self.delta(j, &nconn[i][k])?),
                    );
                }
                mi.push(mj);
            }
            out.push(mi);
        }
        Ok(out)
    }

    /// Fundamental 2-form over the natural frame, as values:
    /// Omega(dx_j, dx_i) = d_j dy_i E - d_i dy_j E, Omega(dy_j, dx_i) = g_ji.
    pub fn omega_values(&self) -> Mat {
        let n = self.n;
        let dim = 2 * n;
        let mut m = vec![vec![0.0; dim]; dim];
        for j in 0..n {
            for i in 0..n {
                let xx =
                    self.e.deriv(j).deriv(n + i).value() - self.e.deriv(i).deriv(n + j).value();
                m[j][i] = xx;
                m[n + j][i] = self.g[j][i].value();
                m[i][n + j] = -self.g[j][i].value();
            }
        }
        m
    }

    /// Canonical spray components (y, -2G) as values.
    pub fn spray_vector(&self) -> Result<Vec<f64>> {
        let spray = self.spray()?;
        let mut out: Vec<f64> = self.coords[self.n..2 * self.n]
            .iter()
            .map(Taylor::value)
            .collect();
        out.extend(spray.iter().map(|gh| -2.0 * gh.value()));
        Ok(out)
    }

    /// Gradient of E over the 2n coordinates, as values.
    pub fn de_values(&self) -> Vec<f64> {
        (0..2 * self.n).map(|a| self.e.deriv(a).value()).collect()
    }

    /// N^h_i values.
    pub fn nconn_values(&self) -> Result<Mat> {
        let nconn = self.nconn()?;
        Ok(t2(self.n, |h, i| nconn[h][i].value()))
    }

    /// Frame matrices (delta columns, h, v, F) as values.
    pub fn frame_values(&self) -> Result<FrameData> {
        let nv = self.nconn_values()?;
        Ok(frame_from_nconn(self.n, &nv))
    }
}

fn frame_from_nconn(n: usize, nconn: &Mat) -> FrameData {
    let dim = 2 * n;
    // delta_i = d/dx_i - N^h_i d/dy_h, stored as 2n-component columns
    let mut delta = vec![vec![0.0; n]; dim];
    for i in 0..n {
        delta[i][i] = 1.0;
        for h in 0..n {
            delta[n + h][i] = -nconn[h][i];
        }
    }
    // h(d/dx_i) = delta_i, h(d/dy_i) = 0
    let mut h = vec![vec![0.0; dim]; dim];
    for i in 0..n {
        h[i][i] = 1.0;
        for r in 0..n {
            h[n + r][i] = -nconn[r][i];
        }
    }
    let mut v = vec![vec![0.0; dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            v[a][b] = if a == b { 1.0 } else { 0.0 } - h[a][b];
        }
    }
    // F(d/dy_i) = delta_i, F(delta_i) = -d/dy_i, extended linearly:
    // F(d/dx_i) = N^j_i d/dx_j - (N^h_i N^j_h + delta^j_i) d/dy_j
    let mut f = vec![vec![0.0; dim]; dim];
    for i in 0..n {
        for j in 0..n {
            f[j][n + i] = if i == j { 1.0 } else { 0.0 };
            f[n + j][n + i] = -nconn[j][i];
            f[j][i] = nconn[j][i];
            let mut acc = if i == j { 1.0 } else { 0.0 };
            for hh in 0..n {
                acc += nconn[hh][i] * nconn[j][hh];
            }
            f[n + j][i] = -acc;
        }
    }
    FrameData { delta, h, v, f }
}

/// Fundamental tensor and inverse at a point.
pub fn metric(field: &dyn ScalarField, p: &TangentPoint) -> Result<MetricData> {
    let ctx = GeometryCtx::at(field, p, 2)?;
    Ok(MetricData {
        g: t2(ctx.n, |i, j| ctx.g[i][j].value()),
        g_inv: t2(ctx.n, |i, j| ctx.g_inv[i][j].value()),
        cond: ctx.cond,
    })
}

/// Fundamental 2-form over the natural frame at a point.
pub fn fundamental_form(field: &dyn ScalarField, p: &TangentPoint) -> Result<Mat> {
    let ctx = GeometryCtx::at(field, p, 2)?;
    Ok(ctx.omega_values())
}

/// Canonical spray coefficients G^h at a point.
pub fn spray(field: &dyn ScalarField, p: &TangentPoint) -> Result<Vec<f64>> {
    let ctx = GeometryCtx::at(field, p, 2)?;
    let g = ctx.spray()?;
    Ok(g.iter().map(Taylor::value).collect())
}

/// Nonlinear connection and its fiber derivatives at a point.
pub fn nonlinear_connection(field: &dyn ScalarField, p: &TangentPoint) -> Result<SprayData> {
    let ctx = GeometryCtx::at(field, p, 5)?;
    let n = ctx.n;
    let g = ctx.spray()?.iter().map(Taylor::value).collect();
    let nv = ctx.nconn_values()?;
    let gc = ctx.gc()?;
    let gc_v = t3(n, |h, i, j| gc[h][i][j].value());
    let gc3 = ctx.gc3()?;
    let gc3_v = t4(n, |h, i, j, k| gc3[h][i][j][k].value());
    Ok(SprayData {
        g,
        n: nv,
        gc: gc_v,
        gc3: gc3_v,
    })
}

/// Adapted frame, projectors, and almost complex structure at a point.
pub fn frame(field: &dyn ScalarField, p: &TangentPoint) -> Result<FrameData> {
    let ctx = GeometryCtx::at(field, p, 3)?;
    ctx.frame_values()
}

/// Barthel curvature components at a point.
pub fn barthel_curvature(field: &dyn ScalarField, p: &TangentPoint) -> Result<BarthelCurvature> {
    let ctx = GeometryCtx::at(field, p, 4)?;
    let r = ctx.barthel_r()?;
    Ok(BarthelCurvature {
        r: t3(ctx.n, |i, j, k| r[i][j][k].value()),
    })
}

/// Max-norm of i_S Omega + dE over the natural frame at a point; the
/// canonical spray is characterized by this residual vanishing.
pub fn euler_lagrange_residual(field: &dyn ScalarField, p: &TangentPoint) -> Result<f64> {
    let ctx = GeometryCtx::at(field, p, 2)?;
    let omega = ctx.omega_values();
    let s = ctx.spray_vector()?;
    let de = ctx.de_values();
    let dim = 2 * ctx.n;
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        let mut acc = de[a];
        for b in 0..dim {
            acc += s[b] * omega[b][a];
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// The canonical spray as a vector field on TM.
pub fn spray_field(field: Arc<dyn ScalarField>) -> VectorFieldTM {
    let n = field.dim();
    let depth = 2 + field.depth();
    VectorFieldTM::new(n, depth, move |coords| {
        let ctx = GeometryCtx::from_coords(field.as_ref(), coords.to_vec())?;
        let g = ctx.spray()?;
        let mut out: Vec<Taylor> = coords[n..2 * n].to_vec();
        out.extend(g.iter().map(|gh| gh.scale(-2.0)));
        Ok(out)
    })
}

#[allow(clippy::type_complexity)]
fn taylor_frame_matrices(
    ctx: &GeometryCtx,
) -> Result<(Vec<Vec<Taylor>>, Vec<Vec<Taylor>>, Vec<Vec<Taylor>>)> {
    let n = ctx.n;
    let dim = 2 * n;
    let nc = ctx.nconn()?;
    let order = nc[0][0].order();
    let basis = nc[0][0].basis().clone();
    let zero = || Taylor::constant(basis.clone(), 0.0, order);
    let one = || Taylor::constant(basis.clone(), 1.0, order);
    let mut h: Vec<Vec<Taylor>> = (0..dim)
        .map(|_| (0..dim).map(|_| zero()).collect())
        .collect();
    for i in 0..n {
        h[i][i] = one();
        for r in 0..n {
            h[n + r][i] = nc[r][i].neg();
        }
    }
    let mut v: Vec<Vec<Taylor>> = (0..dim)
        .map(|_| (0..dim).map(|_| zero()).collect())
        .collect();
    for a in 0..dim {
        for b in 0..dim {
            let idm = if a == b { one() } else { zero() };
            v[a][b] = idm.sub(&h[a][b]);
        }
    }
    let mut f: Vec<Vec<Taylor>> = (0..dim)
        .map(|_| (0..dim).map(|_| zero()).collect())
        .collect();
    for i in 0..n {
        for j in 0..n {
            f[j][n + i] = if i == j { one() } else { zero() };
            f[n + j][n + i] = nc[j][i].neg();
            f[j][i] = nc[j][i].clone();
            let mut acc = if i == j { one() } else { zero() };
            for hh in 0..n {
                acc = acc.add(&nc[hh][i].mul(&nc[j][hh]));
            }
            f[n + j][i] = acc.neg();
        }
    }
    Ok((h, v, f))
}

/// Horizontal projector of the Barthel connection as a vector 1-form.
pub fn h_form(field: Arc<dyn ScalarField>) -> VectorOneFormTM {
    let n = field.dim();
    let depth = 3 + field.depth();
    VectorOneFormTM::new(n, depth, move |coords| {
        let ctx = GeometryCtx::from_coords(field.as_ref(), coords.to_vec())?;
        Ok(taylor_frame_matrices(&ctx)?.0)
    })
}

/// Vertical projector of the Barthel connection as a vector 1-form.
pub fn v_form(field: Arc<dyn ScalarField>) -> VectorOneFormTM {
    let n = field.dim();
    let depth = 3 + field.depth();
    VectorOneFormTM::new(n, depth, move |coords| {
        let ctx = GeometryCtx::from_coords(field.as_ref(), coords.to_vec())?;
        Ok(taylor_frame_matrices(&ctx)?.1)
    })
}

/// Almost complex structure of the Barthel connection as a vector 1-form.
pub fn f_form(field: Arc<dyn ScalarField>) -> VectorOneFormTM {
    let n = field.dim();
    let depth = 3 + field.depth();
    VectorOneFormTM::new(n, depth, move |coords| {
        let ctx = GeometryCtx::from_coords(field.as_ref(), coords.to_vec())?;
        Ok(taylor_frame_matrices(&ctx)?.2)
    })
}

/// The Barthel connection Gamma = 2h - I as a vector 1-form.
pub fn gamma_form(field: Arc<dyn ScalarField>) -> VectorOneFormTM {
    let n = field.dim();
    let depth = 3 + field.depth();
    VectorOneFormTM::new(n, depth, move |coords| {
        let ctx = GeometryCtx::from_coords(field.as_ref(), coords.to_vec())?;
        let (h, _, _) = taylor_frame_matrices(&ctx)?;
        let dim = 2 * n;
        let basis = h[0][0].basis().clone();
        let order = h[0][0].order();
        Ok((0..dim)
            .map(|a| {
                (0..dim)
                    .map(|b| {
                        let idm =
                            Taylor::constant(basis.clone(), if a == b { 1.0 } else { 0.0 }, order);
                        h[a][b].scale(2.0).sub(&idm)
                    })
                    .collect()
            })
            .collect())
    })
}

/// Component of the fundamental tensor as a scalar field on TM.
pub struct MetricComponentField {
    field: Arc<dyn ScalarField>,
    pub i: usize,
    pub j: usize,
}

impl MetricComponentField {
    pub fn new(field: Arc<dyn ScalarField>, i: usize, j: usize) -> Self {
        MetricComponentField { field, i, j }
    }
}

impl ScalarField for MetricComponentField {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn depth(&self) -> usize {
        2 + self.field.depth()
    }

    fn eval(&self, coords: &[Taylor]) -> std::result::Result<Taylor, CrateError> {
        let n = self.dim();
        let e = self.field.eval(coords)?;
        Ok(e.deriv(n + self.i).deriv(n + self.j))
    }
}

/// Component of the canonical spray as a scalar field on TM.
pub struct SprayComponentField {
    field: Arc<dyn ScalarField>,
    pub h: usize,
}

impl SprayComponentField {
    pub fn new(field: Arc<dyn ScalarField>, h: usize) -> Self {
        SprayComponentField { field, h }
    }
}

impl ScalarField for SprayComponentField {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn depth(&self) -> usize {
        2 + self.field.depth()
    }

    fn eval(&self, coords: &[Taylor]) -> std::result::Result<Taylor, CrateError> {
        let ctx = GeometryCtx::from_coords(self.field.as_ref(), coords.to_vec())?;
        Ok(ctx.spray()?[self.h].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::zoo;
    use crate::jets::fd_partial;
    use crate::util::{mat_identity, mat_mul, mat_sub, max_abs1, max_abs2, max_abs3, max_abs4};

    fn pt(x: &[f64], y: &[f64]) -> TangentPoint {
        TangentPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn euclid_metric_is_identity() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let m = metric(f.as_ref(), &pt(&[0.3, -0.8], &[1.4, 0.2])).unwrap();
        assert!(max_abs2(&mat_sub(&m.g, &mat_identity(2))) < 1e-14);
        assert!(max_abs2(&mat_sub(&m.g_inv, &mat_identity(2))) < 1e-14);
    }

    #[test]
    fn polar_metric_is_diagonal() {
        let f = zoo::builtin_metric("polar", &[], 2).unwrap();
        let m = metric(f.as_ref(), &pt(&[2.0, 0.0], &[1.0, 1.0])).unwrap();
        assert!((m.g[0][0] - 1.0).abs() < 1e-14);
        assert!((m.g[1][1] - 4.0).abs() < 1e-14);
        assert!(m.g[0][1].abs() < 1e-14);
        let prod = mat_mul(&m.g, &m.g_inv);
        assert!(max_abs2(&mat_sub(&prod, &mat_identity(2))) < 1e-10);
    }

    #[test]
    fn randers_metric_component_vs_oracle() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.0, 0.0], &[1.0, 0.0]);
        let m = metric(f.as_ref(), &p).unwrap();
        assert!((m.g[0][0] - 1.21).abs() < 1e-12);
        let fd = fd_partial(f.as_ref(), &p, &[0, 0, 2, 0]).unwrap();
        assert!((m.g[0][0] - fd).abs() < 1e-7);
    }

    #[test]
    fn euclid_spray_vanishes() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let g = spray(f.as_ref(), &pt(&[0.5, -0.5], &[1.0, 2.0])).unwrap();
        assert!(max_abs1(&g) < 1e-14);
    }

    #[test]
    fn polar_spray_matches_christoffel_oracle() {
        // Polar-coordinate flat metric: gamma^r_tt = -r, gamma^t_rt = 1/r,
        // so 2G^r = -r yt^2 and 2G^t = 2 yr yt / r at (r, t) = (2, 0).
        let f = zoo::builtin_metric("polar", &[], 2).unwrap();
        let p = pt(&[2.0, 0.0], &[1.0, 1.0]);
        let g = spray(f.as_ref(), &p).unwrap();
        assert!((g[0] - -1.0).abs() < 1e-13, "G^1 = {}", g[0]);
        assert!((g[1] - 0.5).abs() < 1e-13, "G^2 = {}", g[1]);
        assert!(euler_lagrange_residual(f.as_ref(), &p).unwrap() < 1e-12);
    }

    #[test]
    fn spray_is_homogeneous_of_degree_two() {
        for name in zoo::BUILTIN_NAMES {
            let f = zoo::builtin_metric(name, &[], 2).unwrap();
            let mut x = vec![0.4, 0.9];
            f.adjust_base_point(&mut x);
            let p = pt(&x, &[0.8, 0.6]);
            let g1 = spray(f.as_ref(), &p).unwrap();
            let g2 = spray(f.as_ref(), &p.scaled_fiber(2.0).unwrap()).unwrap();
            for h in 0..2 {
                assert!(
                    (g2[h] - 4.0 * g1[h]).abs() < 1e-11 * (1.0 + g1[h].abs()),
                    "{name}: component {h}"
                );
            }
        }
    }

    #[test]
    fn polar_nonlinear_connection_vs_fd_oracle() {
        let f = zoo::builtin_metric("polar", &[], 2).unwrap();
        let p = pt(&[2.0, 0.0], &[1.0, 1.0]);
        let data = nonlinear_connection(f.as_ref(), &p).unwrap();
        // N^1_2 = dy_2 G^1 = -x1 y2 = -2
        assert!((data.n[0][1] - -2.0).abs() < 1e-12);
        let g1 = SprayComponentField::new(f.clone(), 0);
        let fd = fd_partial(&g1, &p, &[0, 0, 0, 1]).unwrap();
        assert!((data.n[0][1] - fd).abs() < 1e-6);
    }

    #[test]
    fn euclid_connection_data_vanishes() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let d = nonlinear_connection(f.as_ref(), &pt(&[0.1, 0.2], &[0.5, -1.0])).unwrap();
        assert!(max_abs2(&d.n) < 1e-14);
        assert!(max_abs3(&d.gc) < 1e-14);
        assert!(max_abs4(&d.gc3) < 1e-14);
    }

    #[test]
    fn conservation_d_h_e_vanishes() {
        for name in zoo::BUILTIN_NAMES {
            let f = zoo::builtin_metric(name, &[], 2).unwrap();
            let mut x = vec![-0.3, 0.7];
            f.adjust_base_point(&mut x);
            let p = pt(&x, &[1.1, -0.6]);
            let ctx = GeometryCtx::at(f.as_ref(), &p, 3).unwrap();
            for i in 0..2 {
                let d = ctx.delta(i, &ctx.e).unwrap().value();
                assert!(d.abs() < 1e-12, "{name}: delta_{i} E = {d}");
            }
        }
    }

    #[test]
    fn frame_identities() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.4, -0.2], &[0.9, 1.1]);
        let fr = frame(f.as_ref(), &p).unwrap();
        let dim = 4;
        let id = mat_identity(dim);
        let hv_sum = crate::util::t2(dim, |a, b| fr.h[a][b] + fr.v[a][b]);
        assert!(max_abs2(&mat_sub(&hv_sum, &id)) < 1e-12);
        assert!(max_abs2(&mat_sub(&mat_mul(&fr.h, &fr.h), &fr.h)) < 1e-12);
        assert!(max_abs2(&mat_sub(&mat_mul(&fr.v, &fr.v), &fr.v)) < 1e-12);
        assert!(max_abs2(&mat_mul(&fr.h, &fr.v)) < 1e-12);
        let f2 = mat_mul(&fr.f, &fr.f);
        let sum = crate::util::t2(dim, |a, b| f2[a][b] + id[a][b]);
        assert!(max_abs2(&sum) < 1e-12);
        // FJ = h and Fh = -J
        let (j, _) = crate::fncalc::natural_structures(2);
        let jm = j.matrix_at(&p).unwrap();
        let fj = mat_mul(&fr.f, &jm);
        assert!(max_abs2(&mat_sub(&fj, &fr.h)) < 1e-12);
        let fh = mat_mul(&fr.f, &fr.h);
        let neg_j = crate::util::t2(dim, |a, b| fh[a][b] + jm[a][b]);
        assert!(max_abs2(&neg_j) < 1e-12);
    }

    #[test]
    fn euclid_frame_is_block_trivial() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let fr = frame(f.as_ref(), &pt(&[0.0, 0.0], &[1.0, 2.0])).unwrap();
        // h = diag(identity, 0) and F swaps the blocks with a sign
        for a in 0..4 {
            for b in 0..4 {
                let expect_h = if a == b && a < 2 { 1.0 } else { 0.0 };
                assert!((fr.h[a][b] - expect_h).abs() < 1e-14);
                let expect_f = if a < 2 && b == a + 2 {
                    1.0
                } else if a >= 2 && b == a - 2 {
                    -1.0
                } else {
                    0.0
                };
                assert!((fr.f[a][b] - expect_f).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn barthel_curvature_flat_cases() {
        for name in ["euclid", "quartic"] {
            let f = zoo::builtin_metric(name, &[], 2).unwrap();
            let r = barthel_curvature(f.as_ref(), &pt(&[0.2, -0.4], &[0.9, 0.7])).unwrap();
            assert!(max_abs3(&r.r) < 1e-12, "{name}");
        }
    }

    #[test]
    fn barthel_curvature_antisymmetry() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let r = barthel_curvature(f.as_ref(), &pt(&[0.3, 0.5], &[1.2, -0.8]))
            .unwrap()
            .r;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!((r[i][j][k] + r[i][k][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn euler_lagrange_all_builtins() {
        for name in zoo::BUILTIN_NAMES {
            let f = zoo::builtin_metric(name, &[], 2).unwrap();
            let mut x = vec![0.6, -0.1];
            f.adjust_base_point(&mut x);
            let p = pt(&x, &[0.7, 1.3]);
            let r = euler_lagrange_residual(f.as_ref(), &p).unwrap();
            assert!(r < 1e-10, "{name}: EL residual {r}");
        }
    }

    #[test]
    fn gc3_is_totally_symmetric() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.5, -0.2], &[1.0, 0.8]);
        let d = nonlinear_connection(f.as_ref(), &p).unwrap();
        for h in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let base = d.gc3[h][i][j][k];
                        for (a, b, c) in [(i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                            assert!((base - d.gc3[h][a][b][c]).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn metric_is_degree_zero_homogeneous() {
        // g(x, 2y) = g(x, y)
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.3, -0.6], &[1.1, 0.7]);
        let g1 = metric(f.as_ref(), &p).unwrap().g;
        let g2 = metric(f.as_ref(), &p.scaled_fiber(2.0).unwrap()).unwrap().g;
        assert!(max_abs2(&mat_sub(&g1, &g2)) < 1e-12);
    }

    #[test]
    fn euclid_fundamental_form_blocks() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let omega = fundamental_form(f.as_ref(), &pt(&[0.4, 0.1], &[0.9, -0.3])).unwrap();
        let n = 2;
        for j in 0..2 * n {
            for i in 0..2 * n {
                let expect = if j >= n && i < n && j - n == i {
                    1.0
                } else if i >= n && j < n && i - n == j {
                    -1.0
                } else {
                    0.0
                };
                assert!((omega[j][i] - expect).abs() < 1e-14, "({j},{i})");
            }
        }
    }

    #[test]
    fn singular_metric_detected() {
        // E = y1^2/2 alone has a rank-1 fundamental tensor in dimension 2.
        let f = crate::frontend::expr::ExprField::parse("0.5*y1^2", 2).unwrap();
        let err = metric(f.as_ref(), &pt(&[0.0, 0.0], &[1.0, 1.0]));
        assert!(matches!(
            err,
            Err(CrateError::Geometry(GeomError::SingularMetric { .. }))
        ));
    }
}

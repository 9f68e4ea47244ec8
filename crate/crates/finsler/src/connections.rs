//! The four fundamental linear connections as coefficient systems in the
//! adapted frame, with their torsion and curvature blocks and covariant
//! differentiation.
//!
//! Each connection is determined by a vertical coefficient array V^k_ij and a
//! horizontal coefficient array H^k_ij acting through the frame rules
//! `D_{delta_j} e_i = H^k_ij e_k` and `D_{dy_j} e_i = V^k_ij e_k` (the same
//! coefficients for horizontal and vertical frame vectors, which encodes
//! D Gamma = D J = D F = 0):
//!
//! | kind       | V      | H        |
//! |------------|--------|----------|
//! | Berwald    | 0      | G^k_ij   |
//! | Cartan     | C^k_ij | Gamma^k_ij |
//! | Chern      | 0      | Gamma^k_ij |
//! | Hashiguchi | C^k_ij | G^k_ij   |
//!
//! Curvature blocks follow from the classical curvature of these rules.
//! Component convention: for adapted frame vectors the classical curvature
//! satisfies `K(e_j, e_k) dy_h = -Block^i_hjk dy_i` (see
//! [`CURVATURE_COMPONENT_SIGN`]), which reproduces the usual local formulas
//! such as R^i_hjk = A_jk{delta_k H^i_hj + H^m_hj H^i_mk} + V^i_hm R^m_jk.

use std::rc::Rc;
use std::sync::Arc;

use once_cell::unsync::OnceCell;

use crate::geometry::GeometryCtx;
use crate::jets::{ScalarField, TangentPoint, Taylor};
use crate::util::{t3, t4, T3, T4};
use crate::Result;

/// Components of the classical curvature on adapted frame vectors relate to
/// the stored blocks by K(e_j, e_k)(arg h) = sign * Block^i_hjk (frame
/// vector of the argument's type on the output). Likewise the Barthel
/// curvature 2-form satisfies R(d_j, d_k) = sign * R^i_jk dy_i, following
/// from [delta_j, delta_k] = R^i_jk dy_i and R = -v[h., h.].
pub const CURVATURE_COMPONENT_SIGN: f64 = -1.0;

/// One of the four fundamental linear connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    Berwald,
    Cartan,
    Chern,
    Hashiguchi,
}

impl ConnectionKind {
    pub const ALL: [ConnectionKind; 4] = [
        ConnectionKind::Berwald,
        ConnectionKind::Cartan,
        ConnectionKind::Chern,
        ConnectionKind::Hashiguchi,
    ];

    /// Vertical coefficients are the first Cartan tensor (else zero).
    pub fn vertical_is_cartan(self) -> bool {
        matches!(self, ConnectionKind::Cartan | ConnectionKind::Hashiguchi)
    }

    /// Horizontal coefficients are the Cartan Christoffel symbols (else the
    /// Berwald coefficients).
    pub fn horizontal_is_cartan(self) -> bool {
        matches!(self, ConnectionKind::Cartan | ConnectionKind::Chern)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::Berwald => "berwald",
            ConnectionKind::Cartan => "cartan",
            ConnectionKind::Chern => "chern",
            ConnectionKind::Hashiguchi => "hashiguchi",
        }
    }

    fn index(self) -> usize {
        match self {
            ConnectionKind::Berwald => 0,
            ConnectionKind::Cartan => 1,
            ConnectionKind::Chern => 2,
            ConnectionKind::Hashiguchi => 3,
        }
    }
}

/// Vertical and horizontal coefficient arrays of one connection at a point.
pub struct ConnectionCoefficients {
    pub kind: ConnectionKind,
    pub v: T3,
    pub h: T3,
}

/// Torsion blocks of a connection at a point, in the adapted frame.
///
/// `hh` holds the (v)h-torsion R^i_jk of T(delta_j, delta_k). The mixed
/// torsion T(delta_j, dy_k) splits into a vertical part `hv_v` (against
/// dy_m) and a horizontal part `hv_h` (against delta_m); a single array
/// cannot carry both. `vv` vanishes for all four connections.
pub struct TorsionComponents {
    pub hh: T3,
    pub hv_v: T3,
    pub hv_h: T3,
    pub vv: T3,
}

/// Curvature blocks of a connection at a point: h-curvature R^i_hjk,
/// hv-curvature P^i_hjk, v-curvature Q^i_hjk. Lower index order is
/// (argument h; direction j, direction k) with the direction pair
/// (horizontal, horizontal), (horizontal, vertical), (vertical, vertical)
/// respectively.
pub struct CurvatureComponents {
    pub rh: T4,
    pub phv: T4,
    pub qv: T4,
}

/// A direction in the adapted frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptedDirection {
    Horizontal(usize),
    Vertical(usize),
}

/// Selects one curvature block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureBlock {
    Rh,
    Phv,
    Qv,
}

type TT3 = Vec<Vec<Vec<Taylor>>>;
type TT4 = Vec<Vec<Vec<Vec<Taylor>>>>;

pub(crate) struct KindBlocks {
    pub v: TT3,
    pub h: TT3,
    pub rh: TT4,
    pub phv: TT4,
    pub qv: TT4,
}

/// Taylor-valued connection data over one geometry context.
pub(crate) struct ConnectionsCtx {
    pub geo: Rc<GeometryCtx>,
    gamma: OnceCell<TT3>,
    c_up: OnceCell<TT3>,
    c_low: OnceCell<TT3>,
    cdash: OnceCell<TT3>,
    rbar: OnceCell<TT3>,
    kinds: [OnceCell<KindBlocks>; 4],
}

impl ConnectionsCtx {
    pub fn new(geo: Rc<GeometryCtx>) -> Self {
        ConnectionsCtx {
            geo,
            gamma: OnceCell::new(),
            c_up: OnceCell::new(),
            c_low: OnceCell::new(),
            cdash: OnceCell::new(),
            rbar: OnceCell::new(),
            kinds: [
                OnceCell::new(),
                OnceCell::new(),
                OnceCell::new(),
                OnceCell::new(),
            ],
        }
    }

    fn n(&self) -> usize {
        self.geo.n
    }

    /// Lowered first Cartan tensor C_ijk = (dy_i dy_j dy_k E) / 2.
    pub fn c_low(&self) -> Result<&TT3> {
        self.c_low.get_or_try_init(|| {
            let n = self.n();
            let e = &self.geo.e;
            Ok(t3(n, |i, j, k| {
                e.deriv(n + i).deriv(n + j).deriv(n + k).scale(0.5)
            }))
        })
    }

    /// First Cartan tensor C^h_ij = g^{hl} C_lij.
    pub fn c_up(&self) -> Result<&TT3> {
        self.c_up.get_or_try_init(|| {
            let n = self.n();
            let low = self.c_low()?;
            Ok(t3(n, |h, i, j| {
                let mut acc = self.geo.g_inv[h][0].mul(&low[0][i][j]);
                for l in 1..n {
                    acc = acc.add(&self.geo.g_inv[h][l].mul(&low[l][i][j]));
                }
                acc
            }))
        })
    }

    /// Cartan horizontal coefficients
    /// Gamma^h_ij = g^{hl} (delta_i g_lj + delta_j g_il - delta_l g_ij) / 2.
    pub fn gamma(&self) -> Result<&TT3> {
        self.gamma.get_or_try_init(|| {
            let n = self.n();
            let dg = t3(n, |l, i, j| self.geo.delta(l, &self.geo.g[i][j]).unwrap());
            Ok(t3(n, |h, i, j| {
                let mut acc: Option<Taylor> = None;
                for l in 0..n {
                    let sym = dg[i][l][j].add(&dg[j][i][l]).sub(&dg[l][i][j]);
                    let term = self.geo.g_inv[h][l].mul(&sym);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term),
                    });
                }
                acc.unwrap().scale(0.5)
            }))
        })
    }

    /// Second Cartan tensor C'^h_ij = Gamma^h_ij - G^h_ij.
    pub fn cdash(&self) -> Result<&TT3> {
        self.cdash.get_or_try_init(|| {
            let n = self.n();
            let gamma = self.gamma()?;
            let gc = self.geo.gc()?;
            Ok(t3(n, |h, i, j| gamma[h][i][j].sub(&gc[h][i][j])))
        })
    }

    /// Barthel curvature R^i_jk as Taylor.
    pub fn rbar(&self) -> Result<&TT3> {
        self.rbar.get_or_try_init(|| self.geo.barthel_r())
    }

    fn zero3(&self) -> Result<TT3> {
        let gc = self.geo.gc()?;
        let basis = gc[0][0][0].basis().clone();
        let order = gc[0][0][0].order();
        Ok(t3(self.n(), |_, _, _| {
            Taylor::constant(basis.clone(), 0.0, order)
        }))
    }

    /// Coefficient arrays of a connection kind.
    pub fn coeffs(&self, kind: ConnectionKind) -> Result<(TT3, TT3)> {
        let v = if kind.vertical_is_cartan() {
            self.c_up()?.clone()
        } else {
            self.zero3()?
        };
        let h = if kind.horizontal_is_cartan() {
            self.gamma()?.clone()
        } else {
            self.geo.gc()?.clone()
        };
        Ok((v, h))
    }

    /// Coefficients plus curvature blocks of a kind, from the classical
    /// curvature of the frame rules.
    pub fn blocks(&self, kind: ConnectionKind) -> Result<&KindBlocks> {
        self.kinds[kind.index()].get_or_try_init(|| {
            let n = self.n();
            let (v, h) = self.coeffs(kind)?;
            let rbar = self.rbar()?;
            let gc = self.geo.gc()?;
            let delta_h = t4(n, |i, hh, j, k| self.geo.delta(k, &h[i][hh][j]).unwrap());
            let rh = t4(n, |i, hh, j, k| {
                let mut acc = delta_h[i][hh][j][k].sub(&delta_h[i][hh][k][j]);
                for m in 0..n {
                    acc = acc.add(&h[m][hh][j].mul(&h[i][m][k]));
                    acc = acc.sub(&h[m][hh][k].mul(&h[i][m][j]));
                    acc = acc.add(&v[i][hh][m].mul(&rbar[m][j][k]));
                }
                acc
            });
            let phv = t4(n, |i, hh, j, k| {
                let mut acc = h[i][hh][j].deriv(n + k);
                acc = acc.sub(&self.geo.delta(j, &v[i][hh][k])?);
                for m in 0..n {
                    acc = acc.add(&h[m][hh][j].mul(&v[i][m][k]));
                    acc = acc.add(&gc[m][j][k].mul(&v[i][hh][m]));
                    acc = acc.sub(&v[m][hh][k].mul(&h[i][m][j]));
                }
                Ok::<Taylor, crate::Error>(acc)
            });
            let phv = unwrap_t4(phv)?;
            let qv = t4(n, |i, hh, j, k| {
                let mut acc = v[i][hh][j].deriv(n + k).sub(&v[i][hh][k].deriv(n + j));
                for m in 0..n {
                    acc = acc.add(&v[m][hh][j].mul(&v[i][m][k]));
                    acc = acc.sub(&v[m][hh][k].mul(&v[i][m][j]));
                }
                acc
            });
            Ok(KindBlocks { v, h, rh, phv, qv })
        })
    }

    /// Torsion blocks (Taylor): hh = R^i_jk, hv vertical part H - G,
    /// hv horizontal part -V, vv = 0.
    pub fn torsion_taylor(&self, kind: ConnectionKind) -> Result<(TT3, TT3, TT3)> {
        let n = self.n();
        let (v, h) = self.coeffs(kind)?;
        let gc = self.geo.gc()?;
        let hh = self.rbar()?.clone();
        let hv_v = t3(n, |m, j, k| h[m][j][k].sub(&gc[m][j][k]));
        let hv_h = t3(n, |m, j, k| v[m][j][k].neg());
        Ok((hh, hv_v, hv_h))
    }

    /// Metricity blocks (Taylor): horizontal delta_k g_ij - H contractions,
    /// vertical dy_k g_ij - V contractions.
    pub fn metricity_taylor(&self, kind: ConnectionKind) -> Result<(TT3, TT3)> {
        let n = self.n();
        let (cv, ch) = self.coeffs(kind)?;
        let g = &self.geo.g;
        let mut nabla_h = Vec::with_capacity(n);
        for i in 0..n {
            let mut ti = Vec::with_capacity(n);
            for j in 0..n {
                let mut tj = Vec::with_capacity(n);
                for k in 0..n {
                    let mut acc = self.geo.delta(k, &g[i][j])?;
                    for m in 0..n {
                        acc = acc.sub(&ch[m][i][k].mul(&g[m][j]));
                        acc = acc.sub(&ch[m][j][k].mul(&g[i][m]));
                    }
                    tj.push(acc);
                }
                ti.push(tj);
            }
            nabla_h.push(ti);
        }
        let nabla_v = t3(n, |i, j, k| {
            let mut acc = g[i][j].deriv(n + k);
            for m in 0..n {
                acc = acc.sub(&cv[m][i][k].mul(&g[m][j]));
                acc = acc.sub(&cv[m][j][k].mul(&g[i][m]));
            }
            acc
        });
        Ok((nabla_h, nabla_v))
    }

    /// Horizontal covariant derivative of the first Cartan tensor with the
    /// kind's horizontal coefficients, stored as [i][h][k][j] with j the
    /// differentiation direction.
    pub fn hcov_c(&self, kind: ConnectionKind) -> Result<TT4> {
        let n = self.n();
        let c = self.c_up()?;
        let h = if kind.horizontal_is_cartan() {
            self.gamma()?.clone()
        } else {
            self.geo.gc()?.clone()
        };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut ti = Vec::with_capacity(n);
            for hh in 0..n {
                let mut th = Vec::with_capacity(n);
                for k in 0..n {
                    let mut tk = Vec::with_capacity(n);
                    for j in 0..n {
                        let mut acc = self.geo.delta(j, &c[i][hh][k])?;
                        for m in 0..n {
                            acc = acc.add(&h[i][m][j].mul(&c[m][hh][k]));
                            acc = acc.sub(&h[m][hh][j].mul(&c[i][m][k]));
                            acc = acc.sub(&h[m][k][j].mul(&c[i][hh][m]));
                        }
                        tk.push(acc);
                    }
                    th.push(tk);
                }
                ti.push(th);
            }
            out.push(ti);
        }
        Ok(out)
    }

    /// Covariant derivative of a (1,3) component block in an adapted frame
    /// direction: frame derivative of each component plus one coefficient
    /// correction per slot.
    pub fn cov_deriv_block(
        &self,
        kind: ConnectionKind,
        block: &TT4,
        dir: AdaptedDirection,
    ) -> Result<T4> {
        let n = self.n();
        let (cv, ch) = self.coeffs(kind)?;
        let (w, d) = match dir {
            AdaptedDirection::Horizontal(d) => (&ch, d),
            AdaptedDirection::Vertical(d) => (&cv, d),
        };
        let mut out = t4(n, |_, _, _, _| 0.0);
        for i in 0..n {
            for hh in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let lead = match dir {
                            AdaptedDirection::Horizontal(dd) => {
                                self.geo.delta(dd, &block[i][hh][j][k])?.value()
                            }
                            AdaptedDirection::Vertical(dd) => {
                                block[i][hh][j][k].deriv(n + dd).value()
                            }
                        };
                        let mut acc = lead;
                        for m in 0..n {
                            acc += w[i][m][d].value() * block[m][hh][j][k].value();
                            acc -= w[m][hh][d].value() * block[i][m][j][k].value();
                            acc -= w[m][j][d].value() * block[i][hh][m][k].value();
                            acc -= w[m][k][d].value() * block[i][hh][j][m].value();
                        }
                        out[i][hh][j][k] = acc;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Covariant derivative of a (1,2) component tensor (one upper, two
    /// lower slots), as for the Barthel curvature 2-form.
    pub fn cov_deriv_t3(
        &self,
        kind: ConnectionKind,
        tensor: &TT3,
        dir: AdaptedDirection,
    ) -> Result<T3> {
        let n = self.n();
        let (cv, ch) = self.coeffs(kind)?;
        let (w, d) = match dir {
            AdaptedDirection::Horizontal(d) => (&ch, d),
            AdaptedDirection::Vertical(d) => (&cv, d),
        };
        let mut out = t3(n, |_, _, _| 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lead = match dir {
                        AdaptedDirection::Horizontal(dd) => {
                            self.geo.delta(dd, &tensor[i][j][k])?.value()
                        }
                        AdaptedDirection::Vertical(dd) => tensor[i][j][k].deriv(n + dd).value(),
                    };
                    let mut acc = lead;
                    for m in 0..n {
                        acc += w[i][m][d].value() * tensor[m][j][k].value();
                        acc -= w[m][j][d].value() * tensor[i][m][k].value();
                        acc -= w[m][k][d].value() * tensor[i][j][m].value();
                    }
                    out[i][j][k] = acc;
                }
            }
        }
        Ok(out)
    }
}

fn unwrap_t4(t: Vec<Vec<Vec<Vec<Result<Taylor>>>>>) -> Result<TT4> {
    t.into_iter()
        .map(|a| {
            a.into_iter()
                .map(|b| {
                    b.into_iter()
                        .map(|c| c.into_iter().collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

pub(crate) fn values3(t: &TT3) -> T3 {
    t.iter()
        .map(|a| {
            a.iter()
                .map(|b| b.iter().map(Taylor::value).collect())
                .collect()
        })
        .collect()
}

pub(crate) fn values4(t: &TT4) -> T4 {
    t.iter().map(values3).collect()
}

/// First Cartan tensor at a point: (C^k_ij, lowered C_ijk).
pub fn cartan_tensor_first(field: &dyn ScalarField, p: &TangentPoint) -> Result<(T3, T3)> {
    let geo = GeometryCtx::at(field, p, 3)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    Ok((values3(ctx.c_up()?), values3(ctx.c_low()?)))
}

/// Cartan horizontal coefficients Gamma^h_ij at a point.
pub fn cartan_coeffs(field: &dyn ScalarField, p: &TangentPoint) -> Result<T3> {
    let geo = GeometryCtx::at(field, p, 4)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    Ok(values3(ctx.gamma()?))
}

/// Second Cartan tensor C'^k_ij = Gamma^k_ij - G^k_ij at a point.
pub fn cartan_tensor_second(field: &dyn ScalarField, p: &TangentPoint) -> Result<T3> {
    let geo = GeometryCtx::at(field, p, 4)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    Ok(values3(ctx.cdash()?))
}

/// Coefficient arrays of a connection at a point.
pub fn coefficients(
    kind: ConnectionKind,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<ConnectionCoefficients> {
    let geo = GeometryCtx::at(field, p, 4)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    let (v, h) = ctx.coeffs(kind)?;
    Ok(ConnectionCoefficients {
        kind,
        v: values3(&v),
        h: values3(&h),
    })
}

/// Torsion blocks of a connection at a point.
pub fn torsion(
    kind: ConnectionKind,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<TorsionComponents> {
    let geo = GeometryCtx::at(field, p, 4)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    let (hh, hv_v, hv_h) = ctx.torsion_taylor(kind)?;
    let n = ctx.geo.n;
    Ok(TorsionComponents {
        hh: values3(&hh),
        hv_v: values3(&hv_v),
        hv_h: values3(&hv_h),
        vv: t3(n, |_, _, _| 0.0),
    })
}

/// Curvature blocks of a connection at a point.
pub fn curvature(
    kind: ConnectionKind,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<CurvatureComponents> {
    let geo = GeometryCtx::at(field, p, 5)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    let blocks = ctx.blocks(kind)?;
    Ok(CurvatureComponents {
        rh: values4(&blocks.rh),
        phv: values4(&blocks.phv),
        qv: values4(&blocks.qv),
    })
}

/// Horizontal covariant derivative of the first Cartan tensor, C^i_hk|j,
/// with the horizontal coefficients of the given kind (Cartan or
/// Hashiguchi). Indexed [i][h][k][j], j the direction.
pub fn horizontal_cov_deriv_c(
    kind: ConnectionKind,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<T4> {
    let geo = GeometryCtx::at(field, p, 4)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    Ok(values4(&ctx.hcov_c(kind)?))
}

/// Covariant derivative of one curvature block in an adapted direction.
pub fn cov_deriv_curvature(
    kind: ConnectionKind,
    block: CurvatureBlock,
    dir: AdaptedDirection,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<T4> {
    let geo = GeometryCtx::at(field, p, 6 - field.depth().min(6))?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    let blocks = ctx.blocks(kind)?;
    let target = match block {
        CurvatureBlock::Rh => &blocks.rh,
        CurvatureBlock::Phv => &blocks.phv,
        CurvatureBlock::Qv => &blocks.qv,
    };
    ctx.cov_deriv_block(kind, target, dir)
}

/// Metricity blocks (horizontal, vertical) of nabla g at a point; both
/// indexed [i][j][k] with k the direction.
pub fn metricity(
    kind: ConnectionKind,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<(T3, T3)> {
    let geo = GeometryCtx::at(field, p, 4)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    let (h, v) = ctx.metricity_taylor(kind)?;
    Ok((values3(&h), values3(&v)))
}

type AdaptedEval = dyn Fn(&[Taylor]) -> Result<(Vec<Taylor>, Vec<Taylor>)> + Send + Sync;

/// A vector field on TM given in the adapted frame: horizontal components
/// a^i against delta_i and vertical components b^i against dy_i.
#[derive(Clone)]
pub struct AdaptedVectorField {
    n: usize,
    depth: usize,
    eval: Arc<AdaptedEval>,
}

impl AdaptedVectorField {
    pub fn new(
        n: usize,
        depth: usize,
        eval: impl Fn(&[Taylor]) -> Result<(Vec<Taylor>, Vec<Taylor>)> + Send + Sync + 'static,
    ) -> Self {
        AdaptedVectorField {
            n,
            depth,
            eval: Arc::new(eval),
        }
    }

    /// Constant components in the adapted frame.
    pub fn constant(n: usize, horizontal: Vec<f64>, vertical: Vec<f64>) -> Self {
        AdaptedVectorField::new(n, 0, move |coords| {
            let basis = coords[0].basis().clone();
            let order = coords[0].order();
            Ok((
                horizontal
                    .iter()
                    .map(|&c| Taylor::constant(basis.clone(), c, order))
                    .collect(),
                vertical
                    .iter()
                    .map(|&c| Taylor::constant(basis.clone(), c, order))
                    .collect(),
            ))
        })
    }

    /// JS = C, the Liouville field: purely vertical with components y.
    pub fn liouville(n: usize) -> Self {
        AdaptedVectorField::new(n, 0, move |coords| {
            let basis = coords[0].basis().clone();
            let order = coords[0].order();
            let zero: Vec<Taylor> = (0..n)
                .map(|_| Taylor::constant(basis.clone(), 0.0, order))
                .collect();
            Ok((zero, coords[n..2 * n].to_vec()))
        })
    }
}

/// Covariant derivative of an adapted-frame vector field along an adapted
/// direction, returning (horizontal, vertical) component values. The h/v
/// split is preserved; each part receives the same coefficient corrections.
pub fn covariant_derivative(
    kind: ConnectionKind,
    x: &AdaptedVectorField,
    dir: AdaptedDirection,
    field: &dyn ScalarField,
    p: &TangentPoint,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.n;
    let order = 4.max(1 + x.depth);
    let geo = GeometryCtx::at(field, p, order)?;
    let ctx = ConnectionsCtx::new(Rc::new(geo));
    let (cv, ch) = ctx.coeffs(kind)?;
    let (a, b) = (x.eval)(&ctx.geo.coords)?;
    let (w, d) = match dir {
        AdaptedDirection::Horizontal(d) => (&ch, d),
        AdaptedDirection::Vertical(d) => (&cv, d),
    };
    let lead = |comps: &[Taylor], i: usize| -> Result<f64> {
        Ok(match dir {
            AdaptedDirection::Horizontal(dd) => ctx.geo.delta(dd, &comps[i])?.value(),
            AdaptedDirection::Vertical(dd) => comps[i].deriv(n + dd).value(),
        })
    };
    let mut out_h = vec![0.0; n];
    let mut out_v = vec![0.0; n];
    for i in 0..n {
        let mut acc_h = lead(&a, i)?;
        let mut acc_v = lead(&b, i)?;
        for m in 0..n {
            acc_h += w[i][m][d].value() * a[m].value();
            acc_v += w[i][m][d].value() * b[m].value();
        }
        out_h[i] = acc_h;
        out_v[i] = acc_v;
    }
    Ok((out_h, out_v))
}

/// A tangent vector split into adapted-frame parts, as values.
#[derive(Clone, Debug)]
pub struct AdaptedVec {
    pub h: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdaptedVec {
    pub fn zero(n: usize) -> Self {
        AdaptedVec {
            h: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn axpy(&mut self, s: f64, other: &AdaptedVec) {
        for (a, b) in self.h.iter_mut().zip(&other.h) {
            *a += s * b;
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        crate::util::max_abs1(&self.h).max(crate::util::max_abs1(&self.v))
    }
}

/// Part of the adapted frame a typed frame vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Horizontal,
    Vertical,
}

/// An adapted frame vector: delta_idx or dy_idx.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameVec {
    pub part: Part,
    pub idx: usize,
}

impl FrameVec {
    pub fn all(n: usize) -> Vec<FrameVec> {
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            out.push(FrameVec {
                part: Part::Horizontal,
                idx: i,
            });
        }
        for i in 0..n {
            out.push(FrameVec {
                part: Part::Vertical,
                idx: i,
            });
        }
        out
    }
}

/// Classical curvature K(a, b) applied to the frame argument `arg`, from the
/// stored blocks and the component sign convention. The result lies in the
/// same part as the argument.
pub(crate) fn curvature_apply(
    blocks: &KindBlocks,
    n: usize,
    a: FrameVec,
    b: FrameVec,
    arg: FrameVec,
) -> AdaptedVec {
    let mut out = AdaptedVec::zero(n);
    let h = arg.idx;
    let comp = |i: usize| -> f64 {
        let raw = match (a.part, b.part) {
            (Part::Horizontal, Part::Horizontal) => blocks.rh[i][h][a.idx][b.idx].value(),
            (Part::Horizontal, Part::Vertical) => blocks.phv[i][h][a.idx][b.idx].value(),
            (Part::Vertical, Part::Horizontal) => -blocks.phv[i][h][b.idx][a.idx].value(),
            (Part::Vertical, Part::Vertical) => blocks.qv[i][h][a.idx][b.idx].value(),
        };
        CURVATURE_COMPONENT_SIGN * raw
    };
    for i in 0..n {
        match arg.part {
            Part::Horizontal => out.h[i] = comp(i),
            Part::Vertical => out.v[i] = comp(i),
        }
    }
    out
}

impl std::ops::Index<usize> for AdaptedVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        let n = self.h.len();
        if i < n {
            &self.h[i]
        } else {
            &self.v[i - n]
        }
    }
}

/// Classical torsion T(a, b) on typed frame vectors, as an adapted vector,
/// from the kind's torsion blocks evaluated at the point.
pub(crate) fn torsion_apply(
    hh: &T3,
    hv_v: &T3,
    hv_h: &T3,
    n: usize,
    a: FrameVec,
    b: FrameVec,
) -> AdaptedVec {
    let mut out = AdaptedVec::zero(n);
    match (a.part, b.part) {
        (Part::Horizontal, Part::Horizontal) => {
            for m in 0..n {
                // T(delta_j, delta_k) = -R^m_jk dy_m
                out.v[m] = -hh[m][a.idx][b.idx];
            }
        }
        (Part::Horizontal, Part::Vertical) => {
            for m in 0..n {
                out.v[m] = hv_v[m][a.idx][b.idx];
                out.h[m] = hv_h[m][a.idx][b.idx];
            }
        }
        (Part::Vertical, Part::Horizontal) => {
            for m in 0..n {
                out.v[m] = -hv_v[m][b.idx][a.idx];
                out.h[m] = -hv_h[m][b.idx][a.idx];
            }
        }
        (Part::Vertical, Part::Vertical) => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::zoo;
    use crate::jets::fd_partial;
    use crate::util::{max_abs3, max_abs4};

    fn pt(x: &[f64], y: &[f64]) -> TangentPoint {
        TangentPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn riemannian_cartan_tensor_vanishes() {
        for name in ["euclid", "polar", "riem-diag"] {
            let f = zoo::builtin_metric(name, &[], 2).unwrap();
            let mut x = vec![0.4, -0.6];
            f.adjust_base_point(&mut x);
            let p = pt(&x, &[1.0, 0.7]);
            let (c_up, c_low) = cartan_tensor_first(f.as_ref(), &p).unwrap();
            assert!(max_abs3(&c_up) < 1e-13, "{name}");
            assert!(max_abs3(&c_low) < 1e-13, "{name}");
        }
    }

    #[test]
    fn randers_cartan_tensor_witness() {
        // At x = 0, y = (0, 1) the closed form gives
        // C_111 = (dy_1 g_11) / 2 = 3 F_1 F_11 / 2 = 3 * 0.1 * 1 / 2 = 0.15,
        // confirmed by the finite-difference oracle on g_11.
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.0, 0.0], &[0.0, 1.0]);
        let (_, c_low) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        assert!(
            (c_low[0][0][0] - 0.15).abs() < 1e-12,
            "C_111 = {}",
            c_low[0][0][0]
        );
        let g11 = crate::geometry::MetricComponentField::new(f.clone(), 0, 0);
        let fd = fd_partial(&g11, &p, &[0, 0, 1, 0]).unwrap();
        assert!((2.0 * c_low[0][0][0] - fd).abs() < 1e-6);
        // along the drift direction y = (1, 0) this component vanishes
        let p2 = pt(&[0.0, 0.0], &[1.0, 0.0]);
        let (_, c2) = cartan_tensor_first(f.as_ref(), &p2).unwrap();
        assert!(c2[0][0][0].abs() < 1e-12);
        let fd2 = fd_partial(&g11, &p2, &[0, 0, 1, 0]).unwrap();
        assert!(fd2.abs() < 1e-7);
    }

    #[test]
    fn cartan_tensor_spray_contraction_vanishes() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.3, -0.2], &[0.8, 1.1]);
        let (c_up, c_low) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        let y = p.y();
        for k in 0..2 {
            for j in 0..2 {
                let up: f64 = (0..2).map(|i| c_up[k][i][j] * y[i]).sum();
                assert!(up.abs() < 1e-12);
                let low: f64 = (0..2).map(|i| c_low[k][i][j] * y[i]).sum();
                assert!(low.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polar_cartan_coeffs_match_christoffel() {
        let f = zoo::builtin_metric("polar", &[], 2).unwrap();
        let p = pt(&[2.0, 0.0], &[1.0, 1.0]);
        let gamma = cartan_coeffs(f.as_ref(), &p).unwrap();
        // gamma^r_tt = -r = -2, gamma^t_rt = 1/r = 0.5
        assert!((gamma[0][1][1] - -2.0).abs() < 1e-12);
        assert!((gamma[1][0][1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn riemannian_gamma_equals_berwald_coeffs() {
        let f = zoo::builtin_metric("riem-diag", &[], 2).unwrap();
        let p = pt(&[0.5, -0.7], &[1.2, 0.4]);
        let gamma = cartan_coeffs(f.as_ref(), &p).unwrap();
        let spray = crate::geometry::nonlinear_connection(f.as_ref(), &p).unwrap();
        let mut resid: f64 = 0.0;
        for h in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    resid = resid.max((gamma[h][i][j] - spray.gc[h][i][j]).abs());
                }
            }
        }
        assert!(resid < 1e-10, "Gamma vs G residual {resid}");
    }

    #[test]
    fn cdash_properties_on_randers() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.4, 0.1], &[0.9, -0.6]);
        let cd = cartan_tensor_second(f.as_ref(), &p).unwrap();
        assert!(max_abs3(&cd) > 1e-4, "C' should not vanish on randers");
        // spray contraction C'(eta, S) = 0
        let y = p.y();
        for k in 0..2 {
            for j in 0..2 {
                let s: f64 = (0..2).map(|i| cd[k][i][j] * y[i]).sum();
                assert!(s.abs() < 1e-11);
            }
        }
        // lowered version totally symmetric
        let m = crate::geometry::metric(f.as_ref(), &p).unwrap();
        let low =
            |a: usize, b: usize, c: usize| -> f64 { (0..2).map(|l| m.g[a][l] * cd[l][b][c]).sum() };
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let x = low(a, b, c);
                    for (p1, p2, p3) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        assert!((x - low(p1, p2, p3)).abs() < 1e-10);
                    }
                }
            }
        }
        // Riemannian case vanishes
        let rf = zoo::builtin_metric("polar", &[], 2).unwrap();
        let rp = pt(&[1.5, 0.3], &[1.0, 0.8]);
        assert!(max_abs3(&cartan_tensor_second(rf.as_ref(), &rp).unwrap()) < 1e-11);
    }

    #[test]
    fn coefficient_table_per_kind() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.2, 0.6], &[1.1, 0.5]);
        let (c_up, _) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        let gamma = cartan_coeffs(f.as_ref(), &p).unwrap();
        let gc = crate::geometry::nonlinear_connection(f.as_ref(), &p)
            .unwrap()
            .gc;
        for kind in ConnectionKind::ALL {
            let co = coefficients(kind, f.as_ref(), &p).unwrap();
            let (v_ref, h_ref) = match kind {
                ConnectionKind::Berwald => (None, &gc),
                ConnectionKind::Cartan => (Some(&c_up), &gamma),
                ConnectionKind::Chern => (None, &gamma),
                ConnectionKind::Hashiguchi => (Some(&c_up), &gc),
            };
            for h in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let expect_v = v_ref.map_or(0.0, |t| t[h][i][j]);
                        assert!((co.v[h][i][j] - expect_v).abs() < 1e-12, "{kind:?} V");
                        assert!((co.h[h][i][j] - h_ref[h][i][j]).abs() < 1e-12, "{kind:?} H");
                    }
                }
            }
        }
    }

    #[test]
    fn process_diagram_differences() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[-0.3, 0.5], &[0.7, 1.2]);
        let (c_up, _) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        let cd = cartan_tensor_second(f.as_ref(), &p).unwrap();
        let get = |k| coefficients(k, f.as_ref(), &p).unwrap();
        let (ber, car, che, has) = (
            get(ConnectionKind::Berwald),
            get(ConnectionKind::Cartan),
            get(ConnectionKind::Chern),
            get(ConnectionKind::Hashiguchi),
        );
        let mut worst: f64 = 0.0;
        for h in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    // Hashiguchi - Berwald = (C, 0)
                    worst = worst.max((has.v[h][i][j] - ber.v[h][i][j] - c_up[h][i][j]).abs());
                    worst = worst.max((has.h[h][i][j] - ber.h[h][i][j]).abs());
                    // Cartan - Hashiguchi = (0, C')
                    worst = worst.max((car.v[h][i][j] - has.v[h][i][j]).abs());
                    worst = worst.max((car.h[h][i][j] - has.h[h][i][j] - cd[h][i][j]).abs());
                    // Chern - Berwald = (0, C')
                    worst = worst.max((che.v[h][i][j] - ber.v[h][i][j]).abs());
                    worst = worst.max((che.h[h][i][j] - ber.h[h][i][j] - cd[h][i][j]).abs());
                    // Cartan - Chern = (C, 0)
                    worst = worst.max((car.v[h][i][j] - che.v[h][i][j] - c_up[h][i][j]).abs());
                    worst = worst.max((car.h[h][i][j] - che.h[h][i][j]).abs());
                }
            }
        }
        assert!(worst < 1e-12, "process diagram residual {worst}");
    }

    #[test]
    fn torsion_table_per_kind() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.5, -0.4], &[1.3, 0.6]);
        let (c_up, _) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        let cd = cartan_tensor_second(f.as_ref(), &p).unwrap();
        let rbar = crate::geometry::barthel_curvature(f.as_ref(), &p)
            .unwrap()
            .r;
        for kind in ConnectionKind::ALL {
            let t = torsion(kind, f.as_ref(), &p).unwrap();
            assert!(max_abs3(&t.vv) == 0.0);
            let mut resid: f64 = 0.0;
            for m in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        resid = resid.max((t.hh[m][j][k] - rbar[m][j][k]).abs());
                        let (ev, eh) = match kind {
                            ConnectionKind::Berwald => (0.0, 0.0),
                            ConnectionKind::Cartan => (cd[m][j][k], -c_up[m][j][k]),
                            ConnectionKind::Chern => (cd[m][j][k], 0.0),
                            ConnectionKind::Hashiguchi => (0.0, -c_up[m][j][k]),
                        };
                        resid = resid.max((t.hv_v[m][j][k] - ev).abs());
                        resid = resid.max((t.hv_h[m][j][k] - eh).abs());
                    }
                }
            }
            assert!(resid < 1e-11, "{kind:?} torsion table residual {resid}");
        }
    }

    #[test]
    fn euclid_curvature_all_zero() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let p = pt(&[0.2, 0.8], &[1.0, -0.5]);
        for kind in ConnectionKind::ALL {
            let c = curvature(kind, f.as_ref(), &p).unwrap();
            assert!(max_abs4(&c.rh) < 1e-13);
            assert!(max_abs4(&c.phv) < 1e-13);
            assert!(max_abs4(&c.qv) < 1e-13);
        }
    }

    #[test]
    fn quartic_curvature_structure() {
        // Locally Minkowski: horizontal blocks vanish, and in dimension 3
        // the v-curvature of the Cartan and Hashiguchi connections does not
        // (in dimension 2 the Cartan tensor has a single essential component
        // and the v-curvature vanishes identically). The v-curvature must
        // match its direct product form A_jk{C^m_hk C^i_mj}.
        let n = 3;
        let f = zoo::builtin_metric("quartic", &[], n).unwrap();
        let p = pt(&[0.1, -0.9, 0.4], &[1.0, 0.62, -0.85]);
        let (c_up, _) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        for kind in [ConnectionKind::Cartan, ConnectionKind::Hashiguchi] {
            let c = curvature(kind, f.as_ref(), &p).unwrap();
            assert!(max_abs4(&c.rh) < 1e-11, "{kind:?}");
            assert!(max_abs4(&c.phv) < 1e-11, "{kind:?}");
            assert!(
                max_abs4(&c.qv) > 1e-3,
                "{kind:?} v-curvature should witness"
            );
            let mut resid: f64 = 0.0;
            for i in 0..n {
                for h in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let direct: f64 = (0..n)
                                .map(|m| {
                                    c_up[m][h][k] * c_up[i][m][j] - c_up[m][h][j] * c_up[i][m][k]
                                })
                                .sum();
                            resid = resid.max((c.qv[i][h][j][k] - direct).abs());
                        }
                    }
                }
            }
            assert!(resid < 1e-11, "{kind:?} Qv vs direct product {resid}");
        }
        for kind in [ConnectionKind::Berwald, ConnectionKind::Chern] {
            let c = curvature(kind, f.as_ref(), &p).unwrap();
            assert!(max_abs4(&c.qv) < 1e-13, "{kind:?} Qv must vanish");
        }
        // dimension-2 degeneration: all v-curvatures vanish
        let f2 = zoo::builtin_metric("quartic", &[], 2).unwrap();
        let p2 = pt(&[0.1, -0.9], &[1.0, 0.62]);
        for kind in ConnectionKind::ALL {
            let c = curvature(kind, f2.as_ref(), &p2).unwrap();
            assert!(max_abs4(&c.qv) < 1e-12, "{kind:?} Qv in dimension 2");
        }
    }

    #[test]
    fn hashiguchi_phv_matches_printed_assembly() {
        // P*^i_hjk = dy_k G^i_hj - C^i_hk*|j must agree with the classical
        // curvature route.
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.3, 0.2], &[1.0, 0.4]);
        let c = curvature(ConnectionKind::Hashiguchi, f.as_ref(), &p).unwrap();
        let gc3 = crate::geometry::nonlinear_connection(f.as_ref(), &p)
            .unwrap()
            .gc3;
        let hcov = horizontal_cov_deriv_c(ConnectionKind::Hashiguchi, f.as_ref(), &p).unwrap();
        let mut resid: f64 = 0.0;
        for i in 0..2 {
            for h in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let printed = gc3[i][h][j][k] - hcov[i][h][k][j];
                        resid = resid.max((c.phv[i][h][j][k] - printed).abs());
                    }
                }
            }
        }
        assert!(
            resid < 1e-10,
            "Hashiguchi hv-curvature assembly residual {resid}"
        );
    }

    #[test]
    fn cartan_phv_matches_printed_assembly() {
        // P^i_hjk = dy_k Gamma^i_hj - C^i_hk|j + C^i_hm P^m_jk with
        // P^m_jk = G^m_jk - Gamma^m_jk.
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[-0.2, 0.4], &[0.8, 1.1]);
        let geo = GeometryCtx::at(f.as_ref(), &p, 5).unwrap();
        let ctx = ConnectionsCtx::new(Rc::new(geo));
        let gamma = ctx.gamma().unwrap().clone();
        let n = 2;
        let dy_gamma = t4(n, |i, h, j, k| gamma[i][h][j].deriv(n + k).value());
        let c = curvature(ConnectionKind::Cartan, f.as_ref(), &p).unwrap();
        let hcov = horizontal_cov_deriv_c(ConnectionKind::Cartan, f.as_ref(), &p).unwrap();
        let (c_up, _) = cartan_tensor_first(f.as_ref(), &p).unwrap();
        let cd = cartan_tensor_second(f.as_ref(), &p).unwrap();
        let mut resid: f64 = 0.0;
        for i in 0..n {
            for h in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut printed = dy_gamma[i][h][j][k] - hcov[i][h][k][j];
                        for m in 0..n {
                            // (v)hv-torsion P^m_jk = -C'^m_jk
                            printed += c_up[i][h][m] * -cd[m][j][k];
                        }
                        resid = resid.max((c.phv[i][h][j][k] - printed).abs());
                    }
                }
            }
        }
        assert!(
            resid < 1e-10,
            "Cartan hv-curvature assembly residual {resid}"
        );
    }

    #[test]
    fn covariant_derivative_frame_rules() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.25, -0.15], &[1.05, 0.65]);
        // constant vertical frame field dy_1, Berwald, vertical direction:
        // zero by the table
        let dy1 = AdaptedVectorField::constant(2, vec![0.0, 0.0], vec![1.0, 0.0]);
        let (h, v) = covariant_derivative(
            ConnectionKind::Berwald,
            &dy1,
            AdaptedDirection::Vertical(1),
            f.as_ref(),
            &p,
        )
        .unwrap();
        assert!(crate::util::max_abs1(&h).max(crate::util::max_abs1(&v)) < 1e-13);

        // D_{delta_j}(JS) = 0 and D_{dy_j}(JS) = dy_j for Hashiguchi
        let js = AdaptedVectorField::liouville(2);
        for j in 0..2 {
            let (h, v) = covariant_derivative(
                ConnectionKind::Hashiguchi,
                &js,
                AdaptedDirection::Horizontal(j),
                f.as_ref(),
                &p,
            )
            .unwrap();
            assert!(
                crate::util::max_abs1(&h).max(crate::util::max_abs1(&v)) < 1e-11,
                "direction {j}"
            );
            let (h2, v2) = covariant_derivative(
                ConnectionKind::Hashiguchi,
                &js,
                AdaptedDirection::Vertical(j),
                f.as_ref(),
                &p,
            )
            .unwrap();
            assert!(crate::util::max_abs1(&h2) < 1e-12);
            for i in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v2[i] - expect).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn metricity_table() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.5, -0.3], &[1.2, 0.7]);
        let (cart_h, cart_v) = metricity(ConnectionKind::Cartan, f.as_ref(), &p).unwrap();
        assert!(max_abs3(&cart_h) < 1e-10, "Cartan is h-metrical");
        assert!(max_abs3(&cart_v) < 1e-11, "Cartan is v-metrical");
        let (chern_h, chern_v) = metricity(ConnectionKind::Chern, f.as_ref(), &p).unwrap();
        assert!(max_abs3(&chern_h) < 1e-10, "Chern is h-metrical");
        assert!(max_abs3(&chern_v) > 1e-3, "Chern is not v-metrical");
        let (hash_h, hash_v) = metricity(ConnectionKind::Hashiguchi, f.as_ref(), &p).unwrap();
        assert!(max_abs3(&hash_h) > 1e-3, "Hashiguchi is not h-metrical");
        assert!(max_abs3(&hash_v) < 1e-11, "Hashiguchi is v-metrical");
        let (ber_h, ber_v) = metricity(ConnectionKind::Berwald, f.as_ref(), &p).unwrap();
        assert!(max_abs3(&ber_h) > 1e-3, "Berwald is not h-metrical");
        assert!(max_abs3(&ber_v) > 1e-3, "Berwald is not v-metrical");
    }

    #[test]
    fn coefficients_symmetric_in_lower_indices() {
        let f = zoo::builtin_metric("randers", &[0.1, 0.0], 2).unwrap();
        let p = pt(&[0.4, 0.3], &[1.2, -0.5]);
        for kind in ConnectionKind::ALL {
            let co = coefficients(kind, f.as_ref(), &p).unwrap();
            for h in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((co.v[h][i][j] - co.v[h][j][i]).abs() < 1e-12, "{kind:?} V");
                        assert!((co.h[h][i][j] - co.h[h][j][i]).abs() < 1e-12, "{kind:?} H");
                    }
                }
            }
        }
    }

    #[test]
    fn curvature_blocks_antisymmetric_in_directions() {
        // Rh and Qv are antisymmetric in the direction pair (j, k).
        let f = zoo::builtin_metric("randers", &[0.1, 0.0, 0.05], 3).unwrap();
        let p = pt(&[0.2, -0.4, 0.5], &[1.0, 0.7, -0.6]);
        for kind in ConnectionKind::ALL {
            let c = curvature(kind, f.as_ref(), &p).unwrap();
            for i in 0..3 {
                for h in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            assert!(
                                (c.rh[i][h][j][k] + c.rh[i][h][k][j]).abs() < 1e-11,
                                "{kind:?} Rh"
                            );
                            assert!(
                                (c.qv[i][h][j][k] + c.qv[i][h][k][j]).abs() < 1e-11,
                                "{kind:?} Qv"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn riemannian_connections_coincide() {
        let f = zoo::builtin_metric("riem-diag", &[], 2).unwrap();
        let p = pt(&[0.6, -0.2], &[0.9, 1.4]);
        let base = curvature(ConnectionKind::Berwald, f.as_ref(), &p).unwrap();
        for kind in [
            ConnectionKind::Cartan,
            ConnectionKind::Chern,
            ConnectionKind::Hashiguchi,
        ] {
            let c = curvature(kind, f.as_ref(), &p).unwrap();
            let mut resid: f64 = 0.0;
            for i in 0..2 {
                for h in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            resid = resid.max((c.rh[i][h][j][k] - base.rh[i][h][j][k]).abs());
                            resid = resid.max((c.phv[i][h][j][k] - base.phv[i][h][j][k]).abs());
                            resid = resid.max((c.qv[i][h][j][k] - base.qv[i][h][j][k]).abs());
                        }
                    }
                }
            }
            assert!(resid < 1e-10, "{kind:?} differs from Berwald by {resid}");
        }
    }
}

#[cfg(test)]
mod cov_deriv_tests {
    use super::*;
    use crate::frontend::zoo;
    use crate::util::max_abs4;

    #[test]
    fn cov_deriv_curvature_vanishes_on_euclid() {
        let f = zoo::builtin_metric("euclid", &[], 2).unwrap();
        let p = TangentPoint::new(vec![0.2, -0.5], vec![0.8, 1.3]).unwrap();
        for kind in ConnectionKind::ALL {
            for block in [CurvatureBlock::Rh, CurvatureBlock::Phv, CurvatureBlock::Qv] {
                for dir in [
                    AdaptedDirection::Horizontal(1),
                    AdaptedDirection::Vertical(0),
                ] {
                    let d = cov_deriv_curvature(kind, block, dir, f.as_ref(), &p).unwrap();
                    assert!(max_abs4(&d) < 1e-13, "{kind:?} {block:?} {dir:?}");
                }
            }
        }
    }

    #[test]
    fn hcov_c_vanishes_on_riemannian() {
        let f = zoo::builtin_metric("riem-diag", &[], 2).unwrap();
        let p = TangentPoint::new(vec![0.6, 0.1], vec![1.0, -0.7]).unwrap();
        for kind in [ConnectionKind::Cartan, ConnectionKind::Hashiguchi] {
            let d = horizontal_cov_deriv_c(kind, f.as_ref(), &p).unwrap();
            assert!(max_abs4(&d) < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn cov_deriv_spray_contractions() {
        // Spray contractions of the differentiated Hashiguchi blocks: the
        // horizontal derivative annihilates the vertical-direction slot
        // contraction, the vertical derivative reproduces the block with a
        // minus sign.
        let n = 2;
        let f = zoo::builtin_metric("randers", &[], n).unwrap();
        let p = TangentPoint::new(vec![0.4, -0.3], vec![1.1, 0.6]).unwrap();
        let geo = GeometryCtx::at(f.as_ref(), &p, 6).unwrap();
        let ctx = ConnectionsCtx::new(std::rc::Rc::new(geo));
        let blocks = ctx.blocks(ConnectionKind::Hashiguchi).unwrap();
        let y = p.y();
        for (label, target) in [("P", &blocks.phv), ("Q", &blocks.qv)] {
            for dir in 0..n {
                let dh = ctx
                    .cov_deriv_block(
                        ConnectionKind::Hashiguchi,
                        target,
                        AdaptedDirection::Horizontal(dir),
                    )
                    .unwrap();
                let dv = ctx
                    .cov_deriv_block(
                        ConnectionKind::Hashiguchi,
                        target,
                        AdaptedDirection::Vertical(dir),
                    )
                    .unwrap();
                for i in 0..n {
                    for h in 0..n {
                        for j in 0..n {
                            let ch: f64 = (0..n).map(|k| dh[i][h][j][k] * y[k]).sum();
                            assert!(ch.abs() < 1e-11, "{label} horizontal dir {dir}");
                            let cv: f64 = (0..n).map(|k| dv[i][h][j][k] * y[k]).sum();
                            let expect = -target[i][h][j][dir].value();
                            assert!((cv - expect).abs() < 1e-11, "{label} vertical dir {dir}");
                        }
                    }
                }
            }
        }
    }
}

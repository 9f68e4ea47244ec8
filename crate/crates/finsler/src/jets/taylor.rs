//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Taylor`] value is a polynomial truncation of a smooth function around a
//! fixed center, stored densely over all multi-indices of total degree up to
//! its `order`. Coefficients are Taylor-normalized (the multi-index `a`
//! coefficient is the partial derivative divided by `a!`), which turns
//! multiplication into plain convolution. Raw partial derivatives are
//! recovered on extraction.
//!
//! Arithmetic tracks validity: the result of a binary operation carries the
//! minimum order of its operands, and differentiation lowers the order by
//! one. Seeding coordinates at order `m` therefore yields exact derivatives
//! of any arithmetic combination up to total order `m`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use super::JetError;

/// Largest total derivative order supported by the engine.
pub const MAX_ORDER: usize = 6;

/// Largest number of variables (2n with n at most 4).
pub const MAX_VARS: usize = 8;

type Exponents = [u8; MAX_VARS];

/// Shared index tables for one variable count: the graded-lex multi-index
/// list up to [`MAX_ORDER`], rank lookups, and precomputed product and shift
/// tables that make convolution and differentiation branch-free.
pub struct Basis {
    nvars: usize,
    indices: Vec<Exponents>,
    degree_of: Vec<u8>,
    /// len_at[o] = number of multi-indices of total degree <= o.
    len_at: Vec<usize>,
    /// factorial[i] = a! for multi-index a at rank i.
    factorial: Vec<f64>,
    /// shift[v][i] = rank of (index_i + e_v), for deg(index_i) < MAX_ORDER.
    shift: Vec<Vec<u32>>,
    /// prod[i][j] = rank of (index_i + index_j), j restricted to degrees
    /// that keep the sum within MAX_ORDER.
    prod: Vec<Vec<u32>>,
    rank: HashMap<Exponents, u32>,
}

fn emit_indices(
    nvars: usize,
    remaining: usize,
    var: usize,
    cur: &mut Exponents,
    out: &mut Vec<Exponents>,
) {
    if var == nvars - 1 {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[var] = e as u8;
        emit_indices(nvars, remaining - e, var + 1, cur, out);
        cur[var] = 0;
    }
}

impl Basis {
    fn build(nvars: usize) -> Basis {
        assert!((1..=MAX_VARS).contains(&nvars));
        let mut indices = Vec::new();
        let mut len_at = Vec::with_capacity(MAX_ORDER + 1);
        for degree in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            emit_indices(nvars, degree, 0, &mut cur, &mut indices);
            len_at.push(indices.len());
        }
        let mut rank = HashMap::with_capacity(indices.len());
        for (i, idx) in indices.iter().enumerate() {
            rank.insert(*idx, i as u32);
        }
        let degree_of: Vec<u8> = indices.iter().map(|idx| idx.iter().sum::<u8>()).collect();
        let factorial: Vec<f64> = indices
            .iter()
            .map(|idx| {
                idx.iter()
                    .map(|&e| (1..=e as u64).product::<u64>() as f64)
                    .product()
            })
            .collect();
        let mut shift = vec![Vec::new(); nvars];
        for (v, table) in shift.iter_mut().enumerate() {
            let limit = len_at[MAX_ORDER - 1];
            table.reserve(limit);
            for idx in indices.iter().take(limit) {
                let mut up = *idx;
                up[v] += 1;
                table.push(rank[&up]);
            }
        }
        let mut prod = Vec::with_capacity(indices.len());
        for (i, idx) in indices.iter().enumerate() {
            let cap = MAX_ORDER - degree_of[i] as usize;
            let mut row = Vec::with_capacity(len_at[cap]);
            for other in indices.iter().take(len_at[cap]) {
                let mut sum = *idx;
                for (s, o) in sum.iter_mut().zip(other.iter()) {
                    *s += o;
                }
                row.push(rank[&sum]);
            }
            prod.push(row);
        }
        Basis {
            nvars,
            indices,
            degree_of,
            len_at,
            factorial,
            shift,
            prod,
            rank,
        }
    }

    /// Shared basis for the given variable count.
    pub fn shared(nvars: usize) -> Arc<Basis> {
        static CACHE: Lazy<Mutex<HashMap<usize, Arc<Basis>>>> =
            Lazy::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().unwrap();
        cache
            .entry(nvars)
            .or_insert_with(|| Arc::new(Basis::build(nvars)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a Taylor value of the given order.
    pub fn len_at(&self, order: usize) -> usize {
        self.len_at[order]
    }

    /// Rank of a multi-index given as exponents over all variables.
    pub fn rank_of(&self, exponents: &[usize]) -> Option<usize> {
        if exponents.len() != self.nvars {
            return None;
        }
        let mut key = [0u8; MAX_VARS];
        for (k, &e) in key.iter_mut().zip(exponents.iter()) {
            if e > MAX_ORDER {
                return None;
            }
            *k = e as u8;
        }
        self.rank.get(&key).map(|&r| r as usize)
    }

    pub fn exponents(&self, rank: usize) -> &[u8] {
        &self.indices[rank][..self.nvars]
    }

    pub fn degree(&self, rank: usize) -> usize {
        self.degree_of[rank] as usize
    }

    pub fn factorial(&self, rank: usize) -> f64 {
        self.factorial[rank]
    }
}

/// A scalar value together with its truncated Taylor expansion.
#[derive(Clone)]
pub struct Taylor {
    basis: Arc<Basis>,
    order: usize,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Taylor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Taylor(order={}, value={})", self.order, self.value())
    }
}

impl Taylor {
    pub fn constant(basis: Arc<Basis>, value: f64, order: usize) -> Taylor {
        assert!(order <= MAX_ORDER);
        let mut coeffs = vec![0.0; basis.len_at(order)];
        coeffs[0] = value;
        Taylor {
            basis,
            order,
            coeffs,
        }
    }

    /// The coordinate variable `v` seeded at `value`.
    pub fn variable(basis: Arc<Basis>, v: usize, value: f64, order: usize) -> Taylor {
        assert!(order <= MAX_ORDER && v < basis.nvars());
        let mut coeffs = vec![0.0; basis.len_at(order)];
        coeffs[0] = value;
        if order >= 1 {
            coeffs[1 + v] = 1.0;
        }
        Taylor {
            basis,
            order,
            coeffs,
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor-normalized coefficient at the multi-index of the given rank.
    pub fn coeff(&self, rank: usize) -> f64 {
        if rank < self.coeffs.len() {
            self.coeffs[rank]
        } else {
            0.0
        }
    }

    /// Raw partial derivative for the multi-index of the given rank.
    pub fn partial_by_rank(&self, rank: usize) -> f64 {
        self.coeff(rank) * self.basis.factorial(rank)
    }

    fn zero_like(&self, order: usize) -> Taylor {
        Taylor {
            basis: self.basis.clone(),
            order,
            coeffs: vec![0.0; self.basis.len_at(order)],
        }
    }

    pub fn truncated(&self, order: usize) -> Taylor {
        let order = order.min(self.order);
        Taylor {
            basis: self.basis.clone(),
            order,
            coeffs: self.coeffs[..self.basis.len_at(order)].to_vec(),
        }
    }

    pub fn add(&self, other: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.basis, &other.basis));
        let order = self.order.min(other.order);
        let len = self.basis.len_at(order);
        let mut coeffs = self.coeffs[..len].to_vec();
        for (c, o) in coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c += o;
        }
        Taylor {
            basis: self.basis.clone(),
            order,
            coeffs,
        }
    }

    pub fn sub(&self, other: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.basis, &other.basis));
        let order = self.order.min(other.order);
        let len = self.basis.len_at(order);
        let mut coeffs = self.coeffs[..len].to_vec();
        for (c, o) in coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c -= o;
        }
        Taylor {
            basis: self.basis.clone(),
            order,
            coeffs,
        }
    }

    pub fn neg(&self) -> Taylor {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Taylor {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= factor;
        }
        out
    }

    pub fn add_scalar(&self, value: f64) -> Taylor {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    pub fn mul(&self, other: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.basis, &other.basis));
        let basis = &self.basis;
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; basis.len_at(order)];
        for (ia, &ca) in self.coeffs.iter().enumerate().take(basis.len_at(order)) {
            if ca == 0.0 {
                continue;
            }
            let da = basis.degree(ia);
            let row = &basis.prod[ia];
            let blen = basis.len_at(order - da);
            for (ib, &cb) in other.coeffs.iter().enumerate().take(blen) {
                if cb == 0.0 {
                    continue;
                }
                coeffs[row[ib] as usize] += ca * cb;
            }
        }
        Taylor {
            basis: self.basis.clone(),
            order,
            coeffs,
        }
    }

    /// Partial derivative in direction `v`; lowers the order by one.
    pub fn deriv(&self, v: usize) -> Taylor {
        assert!(
            self.order >= 1,
            "derivative requested of an order-0 Taylor value"
        );
        let basis = &self.basis;
        let order = self.order - 1;
        let len = basis.len_at(order);
        let mut coeffs = vec![0.0; len];
        let table = &basis.shift[v];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let up = table[i] as usize;
            let e = basis.indices[i][v] as f64 + 1.0;
            *c = self.coeffs[up] * e;
        }
        Taylor {
            basis: self.basis.clone(),
            order,
            coeffs,
        }
    }

    /// Composition with a univariate series `phi` given by its Taylor
    /// coefficients around the value of `self`: Horner evaluation in the
    /// zero-constant part.
    fn compose(&self, phi: &[f64]) -> Taylor {
        let mut du = self.clone();
        du.coeffs[0] = 0.0;
        let mut acc = self.zero_like(self.order);
        acc.coeffs[0] = phi[self.order];
        for k in (0..self.order).rev() {
            acc = acc.mul(&du);
            acc.coeffs[0] += phi[k];
        }
        acc
    }

    /// Integer power by repeated squaring; negative exponents go through the
    /// reciprocal and require a nonzero value.
    pub fn powi(&self, exp: i32) -> Result<Taylor, JetError> {
        if exp < 0 {
            return self.recip()?.powi(-exp);
        }
        let mut result = self.zero_like(self.order);
        result.coeffs[0] = 1.0;
        let mut base = self.clone();
        let mut e = exp as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    pub fn recip(&self) -> Result<Taylor, JetError> {
        let u0 = self.value();
        if u0 == 0.0 {
            return Err(JetError::Domain(
                "division by a value that vanishes at the center".into(),
            ));
        }
        let mut phi = vec![0.0; self.order + 1];
        phi[0] = 1.0 / u0;
        for k in 1..=self.order {
            phi[k] = -phi[k - 1] / u0;
        }
        Ok(self.compose(&phi))
    }

    pub fn div(&self, other: &Taylor) -> Result<Taylor, JetError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Taylor, JetError> {
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(JetError::Domain(format!(
                "sqrt of a non-positive value {u0} at the center"
            )));
        }
        let mut phi = vec![0.0; self.order + 1];
        phi[0] = u0.sqrt();
        for k in 1..=self.order {
            phi[k] = phi[k - 1] * (0.5 - (k as f64 - 1.0)) / (k as f64 * u0);
        }
        Ok(self.compose(&phi))
    }

    /// Real power with a constant exponent. Integer exponents are exact for
    /// any base value; fractional exponents need a positive base value.
    pub fn powf(&self, exp: f64) -> Result<Taylor, JetError> {
        if exp.fract() == 0.0 && exp.abs() <= 64.0 {
            return self.powi(exp as i32);
        }
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(JetError::Domain(format!(
                "power {exp} of a non-positive value {u0} at the center"
            )));
        }
        let mut phi = vec![0.0; self.order + 1];
        phi[0] = u0.powf(exp);
        for k in 1..=self.order {
            phi[k] = phi[k - 1] * (exp - (k as f64 - 1.0)) / (k as f64 * u0);
        }
        Ok(self.compose(&phi))
    }
}

impl std::ops::Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        Taylor::add(&self, &rhs)
    }
}

impl std::ops::Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        Taylor::add(self, rhs)
    }
}

impl std::ops::Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        Taylor::sub(&self, &rhs)
    }
}

impl std::ops::Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        Taylor::sub(self, rhs)
    }
}

impl std::ops::Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        Taylor::mul(&self, &rhs)
    }
}

impl std::ops::Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        Taylor::mul(self, rhs)
    }
}

impl std::ops::Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        Taylor::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars2(order: usize) -> (Taylor, Taylor) {
        let basis = Basis::shared(2);
        (
            Taylor::variable(basis.clone(), 0, 2.0, order),
            Taylor::variable(basis, 1, -1.0, order),
        )
    }

    #[test]
    fn polynomial_partials_are_exact() {
        // f = x^2 y + 3y at (2, -1)
        let (x, y) = vars2(4);
        let f = x.mul(&x).mul(&y).add(&y.scale(3.0));
        assert_eq!(f.value(), -(2.0 * 2.0) + -3.0);
        let basis = f.basis().clone();
        // d/dx = 2xy, d2/dxdy = 2x, d3/dx2dy = 2
        let fx = f.partial_by_rank(basis.rank_of(&[1, 0]).unwrap());
        assert!((fx - -(2.0 * 2.0)).abs() < 1e-14);
        let fxy = f.partial_by_rank(basis.rank_of(&[1, 1]).unwrap());
        assert!((fxy - 4.0).abs() < 1e-14);
        let fxxy = f.partial_by_rank(basis.rank_of(&[2, 1]).unwrap());
        assert!((fxxy - 2.0).abs() < 1e-14);
    }

    #[test]
    fn deriv_matches_coefficient_extraction() {
        let (x, y) = vars2(5);
        let f = x.powi(3).unwrap().mul(&y.powi(2).unwrap());
        let fx = f.deriv(0);
        // d/dx (x^3 y^2) = 3x^2 y^2 at (2,-1) is 12
        assert!((fx.value() - 12.0).abs() < 1e-12);
        let fxy = fx.deriv(1);
        assert!((fxy.value() - -(3.0 * 4.0 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let (x, y) = vars2(5);
        let f = x.mul(&x).add(&y.mul(&y)).add_scalar(1.0);
        let r = f.sqrt().unwrap();
        let back = r.mul(&r);
        for rank in 0..f.basis().len_at(5) {
            assert!((back.coeff(rank) - f.coeff(rank)).abs() < 1e-12);
        }
    }

    #[test]
    fn recip_multiplies_to_one() {
        let (x, y) = vars2(5);
        let f = x.add(&y.scale(0.25)).add_scalar(0.5);
        let inv = f.recip().unwrap();
        let one = f.mul(&inv);
        assert!((one.value() - 1.0).abs() < 1e-14);
        for rank in 1..f.basis().len_at(5) {
            assert!(one.coeff(rank).abs() < 1e-12);
        }
    }

    #[test]
    fn powf_half_agrees_with_sqrt() {
        let (x, _) = vars2(4);
        let f = x.add_scalar(1.0);
        let a = f.sqrt().unwrap();
        let b = f.powf(0.5).unwrap();
        for rank in 0..f.basis().len_at(4) {
            assert!((a.coeff(rank) - b.coeff(rank)).abs() < 1e-13);
        }
    }

    #[test]
    fn sqrt_rejects_nonpositive_center() {
        let (x, _) = vars2(3);
        assert!(x.add_scalar(-2.0).sqrt().is_err());
    }

    #[test]
    fn order_tracking_truncates() {
        let (x, y) = vars2(3);
        let f = x.mul(&y);
        let fd = f.deriv(0);
        assert_eq!(fd.order(), 2);
        let g = fd.mul(&f);
        assert_eq!(g.order(), 2);
    }
}

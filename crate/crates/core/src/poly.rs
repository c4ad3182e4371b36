//! Polynomials of degree ≤ 2 in the state coordinates.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::linalg::{RMat, RVec};

/// `p(x) = c0 + c1·x + xᵀ c2 x` with `c2` stored symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolyJson", from = "PolyJson")]
pub struct Poly {
    pub c0: f64,
    pub c1: RVec,
    pub c2: RMat,
}

/// Serialized form: `{"c0": .., "c1": [..], "c2": [[..], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyJson {
    pub c0: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<Vec<f64>>,
}

impl From<Poly> for PolyJson {
    fn from(p: Poly) -> Self {
        let m = p.nvars();
        Self {
            c0: p.c0,
            c1: p.c1.as_slice().to_vec(),
            c2: (0..m).map(|i| (0..m).map(|j| p.c2[(i, j)]).collect()).collect(),
        }
    }
}

impl From<PolyJson> for Poly {
    fn from(j: PolyJson) -> Self {
        let m = j.c1.len();
        let c2 = RMat::from_fn(m, m, |r, c| j.c2.get(r).and_then(|row| row.get(c)).copied().unwrap_or(0.0));
        Poly::from_parts(j.c0, RVec::from_vec(j.c1), c2)
    }
}

/// Number of coefficients of a degree-≤2 polynomial in `m` variables.
pub fn flat_len(m: usize) -> usize {
    1 + m + m * (m + 1) / 2
}

impl Poly {
    pub fn zero(m: usize) -> Self {
        Self { c0: 0.0, c1: RVec::zeros(m), c2: RMat::zeros(m, m) }
    }

    pub fn constant(m: usize, v: f64) -> Self {
        Self { c0: v, ..Self::zero(m) }
    }

    pub fn var(m: usize, i: usize) -> Self {
        let mut p = Self::zero(m);
        p.c1[i] = 1.0;
        p
    }

    pub fn linear(c0: f64, c1: RVec) -> Self {
        let m = c1.len();
        Self { c0, c1, c2: RMat::zeros(m, m) }
    }

    /// Symmetrizes `c2` on construction.
    pub fn from_parts(c0: f64, c1: RVec, c2: RMat) -> Self {
        let c2 = (&c2 + c2.transpose()) * 0.5;
        Self { c0, c1, c2 }
    }

    /// `x_i x_j`
    pub fn monomial(m: usize, i: usize, j: usize) -> Self {
        let mut p = Self::zero(m);
        p.add_quad_monomial(i, j, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.c1.len()
    }

    /// Coefficient of the monomial `x_i x_j`.
    pub fn quad_coeff(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.c2[(i, i)]
        } else {
            self.c2[(i, j)] + self.c2[(j, i)]
        }
    }

    pub fn add_quad_monomial(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.c2[(i, i)] += v;
        } else {
            self.c2[(i, j)] += 0.5 * v;
            self.c2[(j, i)] += 0.5 * v;
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let xv = RVec::from_column_slice(x);
        self.c0 + self.c1.dot(&xv) + xv.dot(&(&self.c2 * &xv))
    }

    /// `∂p/∂x_i`
    pub fn deriv(&self, i: usize) -> Self {
        Self::linear(self.c1[i], self.c2.row(i).transpose() * 2.0)
    }

    pub fn gradient_at(&self, x: &[f64]) -> RVec {
        let xv = RVec::from_column_slice(x);
        &self.c1 + &self.c2 * xv * 2.0
    }

    pub fn max_abs(&self) -> f64 {
        let a = self.c1.iter().fold(self.c0.abs(), |m, v| m.max(v.abs()));
        self.c2.iter().fold(a, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn quadratic_max_abs(&self) -> f64 {
        self.c2.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Highest degree with a coefficient above `tol` (0 for the zero polynomial).
    pub fn degree(&self, tol: f64) -> usize {
        if self.quadratic_max_abs() > tol {
            2
        } else if self.c1.iter().any(|v| v.abs() > tol) {
            1
        } else {
            0
        }
    }

    /// Entries below `tol` set to zero.
    pub fn chop(&self, tol: f64) -> Self {
        let f = |v: f64| if v.abs() <= tol { 0.0 } else { v };
        Self { c0: f(self.c0), c1: self.c1.map(f), c2: self.c2.map(f) }
    }

    /// Coefficients in flattening order: constant, linear, then the
    /// monomials `x_i x_j` for `i ≤ j` in row-major order.
    pub fn flatten_into(&self, out: &mut [f64]) {
        let m = self.nvars();
        out[0] = self.c0;
        out[1..=m].copy_from_slice(self.c1.as_slice());
        let mut k = 1 + m;
        for i in 0..m {
            for j in i..m {
                out[k] = self.quad_coeff(i, j);
                k += 1;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = vec![0.0; flat_len(self.nvars())];
        self.flatten_into(&mut v);
        v
    }

    pub fn from_flat(m: usize, flat: &[f64]) -> Self {
        let mut p = Self::zero(m);
        p.c0 = flat[0];
        p.c1.as_mut_slice().copy_from_slice(&flat[1..=m]);
        let mut k = 1 + m;
        for i in 0..m {
            for j in i..m {
                p.add_quad_monomial(i, j, flat[k]);
                k += 1;
            }
        }
        p
    }

    /// `p(B u + s)` as a polynomial in `u`.
    pub fn substitute_affine(&self, b: &RMat, s: &RVec) -> Self {
        let grad_at_s = &self.c1 + &self.c2 * s * 2.0;
        let c0 = self.c0 + self.c1.dot(s) + s.dot(&(&self.c2 * s));
        let c1 = b.transpose() * grad_at_s;
        let c2 = b.transpose() * &self.c2 * b;
        Self::from_parts(c0, c1, c2)
    }

    /// Product, failing with the size of the discarded part when the result
    /// has degree above 2.
    pub fn mul_checked(&self, other: &Self, tol: f64) -> Result<Self, f64> {
        SparsePoly::from(self).mul(&SparsePoly::from(other)).to_poly(self.nvars(), tol)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly { c0: self.c0 + rhs.c0, c1: &self.c1 + &rhs.c1, c2: &self.c2 + &rhs.c2 }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly { c0: self.c0 - rhs.c0, c1: &self.c1 - &rhs.c1, c2: &self.c2 - &rhs.c2 }
    }
}

impl Mul<f64> for &Poly {
    type Output = Poly;
    fn mul(self, s: f64) -> Poly {
        Poly { c0: self.c0 * s, c1: &self.c1 * s, c2: &self.c2 * s }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self * -1.0
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(f64, String)> = Vec::new();
        if self.c0 != 0.0 {
            terms.push((self.c0, String::new()));
        }
        for (i, &v) in self.c1.iter().enumerate() {
            if v != 0.0 {
                terms.push((v, format!("x{}", i + 1)));
            }
        }
        let m = self.nvars();
        for i in 0..m {
            for j in i..m {
                let v = self.quad_coeff(i, j);
                if v != 0.0 {
                    let mono = if i == j {
                        format!("x{}^2", i + 1)
                    } else {
                        format!("x{} x{}", i + 1, j + 1)
                    };
                    terms.push((v, mono));
                }
            }
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (v, mono)) in terms.iter().enumerate() {
            let sign = if *v < 0.0 { "-" } else { "+" };
            if k == 0 {
                if *v < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = v.abs();
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if (a - 1.0).abs() < 1e-15 {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{a} {mono}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial of arbitrary degree keyed by sorted variable-index lists; used
/// for intermediate products whose high-degree parts must cancel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparsePoly {
    terms: BTreeMap<Vec<usize>, f64>,
}

impl From<&Poly> for SparsePoly {
    fn from(p: &Poly) -> Self {
        let mut s = SparsePoly::default();
        s.add_term(vec![], p.c0);
        for (i, &v) in p.c1.iter().enumerate() {
            s.add_term(vec![i], v);
        }
        let m = p.nvars();
        for i in 0..m {
            for j in i..m {
                s.add_term(vec![i, j], p.quad_coeff(i, j));
            }
        }
        s
    }
}

impl SparsePoly {
    pub fn add_term(&mut self, mut mono: Vec<usize>, v: f64) {
        if v == 0.0 {
            return;
        }
        mono.sort_unstable();
        *self.terms.entry(mono).or_insert(0.0) += v;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, &v) in &other.terms {
            out.add_term(k.clone(), v);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * s)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let mut mono = ka.clone();
                mono.extend_from_slice(kb);
                out.add_term(mono, va * vb);
            }
        }
        out
    }

    /// Largest coefficient on monomials of degree above 2.
    pub fn overflow(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| k.len() > 2)
            .fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
    }

    /// Truncates to degree 2 when the higher part is below `tol`; otherwise
    /// returns the size of that part.
    pub fn to_poly(&self, m: usize, tol: f64) -> Result<Poly, f64> {
        let over = self.overflow();
        if over > tol {
            return Err(over);
        }
        let mut p = Poly::zero(m);
        for (k, &v) in &self.terms {
            match k.as_slice() {
                [] => p.c0 += v,
                [i] => p.c1[*i] += v,
                [i, j] => p.add_quad_monomial(*i, *j, v),
                _ => {}
            }
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(m: usize) -> Poly {
        let mut p = Poly::constant(m, 0.5);
        p.c1[0] = -1.0;
        p.c1[m - 1] = 2.0;
        p.add_quad_monomial(0, 1, 3.0);
        p.add_quad_monomial(1, 1, -0.25);
        p
    }

    #[test]
    fn evaluation_and_monomials() {
        let p = sample(3);
        let x = [0.3, -0.7, 0.2];
        let expect = 0.5 - 0.3 + 0.4 + 3.0 * 0.3 * -0.7 - 0.25 * 0.49;
        assert!((p.eval(&x) - expect).abs() < 1e-15);
        assert_eq!(p.quad_coeff(0, 1), 3.0);
        assert_eq!(p.quad_coeff(1, 0), 3.0);
        assert_eq!(p.c2, p.c2.transpose());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = sample(3);
        let x = [0.3, -0.7, 0.2];
        for i in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.eval(&xp) - p.eval(&xm)) / (2.0 * h);
            assert!((p.deriv(i).eval(&x) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn product_overflow_is_detected() {
        let m = 2;
        let x0 = Poly::var(m, 0);
        let sq = x0.mul_checked(&x0, 1e-12).unwrap();
        assert_eq!(sq.quad_coeff(0, 0), 1.0);
        let cube = sq.mul_checked(&x0, 1e-12);
        assert_eq!(cube, Err(1.0));
    }

    #[test]
    fn display_is_readable() {
        let mut p = Poly::var(8, 2);
        p.c1[7] = 3f64.sqrt();
        p = &p * 0.5;
        assert_eq!(p.to_string(), format!("0.5 x3 + {} x8", 3f64.sqrt() / 2.0));
        assert_eq!(Poly::zero(3).to_string(), "0");
        let q = &Poly::monomial(3, 0, 2) * -1.0;
        assert_eq!(q.to_string(), "-x1 x3");
    }

    #[test]
    fn affine_substitution() {
        let p = sample(3);
        // x = (u0, 2, u1) ... B picks u into slots 0 and 2
        let b = RMat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let s = RVec::from_column_slice(&[0.0, 2.0, 0.0]);
        let q = p.substitute_affine(&b, &s);
        let u = [0.4, -0.9];
        assert!((q.eval(&u) - p.eval(&[0.4, 2.0, -0.9])).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let p = sample(3);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.starts_with("{\"c0\":0.5,\"c1\":["));
        let back: Poly = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn flatten_round_trip(coeffs in proptest::collection::vec(-5.0f64..5.0, flat_len(4))) {
            let p = Poly::from_flat(4, &coeffs);
            let back = p.flatten();
            for (a, b) in coeffs.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }

        #[test]
        fn product_evaluates_pointwise(
            a in proptest::collection::vec(-2.0f64..2.0, 4),
            b in proptest::collection::vec(-2.0f64..2.0, 4),
            x in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let p = Poly::linear(a[0], RVec::from_column_slice(&a[1..]));
            let q = Poly::linear(b[0], RVec::from_column_slice(&b[1..]));
            let pq = p.mul_checked(&q, 1e-12).unwrap();
            prop_assert!((pq.eval(&x) - p.eval(&x) * q.eval(&x)).abs() < 1e-12);
        }
    }
}

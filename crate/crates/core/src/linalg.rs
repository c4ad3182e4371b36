//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| c(v, 0.0))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    // symmetrize first so round-off never feeds an asymmetric input
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn pad_square_real(a: &RMat) -> RMat {
    let n = a.nrows().max(a.ncols());
    let mut out = RMat::zeros(n, a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out
}

fn pad_square_complex(a: &CMat) -> CMat {
    let n = a.nrows().max(a.ncols());
    let mut out = CMat::zeros(n, a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out
}

/// Orthonormal basis (as columns) of the null space of `a`; singular values
/// below `tol * max(1, sigma_max)` count as zero.
pub fn null_space(a: &RMat, tol: f64) -> RMat {
    let cols = a.ncols();
    if cols == 0 {
        return RMat::zeros(0, 0);
    }
    let padded = pad_square_real(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let thresh = tol * smax.max(1.0);
    let picked: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= thresh)
        .collect();
    let mut out = RMat::zeros(cols, picked.len());
    for (k, &i) in picked.iter().enumerate() {
        out.set_column(k, &v_t.row(i).transpose());
    }
    out
}

/// Complex counterpart of [`null_space`]. When `min_dim` exceeds the detected
/// nullity, the right singular vectors of the smallest singular values fill
/// the gap.
pub fn null_space_complex(a: &CMat, tol: f64, min_dim: usize) -> CMat {
    let cols = a.ncols();
    let padded = pad_square_complex(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
    let thresh = tol * smax.max(1.0);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let nullity = order.iter().filter(|&&i| sv[i] <= thresh).count();
    let dim = nullity.max(min_dim).min(cols);
    let mut out = CMat::zeros(cols, dim);
    for (k, &i) in order.iter().take(dim).enumerate() {
        let row = v_t.row(i);
        for r in 0..cols {
            out[(r, k)] = row[r].conj();
        }
    }
    out
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pseudo_inverse(a: &RMat, tol: f64) -> RMat {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let cutoff = tol * smax.max(f64::MIN_POSITIVE);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut out = RMat::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            out += v_t.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Matrix exponential (Padé with scaling and squaring, from nalgebra).
pub fn expm(a: &RMat) -> RMat {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

pub fn expm_complex(a: &CMat) -> CMat {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

/// Flow map of the affine system `x' = A x + b` over time `t`:
/// returns `(e^{tA}, c(t))` with `x(t) = e^{tA} x(0) + c(t)`.
pub fn affine_flow(a: &RMat, b: &RVec, t: f64) -> (RMat, RVec) {
    let m = a.nrows();
    let mut aug = RMat::zeros(m + 1, m + 1);
    aug.view_mut((0, 0), (m, m)).copy_from(&(a * t));
    for i in 0..m {
        aug[(i, m)] = b[i] * t;
    }
    let e = expm(&aug);
    let jac = e.view((0, 0), (m, m)).into_owned();
    let shift = e.view((0, m), (m, 1)).column(0).into_owned();
    (jac, shift)
}

/// Max absolute entry.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_complex(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_deficient() {
        let a = RMat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 1);
        assert!((n[(2, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_flow_matches_scalar_solution() {
        // x' = -2x + 1
        let a = RMat::from_element(1, 1, -2.0);
        let b = RVec::from_element(1, 1.0);
        let (j, s) = affine_flow(&a, &b, 0.7);
        let x0 = 0.3;
        let exact = 0.5 + (x0 - 0.5) * (-1.4_f64).exp();
        assert!((j[(0, 0)] * x0 + s[0] - exact).abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_recovers_inverse() {
        let a = RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let p = pseudo_inverse(&a, 1e-12);
        assert!(max_abs(&(&a * &p - RMat::identity(2, 2))) < 1e-12);
    }
}

//! Contravariant tensor fields and vector fields with polynomial coefficients
//! on state coordinates.

use serde::{Deserialize, Serialize};

use crate::algebra::{Observable, ObservableBasis};
use crate::error::{GeomError, Result};
use crate::linalg::{pseudo_inverse, RMat, RVec};
use crate::par::{self, Execution};
use crate::poly::{Poly, SparsePoly};
use crate::state::StateCoordinates;

/// Products whose degree-3 part must cancel are accepted below this size.
pub const OVERFLOW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    None,
}

/// Rank-2 contravariant tensor `T^{jk}(x) ∂_j ⊗ ∂_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTensorField {
    pub dim: usize,
    pub symmetry: Symmetry,
    /// Row-major `dim × dim`.
    pub components: Vec<Poly>,
}

impl PolyTensorField {
    pub fn zeros(dim: usize, symmetry: Symmetry) -> Self {
        Self { dim, symmetry, components: vec![Poly::zero(dim); dim * dim] }
    }

    pub fn from_fn(dim: usize, symmetry: Symmetry, f: impl Fn(usize, usize) -> Poly) -> Self {
        let components = (0..dim * dim).map(|i| f(i / dim, i % dim)).collect();
        Self { dim, symmetry, components }
    }

    pub fn get(&self, j: usize, k: usize) -> &Poly {
        &self.components[j * self.dim + k]
    }

    /// Sets `T^{jk}` and its mirror according to the declared symmetry.
    pub fn set(&mut self, j: usize, k: usize, p: Poly) {
        let d = self.dim;
        match self.symmetry {
            Symmetry::Symmetric => self.components[k * d + j] = p.clone(),
            Symmetry::Antisymmetric => self.components[k * d + j] = -&p,
            Symmetry::None => {}
        }
        self.components[j * d + k] = p;
    }

    pub fn eval(&self, x: &[f64]) -> RMat {
        RMat::from_fn(self.dim, self.dim, |j, k| self.get(j, k).eval(x))
    }

    /// `T(α, β) = Σ α_j β_k T^{jk}` for constant covectors.
    pub fn contract(&self, alpha: &[f64], beta: &[f64]) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (j, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (k, &b) in beta.iter().enumerate() {
                if b != 0.0 {
                    out = &out + &(self.get(j, k) * (a * b));
                }
            }
        }
        out
    }

    /// Largest deviation from the declared symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let sign = match self.symmetry {
            Symmetry::Symmetric => 1.0,
            Symmetry::Antisymmetric => -1.0,
            Symmetry::None => return 0.0,
        };
        let mut worst = 0.0_f64;
        for j in 0..self.dim {
            for k in j..self.dim {
                worst = worst.max(self.get(j, k).max_abs_diff(&(self.get(k, j) * sign)));
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0_f64, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0_f64, |m, p| m.max(p.max_abs()))
    }

    pub fn max_degree(&self, tol: f64) -> usize {
        self.components.iter().map(|p| p.degree(tol)).max().unwrap_or(0)
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        Self { dim: self.dim, symmetry: self.symmetry, components: self.components.iter().map(f).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|p| p * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let symmetry = if self.symmetry == other.symmetry { self.symmetry } else { Symmetry::None };
        Self {
            dim: self.dim,
            symmetry,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn chop(&self, tol: f64) -> Self {
        self.map(|p| p.chop(tol))
    }
}

/// Vector field `Z^k(x) ∂_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyVectorField {
    pub dim: usize,
    pub components: Vec<Poly>,
}

impl PolyVectorField {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, components: vec![Poly::zero(dim); dim] }
    }

    pub fn new(components: Vec<Poly>) -> Self {
        Self { dim: components.len(), components }
    }

    /// `Z(x) = A x + b`
    pub fn from_affine(a: &RMat, b: &RVec) -> Self {
        let dim = b.len();
        Self::new((0..dim).map(|k| Poly::linear(b[k], a.row(k).transpose())).collect())
    }

    /// True iff every quadratic coefficient is exactly zero.
    pub fn is_affine(&self) -> bool {
        self.components.iter().all(|p| p.quadratic_max_abs() == 0.0)
    }

    /// `(A, b)` with `Z(x) = A x + b`.
    pub fn affine_parts(&self) -> Result<(RMat, RVec)> {
        if !self.is_affine() {
            return Err(GeomError::NotAffine);
        }
        let a = RMat::from_fn(self.dim, self.dim, |k, i| self.components[k].c1[i]);
        let b = RVec::from_fn(self.dim, |k, _| self.components[k].c0);
        Ok((a, b))
    }

    pub fn eval(&self, x: &[f64]) -> RVec {
        RVec::from_iterator(self.dim, self.components.iter().map(|p| p.eval(x)))
    }

    /// `∂_m Z^k` at `x`, row `k`, column `m`.
    pub fn jacobian(&self, x: &[f64]) -> RMat {
        let mut jac = RMat::zeros(self.dim, self.dim);
        for (k, p) in self.components.iter().enumerate() {
            jac.set_row(k, &p.gradient_at(x).transpose());
        }
        jac
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.components.iter().map(|p| p * s).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0_f64, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0_f64, |m, p| m.max(p.max_abs()))
    }

    pub fn chop(&self, tol: f64) -> Self {
        Self::new(self.components.iter().map(|p| p.chop(tol)).collect())
    }

    /// `Z(f) = Σ_m Z^m ∂_m f` without truncation.
    pub fn apply_sparse(&self, f: &Poly) -> SparsePoly {
        let mut acc = SparsePoly::default();
        for (m, z) in self.components.iter().enumerate() {
            let d = f.deriv(m);
            if d.is_zero(0.0) || z.is_zero(0.0) {
                continue;
            }
            acc = acc.add(&SparsePoly::from(z).mul(&SparsePoly::from(&d)));
        }
        acc
    }

    /// `Z(f)`, failing with the size of any part above degree 2.
    pub fn apply(&self, f: &Poly) -> std::result::Result<Poly, f64> {
        self.apply_sparse(f).to_poly(self.dim, OVERFLOW_TOL)
    }
}

/// Samples `Z` at each point.
pub fn sample_vf(z: &PolyVectorField, points: &[Vec<f64>], exec: Execution) -> Vec<Vec<f64>> {
    par::map_slice(points, exec, |x| z.eval(x).as_slice().to_vec())
}

/// `e_a = a^0 + Σ a^j x_j` as a polynomial.
pub fn expectation_poly(a: &Observable) -> Poly {
    Poly::linear(a.coeffs[0], RVec::from_column_slice(a.traceless()))
}

/// Observable whose expectation function is the given affine polynomial.
pub fn observable_of_affine(p: &Poly) -> Observable {
    let mut coeffs = vec![p.c0];
    coeffs.extend_from_slice(p.c1.as_slice());
    Observable::new(coeffs)
}

/// `Λ_D^{jk}(x) = Σ_l c_{jk}^l x_l`
pub fn lambda_d(basis: &ObservableBasis) -> PolyTensorField {
    let m = basis.coord_dim();
    PolyTensorField::from_fn(m, Symmetry::Antisymmetric, |j, k| {
        let row = basis.tables().lie_row(j + 1, k + 1);
        Poly::linear(row[0], RVec::from_column_slice(&row[1..]))
    })
}

/// `R_D^{jk}(x) = d_{jk}^0 + Σ_l d_{jk}^l x_l − x_j x_k`
pub fn r_d(basis: &ObservableBasis) -> PolyTensorField {
    let m = basis.coord_dim();
    PolyTensorField::from_fn(m, Symmetry::Symmetric, |j, k| {
        let row = basis.tables().jordan_row(j + 1, k + 1);
        let mut p = Poly::linear(row[0], RVec::from_column_slice(&row[1..]));
        p.add_quad_monomial(j, k, -1.0);
        p
    })
}

fn check_dim(t: &PolyTensorField, a: &Observable) -> Result<()> {
    if a.len() != t.dim + 1 {
        return Err(GeomError::DimensionMismatch { expected: t.dim + 1, got: a.len() });
    }
    Ok(())
}

/// `T(de_a, de_b)`
pub fn poisson_bracket(t: &PolyTensorField, a: &Observable, b: &Observable) -> Result<Poly> {
    check_dim(t, a)?;
    check_dim(t, b)?;
    Ok(t.contract(a.traceless(), b.traceless()))
}

/// `T(de_a, de_b) + e_a e_b`
pub fn jordan_bracket(t: &PolyTensorField, a: &Observable, b: &Observable) -> Result<Poly> {
    let base = poisson_bracket(t, a, b)?;
    let prod = expectation_poly(a)
        .mul_checked(&expectation_poly(b), 0.0)
        .expect("product of affine polynomials has degree 2");
    Ok(&base + &prod)
}

/// `V^k = Σ_j a^j T^{jk}`
pub fn contract_first(t: &PolyTensorField, a: &[f64]) -> PolyVectorField {
    let comps = (0..t.dim)
        .map(|k| {
            let mut p = Poly::zero(t.dim);
            for (j, &aj) in a.iter().enumerate() {
                if aj != 0.0 {
                    p = &p + &(t.get(j, k) * aj);
                }
            }
            p
        })
        .collect();
    PolyVectorField::new(comps)
}

/// Hamiltonian vector field `ι(de_a) Λ_D`.
pub fn hamiltonian_vf(basis: &ObservableBasis, a: &Observable) -> Result<PolyVectorField> {
    basis.check(a)?;
    Ok(contract_first(&lambda_d(basis), a.traceless()))
}

/// Gradient vector field `ι(de_a) R_D`.
pub fn gradient_vf(basis: &ObservableBasis, a: &Observable) -> Result<PolyVectorField> {
    basis.check(a)?;
    Ok(contract_first(&r_d(basis), a.traceless()))
}

/// `[X, Y]^k = X(Y^k) − Y(X^k)`
pub fn vf_commutator(x: &PolyVectorField, y: &PolyVectorField) -> Result<PolyVectorField> {
    if x.dim != y.dim {
        return Err(GeomError::DimensionMismatch { expected: x.dim, got: y.dim });
    }
    let mut comps = Vec::with_capacity(x.dim);
    for k in 0..x.dim {
        let xy = x.apply_sparse(&y.components[k]);
        let yx = y.apply_sparse(&x.components[k]);
        let p = xy.add(&yx.scale(-1.0)).to_poly(x.dim, OVERFLOW_TOL).map_err(|residual| {
            GeomError::DegreeOverflow { component: format!("{}", k + 1), residual }
        })?;
        comps.push(p);
    }
    Ok(PolyVectorField::new(comps))
}

/// Pointwise `J` with `J X̃_{σ_j}(x) = Ỹ_{σ_j}(x)` for all `j`, solved by least
/// squares; returns `J` and `‖J³ + J‖`.
pub fn complex_structure_at(basis: &ObservableBasis, s: &StateCoordinates) -> Result<(RMat, f64)> {
    let m = basis.coord_dim();
    if s.x.len() != m {
        return Err(GeomError::DimensionMismatch { expected: m, got: s.x.len() });
    }
    let lam = lambda_d(basis).eval(&s.x);
    let r = r_d(basis).eval(&s.x);
    // Column j of X is X̃_{σ_j}(x), i.e. row j of Λ.
    let xs = lam.transpose();
    let ys = r.transpose();
    if xs.amax() < 1e-12 {
        return Err(GeomError::DegeneratePoint(
            "all Hamiltonian vector fields vanish at this state".into(),
        ));
    }
    let j = &ys * pseudo_inverse(&xs, 1e-10);
    let residual = (&j * &j * &j + &j).norm();
    Ok((j, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_basis;
    use crate::state::{covariance, random_pure_state, random_state};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lin(m: usize, terms: &[(usize, f64)]) -> Poly {
        let mut p = Poly::zero(m);
        for &(i, v) in terms {
            p.c1[i] += v;
        }
        p
    }

    #[test]
    fn lambda_qubit_is_levi_civita() {
        let b = build_basis(2).unwrap();
        let l = lambda_d(&b);
        assert_eq!(*l.get(0, 1), lin(3, &[(2, 1.0)]));
        assert_eq!(*l.get(1, 2), lin(3, &[(0, 1.0)]));
        assert_eq!(*l.get(2, 0), lin(3, &[(1, 1.0)]));
        for j in 0..3 {
            assert!(l.get(j, j).is_zero(0.0));
        }
        assert_eq!(l.symmetry_defect(), 0.0);
    }

    #[test]
    fn lambda_qutrit_entry() {
        let b = build_basis(3).unwrap();
        let p = lambda_d(&b).get(3, 4).clone();
        let expect = lin(8, &[(2, 0.5), (7, 3f64.sqrt() / 2.0)]);
        assert!(p.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn r_qubit_and_qutrit() {
        let b = build_basis(2).unwrap();
        let r = r_d(&b);
        for j in 0..3 {
            for k in 0..3 {
                let mut expect = Poly::constant(3, if j == k { 1.0 } else { 0.0 });
                expect.add_quad_monomial(j, k, -1.0);
                assert!(r.get(j, k).max_abs_diff(&expect) < 1e-14);
            }
        }
        assert_eq!(r.eval(&[0.0; 3]), RMat::identity(3, 3));
        let b3 = build_basis(3).unwrap();
        let mut expect = Poly::constant(8, 2.0 / 3.0);
        expect.c1[7] = 1.0 / 3f64.sqrt();
        expect.add_quad_monomial(0, 0, -1.0);
        assert!(r_d(&b3).get(0, 0).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn qubit_brackets() {
        let b = build_basis(2).unwrap();
        let p = poisson_bracket(&lambda_d(&b), &b.element(1), &b.element(2)).unwrap();
        assert_eq!(p, lin(3, &[(2, 1.0)]));
        let q = jordan_bracket(&r_d(&b), &b.element(1), &b.element(1)).unwrap();
        assert!(q.max_abs_diff(&Poly::constant(3, 1.0)) < 1e-15);
        let a = b.random_observable(&mut ChaCha8Rng::seed_from_u64(1));
        assert!(poisson_bracket(&lambda_d(&b), &a, &b.identity()).unwrap().is_zero(0.0));
        assert!(poisson_bracket(&lambda_d(&b), &a, &Observable::new(vec![0.0; 3])).is_err());
    }

    #[test]
    fn brackets_reproduce_products() {
        for n in [2, 3] {
            let b = build_basis(n).unwrap();
            let (lam, r) = (lambda_d(&b), r_d(&b));
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..100 {
                let x = b.random_observable(&mut rng);
                let y = b.random_observable(&mut rng);
                let pb = poisson_bracket(&lam, &x, &y).unwrap();
                let lie = expectation_poly(&b.lie_product_matrix(&x, &y).unwrap());
                assert!(pb.max_abs_diff(&lie) < 1e-10);
                let jb = jordan_bracket(&r, &x, &y).unwrap();
                let jor = expectation_poly(&b.jordan_product_matrix(&x, &y).unwrap());
                assert!(jb.max_abs_diff(&jor) < 1e-10);
            }
        }
    }

    #[test]
    fn variance_matches_tensor() {
        let b = build_basis(3).unwrap();
        let r = r_d(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = random_state(&b, &mut rng);
            let x = b.random_observable(&mut rng);
            let y = b.random_observable(&mut rng);
            let tensor = r.contract(x.traceless(), y.traceless()).eval(&s.x);
            assert!((tensor - covariance(&b, &x, &y, &s).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn star_product_is_associative() {
        for n in [2, 3] {
            let b = build_basis(n).unwrap();
            let (lam, r) = (lambda_d(&b), r_d(&b));
            let star = |x: &Observable, y: &Observable| -> (Observable, Observable) {
                let re = observable_of_affine(&jordan_bracket(&r, x, y).unwrap());
                let im = observable_of_affine(&poisson_bracket(&lam, x, y).unwrap());
                (re, im)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..20 {
                let (x, y, z) = (
                    b.random_observable(&mut rng),
                    b.random_observable(&mut rng),
                    b.random_observable(&mut rng),
                );
                // the brackets reproduce e_{ab}
                let (re, im) = star(&x, &y);
                let (jr, li) = b.associative_product(&x, &y).unwrap();
                assert!(re.max_abs_diff(&jr) < 1e-10 && im.max_abs_diff(&li) < 1e-10);
                // (x*y)*z = x*(y*z) through complex coefficients
                let cx = |o: &Observable| o.coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>();
                let t = b.tables();
                let left = t.star(&t.star(&cx(&x), &cx(&y)), &cx(&z));
                let right = t.star(&cx(&x), &t.star(&cx(&y), &cx(&z)));
                let worst = left.iter().zip(&right).fold(0.0_f64, |m, (p, q)| m.max((p - q).norm()));
                assert!(worst < 1e-9);
            }
        }
    }

    #[test]
    fn qubit_vector_fields() {
        let b = build_basis(2).unwrap();
        let h = b.traceless_observable(&[0.0, 0.0, 1.0]).unwrap();
        let x = hamiltonian_vf(&b, &h).unwrap();
        let expect = PolyVectorField::new(vec![lin(3, &[(1, 1.0)]), lin(3, &[(0, -1.0)]), Poly::zero(3)]);
        assert_eq!(x, expect);
        assert!(x.is_affine());
        let y = gradient_vf(&b, &h).unwrap();
        let mut comps = vec![Poly::zero(3), Poly::zero(3), Poly::constant(3, 1.0)];
        for (k, c) in comps.iter_mut().enumerate() {
            c.add_quad_monomial(2, k, -1.0);
        }
        assert!(y.max_abs_diff(&PolyVectorField::new(comps)) < 1e-15);
        assert!(!y.is_affine());
        assert!(hamiltonian_vf(&b, &b.identity()).unwrap().max_abs() == 0.0);
        assert!(gradient_vf(&b, &b.identity()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn commutator_tables() {
        for n in [2, 3] {
            let b = build_basis(n).unwrap();
            let m = b.coord_dim();
            let xs: Vec<_> = (1..=m).map(|j| hamiltonian_vf(&b, &b.element(j)).unwrap()).collect();
            let ys: Vec<_> = (1..=m).map(|j| gradient_vf(&b, &b.element(j)).unwrap()).collect();
            for j in 0..m {
                for k in 0..m {
                    let c = b.lie_product(&b.element(j + 1), &b.element(k + 1)).unwrap();
                    let xc = hamiltonian_vf(&b, &c).unwrap();
                    let yc = gradient_vf(&b, &c).unwrap();
                    assert!(vf_commutator(&xs[j], &xs[k]).unwrap().max_abs_diff(&xc) < 1e-10);
                    assert!(vf_commutator(&ys[j], &ys[k]).unwrap().max_abs_diff(&xc.scale(-1.0)) < 1e-10);
                    assert!(vf_commutator(&xs[j], &ys[k]).unwrap().max_abs_diff(&yc) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn commutator_overflow() {
        // [x1^2 ∂1, x1^2 ∂2] has a cubic part
        let mut p = Poly::zero(2);
        p.add_quad_monomial(0, 0, 1.0);
        let x = PolyVectorField::new(vec![p.clone(), Poly::zero(2)]);
        let y = PolyVectorField::new(vec![Poly::zero(2), p]);
        assert!(matches!(vf_commutator(&x, &y), Err(GeomError::DegreeOverflow { .. })));
        assert!(vf_commutator(&x, &x).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn pure_stratum_tangency() {
        let b = build_basis(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = b.random_observable(&mut rng);
            let s = random_pure_state(&b, &mut rng);
            for f in [hamiltonian_vf(&b, &a).unwrap(), gradient_vf(&b, &a).unwrap()] {
                let v = f.eval(&s.x);
                let dot: f64 = v.iter().zip(&s.x).map(|(p, q)| p * q).sum();
                assert!(dot.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn complex_structure() {
        let b = build_basis(2).unwrap();
        let pole = StateCoordinates::new(&b, vec![0.0, 0.0, 1.0]).unwrap();
        let (_, res) = complex_structure_at(&b, &pole).unwrap();
        assert!(res < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = random_pure_state(&b, &mut rng);
            assert!(complex_structure_at(&b, &s).unwrap().1 < 1e-8);
        }
        // Inside the ball the least-squares J satisfies J³ = −J/r² on the
        // Hamiltonian plane, so the residual is (1/r² − 1)‖J‖.
        let r: f64 = rng.gen_range(0.2..0.9);
        let s = StateCoordinates::new(&b, vec![0.0, 0.0, r]).unwrap();
        let (j, res) = complex_structure_at(&b, &s).unwrap();
        let expect = (1.0 / (r * r) - 1.0) * j.norm();
        assert!((res - expect).abs() < 1e-10);
        let mixed = StateCoordinates::maximally_mixed(&b);
        assert!(matches!(complex_structure_at(&b, &mixed), Err(GeomError::DegeneratePoint(_))));
    }

    #[test]
    fn sampling_modes_agree() {
        let b = build_basis(2).unwrap();
        let y = gradient_vf(&b, &b.element(3)).unwrap();
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![0.01 * i as f64, -0.005 * i as f64, 0.3]).collect();
        assert_eq!(sample_vf(&y, &pts, Execution::Sequential), sample_vf(&y, &pts, Execution::Parallel));
    }

    #[test]
    fn tensor_json_shape() {
        let b = build_basis(2).unwrap();
        let v: serde_json::Value = serde_json::to_value(lambda_d(&b)).unwrap();
        assert_eq!(v["symmetry"], "antisymmetric");
        assert_eq!(v["components"].as_array().unwrap().len(), 9);
        assert_eq!(v["components"][1]["c1"], serde_json::json!([0.0, 0.0, 1.0]));
    }
}

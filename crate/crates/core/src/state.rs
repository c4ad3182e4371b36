//! Density states in Bloch-type coordinates `x_j = tr(ρ σ_j)`, with
//! `ρ = I/n + ½ Σ_j x_j σ_j`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{HermitianMatrix, Observable, ObservableBasis};
use crate::error::{GeomError, Result};
use crate::linalg::{c, hermitian_eigenvalues, trace, CMat};

/// Tolerance on `tr ρ = 1` for matrix input.
pub const TRACE_TOL: f64 = 1e-10;
/// Slack on the smallest eigenvalue of matrix input.
pub const POSITIVITY_SLACK: f64 = 1e-8;
/// Eigenvalue threshold separating strata.
pub const RANK_TOL: f64 = 1e-8;

/// Coordinates of a density state; serializes as `{"n": .., "x": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCoordinates {
    pub n: usize,
    pub x: Vec<f64>,
}

/// Rank of a state: the stratum it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumTag {
    pub rank: usize,
}

impl StateCoordinates {
    pub fn new(basis: &ObservableBasis, x: Vec<f64>) -> Result<Self> {
        if x.len() != basis.coord_dim() {
            return Err(GeomError::DimensionMismatch { expected: basis.coord_dim(), got: x.len() });
        }
        Ok(Self { n: basis.n(), x })
    }

    /// Builds coordinates and checks positivity of the reconstructed matrix.
    pub fn new_checked(basis: &ObservableBasis, x: Vec<f64>, slack: f64) -> Result<Self> {
        let s = Self::new(basis, x)?;
        let lo = s.min_eigenvalue(basis);
        if lo < -slack {
            return Err(GeomError::NotAState(lo));
        }
        Ok(s)
    }

    /// The maximally mixed state `I/n`.
    pub fn maximally_mixed(basis: &ObservableBasis) -> Self {
        Self { n: basis.n(), x: vec![0.0; basis.coord_dim()] }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `ρ = I/n + ½ Σ x_j σ_j`
    pub fn to_matrix(&self, basis: &ObservableBasis) -> CMat {
        let n = basis.n();
        let mut rho = CMat::identity(n, n) * c(1.0 / n as f64, 0.0);
        for (j, &xj) in self.x.iter().enumerate() {
            if xj != 0.0 {
                rho += basis.element_matrix(j + 1) * c(0.5 * xj, 0.0);
            }
        }
        rho
    }

    pub fn eigenvalues(&self, basis: &ObservableBasis) -> Vec<f64> {
        hermitian_eigenvalues(&self.to_matrix(basis))
    }

    pub fn min_eigenvalue(&self, basis: &ObservableBasis) -> f64 {
        self.eigenvalues(basis)[0]
    }

    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn check_basis(basis: &ObservableBasis, s: &StateCoordinates) -> Result<()> {
    if s.n != basis.n() || s.x.len() != basis.coord_dim() {
        return Err(GeomError::DimensionMismatch { expected: basis.coord_dim(), got: s.x.len() });
    }
    Ok(())
}

/// Coordinates of a density matrix.
pub fn from_matrix(rho: &HermitianMatrix, basis: &ObservableBasis) -> Result<StateCoordinates> {
    if rho.dim() != basis.n() {
        return Err(GeomError::DimensionMismatch { expected: basis.n(), got: rho.dim() });
    }
    let tr = trace(rho.matrix()).re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(GeomError::Normalization(tr));
    }
    let lo = hermitian_eigenvalues(rho.matrix())[0];
    if lo < -POSITIVITY_SLACK {
        return Err(GeomError::NotAState(lo));
    }
    let x = (1..basis.dim())
        .map(|j| trace(&(rho.matrix() * basis.element_matrix(j))).re)
        .collect();
    Ok(StateCoordinates { n: basis.n(), x })
}

/// `e_a(ρ) = a^0 + Σ a^j x_j`
pub fn expectation(basis: &ObservableBasis, a: &Observable, s: &StateCoordinates) -> Result<f64> {
    basis.check(a)?;
    check_basis(basis, s)?;
    Ok(a.coeffs[0] + a.traceless().iter().zip(&s.x).map(|(p, q)| p * q).sum::<f64>())
}

/// `tr ρ² = 1/n + ½ ‖x‖²`
pub fn purity(s: &StateCoordinates) -> f64 {
    1.0 / s.n as f64 + 0.5 * s.x.iter().map(|v| v * v).sum::<f64>()
}

/// Number of eigenvalues of `ρ` above `tol`.
pub fn stratum(basis: &ObservableBasis, s: &StateCoordinates, tol: f64) -> StratumTag {
    let rank = s.eigenvalues(basis).iter().filter(|&&v| v > tol).count();
    StratumTag { rank }
}

/// `Var(a) = e_{a⊙a} − e_a²`
pub fn variance(basis: &ObservableBasis, a: &Observable, s: &StateCoordinates) -> Result<f64> {
    covariance(basis, a, a, s)
}

/// `Cov(a, b) = e_{a⊙b} − e_a e_b`
pub fn covariance(
    basis: &ObservableBasis,
    a: &Observable,
    b: &Observable,
    s: &StateCoordinates,
) -> Result<f64> {
    let ab = basis.jordan_product(a, b)?;
    Ok(expectation(basis, &ab, s)? - expectation(basis, a, s)? * expectation(basis, b, s)?)
}

/// Random full-rank state `G G† / tr(G G†)` with Gaussian complex `G`.
pub fn random_state<R: Rng>(basis: &ObservableBasis, rng: &mut R) -> StateCoordinates {
    let n = basis.n();
    let g = CMat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let rho = &g * g.adjoint();
    let rho = &rho / trace(&rho);
    let h = HermitianMatrix::new((&rho + rho.adjoint()) * c(0.5, 0.0)).expect("GG† is Hermitian");
    from_matrix(&h, basis).expect("GG† is a state")
}

/// Random pure state from a Gaussian vector.
pub fn random_pure_state<R: Rng>(basis: &ObservableBasis, rng: &mut R) -> StateCoordinates {
    let n = basis.n();
    let v = nalgebra::DVector::from_fn(n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let v = &v / c(v.norm(), 0.0);
    let rho = &v * v.adjoint();
    let h = HermitianMatrix::new((&rho + rho.adjoint()) * c(0.5, 0.0)).expect("projector");
    from_matrix(&h, basis).expect("projector is a state")
}

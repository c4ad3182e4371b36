//! Vector fields of linear maps, Kraus families and Lindblad generators on
//! state coordinates, the standard model constructors, and integration.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{HermitianMatrix, Observable, ObservableBasis, StructureTables};
use crate::error::{GeomError, Result};
use crate::linalg::{affine_flow, anticommutator, c, commutator, null_space, pseudo_inverse, trace, CMat, RMat, RVec, I};
use crate::poly::Poly;
use crate::state::{random_pure_state, random_state, StateCoordinates};
use crate::tensor::{gradient_vf, hamiltonian_vf, PolyVectorField};

/// Coefficients below this are treated as rounding noise when a linear map is
/// turned into a vector field.
const CHOP_TOL: f64 = 1e-13;
/// Smallest eigenvalue allowed along a trajectory.
pub const TRAJECTORY_SLACK: f64 = 1e-6;
/// Default fixed step for non-affine fields.
pub const DEFAULT_DT: f64 = 1e-3;

/// Real-linear map on `n × n` matrices that preserves Hermiticity, stored in
/// the observable basis: `T(σ_ν) = Σ_μ M[μ][ν] σ_μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    n: usize,
    matrix: RMat,
}

impl LinearMap {
    /// Tabulates `f` on the basis. Only the Hermitian part of each image is
    /// kept, which is exact for Hermiticity-preserving `f`.
    pub fn from_fn(basis: &ObservableBasis, f: impl Fn(&CMat) -> CMat) -> Self {
        let d = basis.dim();
        let mut matrix = RMat::zeros(d, d);
        for nu in 0..d {
            let img = f(basis.element_matrix(nu));
            let col = basis.coefficients_of(&img);
            matrix.set_column(nu, &RVec::from_vec(col));
        }
        Self { n: basis.n(), matrix }
    }

    pub fn from_matrix(n: usize, matrix: RMat) -> Result<Self> {
        let d = n * n;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(GeomError::DimensionMismatch { expected: d, got: matrix.nrows() });
        }
        Ok(Self { n, matrix })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, matrix: RMat::zeros(n * n, n * n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, matrix: RMat::identity(n * n, n * n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    /// Image of an observable.
    pub fn apply(&self, a: &Observable) -> Observable {
        let v = &self.matrix * RVec::from_column_slice(&a.coeffs);
        Observable::new(v.as_slice().to_vec())
    }

    /// Matrix of the dual map with respect to the trace pairing.
    pub fn dual(&self, basis: &ObservableBasis) -> RMat {
        let d = self.matrix.nrows();
        RMat::from_fn(d, d, |nu, lam| self.matrix[(lam, nu)] * basis.norm_of(lam) / basis.norm_of(nu))
    }
}

/// `Z(e_a) = e_{T♯a} − e_{T♯I} e_a` in coordinates.
pub fn vf_from_linear_map(basis: &ObservableBasis, t: &LinearMap) -> Result<PolyVectorField> {
    if t.n != basis.n() {
        return Err(GeomError::DimensionMismatch { expected: basis.n(), got: t.n });
    }
    let m = basis.coord_dim();
    let dual = t.dual(basis);
    // e_b for b given as a column of the dual
    let e_of = |col: usize| -> Poly {
        Poly::linear(dual[(0, col)], RVec::from_fn(m, |i, _| dual[(i + 1, col)]))
    };
    let norm = e_of(0);
    let comps = (0..m)
        .map(|j| {
            let mut p = e_of(j + 1);
            for i in 0..m {
                p.add_quad_monomial(i, j, -norm.c1[i]);
            }
            p.c1[j] -= norm.c0;
            p.chop(CHOP_TOL)
        })
        .collect();
    Ok(PolyVectorField::new(comps))
}

/// Field of the Kraus map `ξ ↦ Σ V_j ξ V_j*`.
pub fn kraus_vf(basis: &ObservableBasis, ops: &[CMat]) -> Result<PolyVectorField> {
    if ops.is_empty() {
        return Err(GeomError::InvalidArgument("empty Kraus family".into()));
    }
    for v in ops {
        check_square(basis, v)?;
    }
    let map = LinearMap::from_fn(basis, |x| ops.iter().fold(CMat::zeros(x.nrows(), x.ncols()), |acc, v| acc + v * x * v.adjoint()));
    vf_from_linear_map(basis, &map)
}

fn check_square(basis: &ObservableBasis, m: &CMat) -> Result<()> {
    if m.nrows() != basis.n() || m.ncols() != basis.n() {
        return Err(GeomError::DimensionMismatch { expected: basis.n(), got: m.nrows() });
    }
    Ok(())
}

/// Generator `L(ρ) = −i[H,ρ] − ½{V,ρ} + Σ V_j ρ V_j*` with `V = Σ V_j* V_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    pub n: usize,
    pub hamiltonian: CMat,
    pub jumps: Vec<CMat>,
}

const TRACE_TOL: f64 = 1e-10;

impl LindbladModel {
    pub fn new(hamiltonian: HermitianMatrix, jumps: Vec<CMat>) -> Result<Self> {
        let n = hamiltonian.dim();
        let h = hamiltonian.into_matrix();
        if trace(&h).norm() > TRACE_TOL {
            return Err(GeomError::InvariantViolation(format!("tr H = {}", trace(&h))));
        }
        for (i, v) in jumps.iter().enumerate() {
            if v.nrows() != n || v.ncols() != n {
                return Err(GeomError::DimensionMismatch { expected: n, got: v.nrows() });
            }
            if trace(v).norm() > TRACE_TOL {
                return Err(GeomError::InvariantViolation(format!("tr V_{} = {}", i + 1, trace(v))));
            }
        }
        Ok(Self { n, hamiltonian: h, jumps })
    }

    /// `V = Σ V_j* V_j`
    pub fn jump_sum(&self) -> CMat {
        self.jumps.iter().fold(CMat::zeros(self.n, self.n), |acc, v| acc + v.adjoint() * v)
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = self.jump_sum();
        let mut out = commutator(&self.hamiltonian, rho) * (-I) - anticommutator(&v, rho) * c(0.5, 0.0);
        for j in &self.jumps {
            out += j * rho * j.adjoint();
        }
        out
    }

    pub fn linear_map(&self, basis: &ObservableBasis) -> LinearMap {
        LinearMap::from_fn(basis, |x| self.apply(x))
    }
}

/// Coordinate field of a Lindblad generator; always affine.
pub fn lindblad_vf(basis: &ObservableBasis, model: &LindbladModel) -> Result<PolyVectorField> {
    if model.n != basis.n() {
        return Err(GeomError::DimensionMismatch { expected: basis.n(), got: model.n });
    }
    let z = vf_from_linear_map(basis, &model.linear_map(basis))?;
    if !z.is_affine() {
        return Err(GeomError::InvariantViolation("generator is not trace preserving".into()));
    }
    Ok(z)
}

/// The three pieces of a Lindblad field.
#[derive(Debug, Clone)]
pub struct LindbladParts {
    /// `X̃_{−2H}`: with `⟦a,b⟧ = −(i/2)[a,b]` the commutator term `−i[H,ρ]` is
    /// the Hamiltonian field of `−2H`.
    pub hamiltonian: PolyVectorField,
    /// `Ỹ_V`
    pub gradient: PolyVectorField,
    /// `Z_K` of the jump operators
    pub kraus: PolyVectorField,
}

impl LindbladParts {
    pub fn assemble(&self) -> PolyVectorField {
        self.hamiltonian.sub(&self.gradient).add(&self.kraus)
    }
}

pub fn lindblad_parts(basis: &ObservableBasis, model: &LindbladModel) -> Result<LindbladParts> {
    let h = basis.observable_from_matrix(&HermitianMatrix::new(model.hamiltonian.clone())?)?;
    let v = basis.observable_from_matrix(&HermitianMatrix::new(model.jump_sum())?)?;
    let kraus = if model.jumps.is_empty() {
        PolyVectorField::zeros(basis.coord_dim())
    } else {
        kraus_vf(basis, &model.jumps)?
    };
    Ok(LindbladParts {
        hamiltonian: hamiltonian_vf(basis, &h.scale(-2.0))?,
        gradient: gradient_vf(basis, &v)?,
        kraus,
    })
}

fn pauli3() -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
}

fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// `L(ρ) = −γ(ρ − σ_3 ρ σ_3)`, as the single jump `√γ σ_3`.
pub fn phase_damping(gamma: f64) -> Result<LindbladModel> {
    if gamma < 0.0 {
        return Err(GeomError::InvalidArgument(format!("gamma = {gamma} < 0")));
    }
    LindbladModel::new(HermitianMatrix::new(CMat::zeros(2, 2))?, vec![pauli3() * c(gamma.sqrt(), 0.0)])
}

/// Qubit dissipation with the ladder operators `J_+ = |0⟩⟨1|`, `J_− = |1⟩⟨0|`.
pub fn qubit_dissipation() -> Result<LindbladModel> {
    LindbladModel::new(HermitianMatrix::new(CMat::zeros(2, 2))?, vec![unit(2, 0, 1), unit(2, 1, 0)])
}

/// Decay of the third level onto the upper 2-level block, jumps
/// `|0⟩⟨2|` and `|0⟩⟨2| + |1⟩⟨2|`.
pub fn three_level_decay() -> Result<LindbladModel> {
    LindbladModel::new(
        HermitianMatrix::new(CMat::zeros(3, 3))?,
        vec![unit(3, 0, 2), unit(3, 0, 2) + unit(3, 1, 2)],
    )
}

/// Map acting on matrix units as `|m⟩⟨n| ↦ rate(m, n) |m⟩⟨n|`.
fn entrywise_map(d: usize, rate: impl Fn(usize, usize) -> Complex64) -> Result<LinearMap> {
    let basis = ObservableBasis::new(d)?;
    Ok(LinearMap::from_fn(&basis, |x| CMat::from_fn(d, d, |i, j| x[(i, j)] * rate(i, j))))
}

/// Decoherence of massive particles on a ring of `d` sites:
/// `|m⟩⟨n| ↦ −4γ sin²(π(m−n)/d) |m⟩⟨n|`.
pub fn massive_decoherence(d: usize, gamma: f64) -> Result<LinearMap> {
    if d < 2 {
        return Err(GeomError::InvalidDimension(d));
    }
    entrywise_map(d, |m, n| {
        let s = (PI * (m as f64 - n as f64) / d as f64).sin();
        c(-4.0 * gamma * s * s, 0.0)
    })
}

/// Pure decoherence `L(ρ) = −(1/d) Σ_k γ_k (ρ − U_k ρ U_k*)` with
/// `U_k = Σ_{l=1..d} λ^{−k(l−1)} P_l`, `λ = e^{2πi/d}`, `k = 1..d−1`.
pub fn pure_decoherence(d: usize, gammas: &[f64]) -> Result<LinearMap> {
    if d < 2 {
        return Err(GeomError::InvalidDimension(d));
    }
    if gammas.len() != d - 1 {
        return Err(GeomError::InvalidArgument(format!(
            "expected {} rates, got {}",
            d - 1,
            gammas.len()
        )));
    }
    let units: Vec<CMat> = (1..d)
        .map(|k| {
            let diag = (0..d).map(|l| Complex64::from_polar(1.0, -2.0 * PI * (k * l) as f64 / d as f64));
            CMat::from_diagonal(&nalgebra::DVector::from_iterator(d, diag))
        })
        .collect();
    let basis = ObservableBasis::new(d)?;
    Ok(LinearMap::from_fn(&basis, |x| {
        let mut out = CMat::zeros(d, d);
        for (u, &g) in units.iter().zip(gammas) {
            out -= (x - u * x * u.adjoint()) * c(g / d as f64, 0.0);
        }
        out
    }))
}

/// `X̃_H + Ỹ_S`
pub fn kaufman_morrison(basis: &ObservableBasis, h: &Observable, s: &Observable) -> Result<PolyVectorField> {
    Ok(hamiltonian_vf(basis, h)?.add(&gradient_vf(basis, s)?))
}

/// `out^l = Σ c_{jk}^l a_j b_k` over polynomial coefficients.
fn lie_of_polys(tables: &StructureTables, a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let d = tables.dim;
    let m = a[0].nvars();
    let mut out = vec![Poly::zero(m); d];
    for j in 0..d {
        for k in 0..d {
            if a[j].is_zero(0.0) || b[k].is_zero(0.0) {
                continue;
            }
            let row = tables.lie_row(j, k);
            if row.iter().all(|&v| v == 0.0) {
                continue;
            }
            let prod = a[j].mul_checked(&b[k], 0.0).expect("quadratic at most");
            for (l, &cl) in row.iter().enumerate() {
                if cl != 0.0 {
                    out[l] = &out[l] + &(&prod * cl);
                }
            }
        }
    }
    out
}

/// `ρ̇ = ⟦ρ, ⟦ρ, H⟧⟧`; quadratic and purity preserving.
pub fn gisin(basis: &ObservableBasis, h: &HermitianMatrix) -> Result<PolyVectorField> {
    let hc = basis.observable_from_matrix(h)?;
    let m = basis.coord_dim();
    let mut rho = vec![Poly::constant(m, 1.0 / basis.n() as f64)];
    rho.extend((0..m).map(|j| &Poly::var(m, j) * 0.5));
    let hp: Vec<Poly> = hc.coeffs.iter().map(|&v| Poly::constant(m, v)).collect();
    let inner = lie_of_polys(basis.tables(), &rho, &hp);
    let outer = lie_of_polys(basis.tables(), &rho, &inner);
    // x_j = tr(ρ σ_j) = 2 ρ^j
    Ok(PolyVectorField::new(outer[1..].iter().map(|p| (p * 2.0).chop(CHOP_TOL)).collect()))
}

/// `Ġ = ⟦H, ⟦H, G⟧⟧` pushed to states; linear.
pub fn double_bracket(basis: &ObservableBasis, h: &HermitianMatrix) -> Result<PolyVectorField> {
    let hm = h.matrix().clone();
    if hm.nrows() != basis.n() {
        return Err(GeomError::DimensionMismatch { expected: basis.n(), got: hm.nrows() });
    }
    let map = LinearMap::from_fn(basis, |g| commutator(&hm, &commutator(&hm, g)) * c(-0.25, 0.0));
    let z = vf_from_linear_map(basis, &map)?;
    if !z.is_affine() || z.components.iter().any(|p| p.c0 != 0.0) {
        return Err(GeomError::InvariantViolation("double-bracket field is not linear".into()));
    }
    Ok(z)
}

/// Max coefficient of `⟦H,⟦H,G⟧⟧ − ((H⊙G)⊙H − (H⊙H)⊙G)`.
pub fn double_bracket_identity_residual(basis: &ObservableBasis, h: &Observable, g: &Observable) -> Result<f64> {
    let lhs = basis.lie_product(h, &basis.lie_product(h, g)?)?;
    let hg_h = basis.jordan_product(&basis.jordan_product(h, g)?, h)?;
    let hh_g = basis.jordan_product(&basis.jordan_product(h, h)?, g)?;
    Ok(lhs.max_abs_diff(&hg_h.sub(&hh_g)))
}

/// Random model with traceless Gaussian `H` and `count` traceless jumps.
pub fn random_model<R: Rng>(n: usize, count: usize, rng: &mut R) -> Result<LindbladModel> {
    let mut gauss = |scale: f64| -> CMat {
        CMat::from_fn(n, n, |_, _| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * c(scale, 0.0))
    };
    let traceless = |m: CMat| -> CMat {
        let t = trace(&m) / c(n as f64, 0.0);
        m - CMat::identity(n, n) * t
    };
    let g = gauss(0.5);
    let h = traceless((&g + g.adjoint()) * c(0.5, 0.0));
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    let jumps = (0..count).map(|_| traceless(gauss(0.5))).collect();
    LindbladModel::new(HermitianMatrix::new(h)?, jumps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactAffine,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateCoordinates>,
    pub method: Method,
}

fn rk4_step(z: &PolyVectorField, x: &RVec, h: f64) -> RVec {
    let k1 = z.eval(x.as_slice());
    let k2 = z.eval((x + &k1 * (h / 2.0)).as_slice());
    let k3 = z.eval((x + &k2 * (h / 2.0)).as_slice());
    let k4 = z.eval((x + &k3 * h).as_slice());
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Samples the flow of `z` from `s0` at `0, dt, 2dt, .., t_end`. Affine fields
/// are propagated exactly, others with fixed-step RK4.
pub fn integrate(
    basis: &ObservableBasis,
    z: &PolyVectorField,
    s0: &StateCoordinates,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(GeomError::InvalidArgument(format!("need t_end > 0 and dt > 0, got {t_end}, {dt}")));
    }
    if s0.x.len() != z.dim {
        return Err(GeomError::DimensionMismatch { expected: z.dim, got: s0.x.len() });
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let affine = z.affine_parts().ok();
    let method = if affine.is_some() { Method::ExactAffine } else { Method::Rk4 };
    let step_map = affine.as_ref().map(|(a, b)| affine_flow(a, b, dt));

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = RVec::from_column_slice(&s0.x);
    let mut t = 0.0;
    times.push(0.0);
    states.push(s0.clone());
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        let h = t_next - t;
        x = match (&affine, &step_map) {
            (Some(_), Some((e, s))) if (h - dt).abs() < 1e-15 => e * &x + s,
            (Some((a, b)), _) => {
                let (e, s) = affine_flow(a, b, h);
                e * &x + s
            }
            _ => rk4_step(z, &x, h),
        };
        t = t_next;
        let s = StateCoordinates::new(basis, x.as_slice().to_vec())?;
        let lo = s.min_eigenvalue(basis);
        if !lo.is_finite() || lo < -TRAJECTORY_SLACK {
            return Err(GeomError::IntegrationDiverged { time: t, min_eigenvalue: lo });
        }
        times.push(t);
        states.push(s);
    }
    Ok(Trajectory { times, states, method })
}

/// Zero set of a vector field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySet {
    pub affine: bool,
    /// Affine case: `particular + span(directions)`, unrestricted by positivity.
    pub particular: Option<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    /// Quadratic case: isolated roots found inside the state body.
    pub points: Vec<Vec<f64>>,
}

impl StationarySet {
    pub fn is_empty(&self) -> bool {
        self.particular.is_none() && self.points.is_empty()
    }
}

const ROOT_TOL: f64 = 1e-10;

/// Solves `A x + b = 0`; `None` when inconsistent.
pub fn affine_zero_set(a: &RMat, b: &RVec) -> (Option<RVec>, RMat) {
    let x = -pseudo_inverse(a, 1e-10) * b;
    let kernel = null_space(a, 1e-10);
    if (a * &x + b).amax() > 1e-9 {
        return (None, kernel);
    }
    (Some(x), kernel)
}

/// Stationary points of `z`: exact for affine fields, multi-start
/// Gauss–Newton inside the state body otherwise.
pub fn stationary_points(basis: &ObservableBasis, z: &PolyVectorField, seed: u64) -> StationarySet {
    if let Ok((a, b)) = z.affine_parts() {
        let (x, kernel) = affine_zero_set(&a, &b);
        return StationarySet {
            affine: true,
            particular: x.map(|v| v.iter().map(|&e| if e.abs() < 1e-14 { 0.0 } else { e }).collect()),
            directions: kernel.column_iter().map(|col| col.iter().copied().collect()).collect(),
            points: vec![],
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<StateCoordinates> = vec![StateCoordinates::maximally_mixed(basis)];
    for _ in 0..32 {
        starts.push(random_state(basis, &mut rng));
        starts.push(random_pure_state(basis, &mut rng));
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    for s in starts {
        let mut x = RVec::from_vec(s.x);
        for _ in 0..100 {
            let f = z.eval(x.as_slice());
            if f.amax() <= 1e-14 {
                break;
            }
            let step = pseudo_inverse(&z.jacobian(x.as_slice()), 1e-12) * f;
            x -= step;
        }
        if !x.iter().all(|v| v.is_finite()) || z.eval(x.as_slice()).amax() > ROOT_TOL {
            continue;
        }
        let Ok(s) = StateCoordinates::new_checked(basis, x.as_slice().to_vec(), 1e-8) else {
            continue;
        };
        let x: Vec<f64> = s.x.iter().map(|&e| if e.abs() < 1e-14 { 0.0 } else { e }).collect();
        let dup = points.iter().any(|p| p.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-6));
        if !dup {
            points.push(x);
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    StationarySet { affine: false, particular: None, directions: vec![], points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_basis;
    use crate::state::purity;

    fn lin(m: usize, c0: f64, terms: &[(usize, f64)]) -> Poly {
        let mut p = Poly::constant(m, c0);
        for &(i, v) in terms {
            p.c1[i] += v;
        }
        p
    }

    #[test]
    fn phase_damping_field() {
        let b = build_basis(2).unwrap();
        let z = lindblad_vf(&b, &phase_damping(1.0).unwrap()).unwrap();
        let expect = PolyVectorField::new(vec![lin(3, 0.0, &[(0, -2.0)]), lin(3, 0.0, &[(1, -2.0)]), Poly::zero(3)]);
        assert!(z.max_abs_diff(&expect) < 1e-12);
        // the same map given directly
        let s3 = b.element_matrix(3).clone();
        let map = LinearMap::from_fn(&b, |x| (x - &s3 * x * &s3) * c(-1.0, 0.0));
        assert!(vf_from_linear_map(&b, &map).unwrap().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn trivial_maps() {
        let b = build_basis(3).unwrap();
        assert_eq!(vf_from_linear_map(&b, &LinearMap::zero(3)).unwrap().max_abs(), 0.0);
        assert_eq!(vf_from_linear_map(&b, &LinearMap::identity(3)).unwrap().max_abs(), 0.0);
        assert!(vf_from_linear_map(&b, &LinearMap::zero(2)).is_err());
    }

    #[test]
    fn kraus_fields() {
        let b = build_basis(2).unwrap();
        let id = CMat::identity(2, 2);
        assert!(kraus_vf(&b, &[id]).unwrap().max_abs() < 1e-15);
        let z = kraus_vf(&b, &[b.element_matrix(3).clone()]).unwrap();
        let expect = PolyVectorField::new(vec![lin(3, 0.0, &[(0, -2.0)]), lin(3, 0.0, &[(1, -2.0)]), Poly::zero(3)]);
        assert!(z.max_abs_diff(&expect) < 1e-14);
        assert!(kraus_vf(&b, &[]).is_err());
    }

    #[test]
    fn qubit_dissipation_field() {
        let b = build_basis(2).unwrap();
        let z = lindblad_vf(&b, &qubit_dissipation().unwrap()).unwrap();
        let expect = PolyVectorField::new(vec![
            lin(3, 0.0, &[(0, -1.0)]),
            lin(3, 0.0, &[(1, -1.0)]),
            lin(3, 0.0, &[(2, -2.0)]),
        ]);
        assert!(z.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn three_level_decay_field() {
        let b = build_basis(3).unwrap();
        let z = lindblad_vf(&b, &three_level_decay().unwrap()).unwrap();
        let r3 = 3f64.sqrt();
        // Coherences with the decaying level relax at half the population
        // rate 3 of that level.
        let expect = PolyVectorField::new(vec![
            lin(8, 2.0 / 3.0, &[(7, -2.0 / r3)]),
            Poly::zero(8),
            lin(8, 1.0 / 3.0, &[(7, -1.0 / r3)]),
            lin(8, 0.0, &[(3, -1.5)]),
            lin(8, 0.0, &[(4, -1.5)]),
            lin(8, 0.0, &[(5, -1.5)]),
            lin(8, 0.0, &[(6, -1.5)]),
            lin(8, r3, &[(7, -3.0)]),
        ]);
        assert!(z.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn model_validation() {
        let h = HermitianMatrix::new(CMat::identity(2, 2)).unwrap();
        assert!(matches!(LindbladModel::new(h, vec![]), Err(GeomError::InvariantViolation(_))));
        let z = HermitianMatrix::new(CMat::zeros(2, 2)).unwrap();
        assert!(LindbladModel::new(z, vec![CMat::identity(2, 2)]).is_err());
    }

    #[test]
    fn decomposition_matches() {
        for n in [2, 3] {
            let b = build_basis(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for _ in 0..20 {
                let model = random_model(n, 2, &mut rng).unwrap();
                let z = lindblad_vf(&b, &model).unwrap();
                let parts = lindblad_parts(&b, &model).unwrap();
                assert!(z.max_abs_diff(&parts.assemble()) < 1e-10);
            }
        }
    }

    #[test]
    fn decoherence_rates() {
        let d = 3;
        let b = build_basis(d).unwrap();
        let unit_obs = |i: usize, j: usize| {
            let m = unit(d, i, j) + unit(d, j, i);
            b.observable_from_matrix(&HermitianMatrix::new(m).unwrap()).unwrap()
        };
        let massive = massive_decoherence(3, 1.0).unwrap();
        let pure = pure_decoherence(3, &[1.0, 1.0]).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let a = unit_obs(i, j);
            assert!(massive.apply(&a).max_abs_diff(&a.scale(-3.0)) < 1e-12);
            assert!(pure.apply(&a).max_abs_diff(&a.scale(-1.0)) < 1e-12);
        }
        for i in 0..3 {
            let a = unit_obs(i, i);
            assert!(massive.apply(&a).max_abs_diff(&a.scale(0.0)) < 1e-12);
            assert!(pure.apply(&a).max_abs_diff(&a.scale(0.0)) < 1e-12);
        }
        let two = build_basis(2).unwrap();
        let q2 = two.observable_from_matrix(&HermitianMatrix::new(unit(2, 0, 1) + unit(2, 1, 0)).unwrap()).unwrap();
        assert!(massive_decoherence(2, 1.0).unwrap().apply(&q2).max_abs_diff(&q2.scale(-4.0)) < 1e-12);
        // d = 2 pure decoherence is phase damping with half the rate
        let pd = phase_damping(0.5).unwrap().linear_map(&two);
        assert!((pure_decoherence(2, &[1.0]).unwrap().matrix() - pd.matrix()).amax() < 1e-12);
        assert!(pure_decoherence(3, &[1.0]).is_err());
        assert!(massive_decoherence(1, 1.0).is_err());
    }

    #[test]
    fn kaufman_morrison_fields() {
        let b = build_basis(2).unwrap();
        let zero = Observable::new(vec![0.0; 4]);
        let h = b.element(3);
        assert_eq!(kaufman_morrison(&b, &h, &zero).unwrap(), hamiltonian_vf(&b, &h).unwrap());
        let z = kaufman_morrison(&b, &zero, &h.scale(-1.0)).unwrap();
        assert!(z.max_abs_diff(&gradient_vf(&b, &h).unwrap().scale(-1.0)) < 1e-15);
        let z = kaufman_morrison(&b, &h, &h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = random_pure_state(&b, &mut rng);
            let v = z.eval(&s.x);
            assert!(v.iter().zip(&s.x).map(|(p, q)| p * q).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn gisin_conserves_purity() {
        let b = build_basis(2).unwrap();
        let h = HermitianMatrix::new(b.element_matrix(3).clone()).unwrap();
        let z = gisin(&b, &h).unwrap();
        assert!(!z.is_affine());
        // eigenprojector of H is stationary
        assert!(z.eval(&[0.0, 0.0, 1.0]).amax() < 1e-15);
        let s0 = StateCoordinates::new(&b, vec![0.6, 0.0, 0.3]).unwrap();
        let traj = integrate(&b, &z, &s0, 5.0, 1e-3).unwrap();
        assert_eq!(traj.method, Method::Rk4);
        let p0 = purity(&s0);
        let drift = traj.states.iter().fold(0.0_f64, |m, s| m.max((purity(s) - p0).abs()));
        assert!(drift < 1e-8, "drift {drift}");
    }

    #[test]
    fn gisin_matches_matrix_form() {
        let b = build_basis(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = b.to_matrix(&b.random_observable(&mut rng));
        let z = gisin(&b, &HermitianMatrix::new(h.clone()).unwrap()).unwrap();
        let s = random_state(&b, &mut rng);
        let rho = s.to_matrix(&b);
        let lie = |x: &CMat, y: &CMat| commutator(x, y) * c(0.0, -0.5);
        let dot = lie(&rho, &lie(&rho, &h));
        let expect: Vec<f64> = (1..9).map(|j| trace(&(&dot * b.element_matrix(j))).re).collect();
        let got = z.eval(&s.x);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn double_bracket_is_linear() {
        let b = build_basis(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = b.random_observable(&mut rng);
        let z = double_bracket(&b, &HermitianMatrix::new(b.to_matrix(&h)).unwrap()).unwrap();
        assert!(z.is_affine());
        assert!(z.components.iter().all(|p| p.c0 == 0.0));
        for _ in 0..100 {
            let g = b.random_observable(&mut rng);
            assert!(double_bracket_identity_residual(&b, &h, &g).unwrap() < 1e-10);
        }
        // G commuting with H does not move
        let two = build_basis(2).unwrap();
        let z = double_bracket(&two, &HermitianMatrix::new(two.element_matrix(3).clone()).unwrap()).unwrap();
        assert!(z.eval(&[0.0, 0.0, 0.7]).amax() < 1e-15);
    }

    #[test]
    fn integration_examples() {
        let b = build_basis(2).unwrap();
        let z = lindblad_vf(&b, &phase_damping(1.0).unwrap()).unwrap();
        let s0 = StateCoordinates::new(&b, vec![1.0, 0.0, 0.0]).unwrap();
        let traj = integrate(&b, &z, &s0, 1.0, 0.1).unwrap();
        assert_eq!(traj.method, Method::ExactAffine);
        assert_eq!(traj.times.len(), 11);
        let last = traj.states.last().unwrap();
        assert!((last.x[0] - (-2.0f64).exp()).abs() < 1e-12);

        let zd = lindblad_vf(&b, &qubit_dissipation().unwrap()).unwrap();
        let s0 = StateCoordinates::new(&b, vec![0.0, 0.0, 1.0]).unwrap();
        let traj = integrate(&b, &zd, &s0, 2.0, 0.25).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.x[2] - (-2.0 * t).exp()).abs() < 1e-12);
        }

        let zero = PolyVectorField::zeros(3);
        let s0 = StateCoordinates::new(&b, vec![0.1, 0.2, 0.3]).unwrap();
        let traj = integrate(&b, &zero, &s0, 1.0, 0.3).unwrap();
        assert!(traj.states.iter().all(|s| s.x == s0.x));
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-15);
        assert!(integrate(&b, &zero, &s0, -1.0, 0.1).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let b = build_basis(2).unwrap();
        // outward radial field leaves the ball
        let z = PolyVectorField::from_affine(&RMat::identity(3, 3), &RVec::zeros(3));
        let s0 = StateCoordinates::new(&b, vec![0.0, 0.0, 0.5]).unwrap();
        match integrate(&b, &z, &s0, 2.0, 0.1) {
            Err(GeomError::IntegrationDiverged { time, .. }) => assert!((time - 0.7).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn magnetic_field_stationary_sets() {
        let b = build_basis(2).unwrap();
        let h = b.element(3);
        let x = stationary_points(&b, &hamiltonian_vf(&b, &h).unwrap(), 1);
        assert!(x.affine);
        assert_eq!(x.particular, Some(vec![0.0, 0.0, 0.0]));
        assert_eq!(x.directions.len(), 1);
        assert!((x.directions[0][2].abs() - 1.0).abs() < 1e-12);
        let y = stationary_points(&b, &gradient_vf(&b, &h).unwrap(), 1);
        assert!(!y.affine);
        assert_eq!(y.points, vec![vec![0.0, 0.0, -1.0], vec![0.0, 0.0, 1.0]]);
    }

    #[test]
    fn decay_fixed_set() {
        let b = build_basis(3).unwrap();
        let z = lindblad_vf(&b, &three_level_decay().unwrap()).unwrap();
        let set = stationary_points(&b, &z, 0);
        let p = set.particular.unwrap();
        assert!((p[7] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(p[3..7].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(set.directions.len(), 3);
        for d in &set.directions {
            assert!(d[3..].iter().all(|v| v.abs() < 1e-12));
        }
    }
}

//! Lie–Jordan algebra of observables of an n-level system.
//!
//! Observables are real combinations `a = Σ a^μ σ_μ` of a Hermitian basis
//! with `σ_0 = I` and `tr(σ_j σ_k) = 2 δ_jk` for `j, k ≥ 1`. The two products
//! are
//!
//! ```text
//! ⟦a, b⟧ = -(i/2)(ab - ba)        a ⊙ b = (ab + ba)/2
//! ```
//!
//! so that `ab = a ⊙ b + i ⟦a, b⟧`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{anticommutator, c, commutator, hermiticity_defect, trace, CMat, RVec, I};
use crate::par::{self, Execution};

/// Entrywise tolerance used when validating Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A validated Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMat,
}

impl HermitianMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(GeomError::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(GeomError::NotHermitian(defect));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }
}

/// Real coefficient vector `a^μ`, `μ = 0..n²`, of an observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub coeffs: Vec<f64>,
}

impl Observable {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Traceless part `a^j`, `j ≥ 1`.
    pub fn traceless(&self) -> &[f64] {
        &self.coeffs[1..]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Structure constants of a real algebra with basis `e_0 = 1, e_1, ..`:
/// `⟦e_j, e_k⟧ = Σ_l lie[j][k][l] e_l`, `e_j ⊙ e_k = Σ_l jordan[j][k][l] e_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureTables {
    pub dim: usize,
    pub lie: Vec<f64>,
    pub jordan: Vec<f64>,
}

/// Maximum residuals of the Lie–Jordan identities over a set of triples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub antisymmetry: f64,
    pub symmetry: f64,
    pub jacobi: f64,
    pub jordan_identity: f64,
    pub leibniz: f64,
    /// `a⊙(b⊙c) − (a⊙b)⊙c − (⟦a,⟦b,c⟧⟧ − ⟦⟦a,b⟧,c⟧)` with the proportionality constant fixed to 1.
    pub associator: f64,
    pub star_associativity: f64,
    pub triples: usize,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.antisymmetry,
            self.symmetry,
            self.jacobi,
            self.jordan_identity,
            self.leibniz,
            self.associator,
            self.star_associativity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    fn merge(self, other: Self) -> Self {
        Self {
            antisymmetry: self.antisymmetry.max(other.antisymmetry),
            symmetry: self.symmetry.max(other.symmetry),
            jacobi: self.jacobi.max(other.jacobi),
            jordan_identity: self.jordan_identity.max(other.jordan_identity),
            leibniz: self.leibniz.max(other.leibniz),
            associator: self.associator.max(other.associator),
            star_associativity: self.star_associativity.max(other.star_associativity),
            triples: self.triples + other.triples,
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn axpy(out: &mut [f64], s: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += s * v;
    }
}

impl StructureTables {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            lie: vec![0.0; dim * dim * dim],
            jordan: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    fn idx(&self, j: usize, k: usize) -> usize {
        (j * self.dim + k) * self.dim
    }

    pub fn lie_constant(&self, j: usize, k: usize, l: usize) -> f64 {
        self.lie[self.idx(j, k) + l]
    }

    pub fn jordan_constant(&self, j: usize, k: usize, l: usize) -> f64 {
        self.jordan[self.idx(j, k) + l]
    }

    pub fn lie_row(&self, j: usize, k: usize) -> &[f64] {
        let s = self.idx(j, k);
        &self.lie[s..s + self.dim]
    }

    pub fn jordan_row(&self, j: usize, k: usize) -> &[f64] {
        let s = self.idx(j, k);
        &self.jordan[s..s + self.dim]
    }

    fn bilinear(&self, table: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            for (k, &bk) in b.iter().enumerate() {
                if bk == 0.0 {
                    continue;
                }
                let s = self.idx(j, k);
                axpy(&mut out, aj * bk, &table[s..s + n]);
            }
        }
        out
    }

    pub fn lie(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.bilinear(&self.lie, a, b)
    }

    pub fn jordan(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.bilinear(&self.jordan, a, b)
    }

    /// `a * b = a ⊙ b + i ⟦a, b⟧`, extended complex-bilinearly.
    pub fn star(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![c(0.0, 0.0); n];
        for (j, &aj) in a.iter().enumerate() {
            if aj == c(0.0, 0.0) {
                continue;
            }
            for (k, &bk) in b.iter().enumerate() {
                if bk == c(0.0, 0.0) {
                    continue;
                }
                let w = aj * bk;
                let s = self.idx(j, k);
                for l in 0..n {
                    out[l] += w * c(self.jordan[s + l], self.lie[s + l]);
                }
            }
        }
        out
    }

    /// Residuals of the Lie–Jordan identities for one triple.
    pub fn residuals(&self, a: &[f64], b: &[f64], cc: &[f64]) -> AxiomReport {
        let lie = |x: &[f64], y: &[f64]| self.lie(x, y);
        let jor = |x: &[f64], y: &[f64]| self.jordan(x, y);

        let ab = lie(a, b);
        let ba = lie(b, a);
        let antisymmetry = max_abs(&ab.iter().zip(&ba).map(|(x, y)| x + y).collect::<Vec<_>>());
        let symmetry = max_diff(&jor(a, b), &jor(b, a));

        let bc = lie(b, cc);
        let ca = lie(cc, a);
        let jac: Vec<f64> = {
            let t1 = lie(a, &bc);
            let t2 = lie(b, &ca);
            let t3 = lie(cc, &ab);
            (0..self.dim).map(|l| t1[l] + t2[l] + t3[l]).collect()
        };
        let jacobi = max_abs(&jac);

        let aa = jor(a, a);
        let lhs = jor(&jor(a, b), &aa);
        let rhs = jor(a, &jor(b, &aa));
        let jordan_identity = max_diff(&lhs, &rhs);

        let b_dot_c = jor(b, cc);
        let l_lhs = lie(a, &b_dot_c);
        let ac = lie(a, cc);
        let l_rhs: Vec<f64> = jor(&ab, cc).iter().zip(jor(b, &ac)).map(|(x, y)| x + y).collect();
        let leibniz = max_diff(&l_lhs, &l_rhs);

        let assoc_j: Vec<f64> = jor(a, &b_dot_c)
            .iter()
            .zip(jor(&jor(a, b), cc))
            .map(|(x, y)| x - y)
            .collect();
        let assoc_l: Vec<f64> = lie(a, &bc).iter().zip(lie(&ab, cc)).map(|(x, y)| x - y).collect();
        let associator = max_diff(&assoc_j, &assoc_l);

        let to_c = |v: &[f64]| v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>();
        let (ca_, cb_, cc_) = (to_c(a), to_c(b), to_c(cc));
        let left = self.star(&self.star(&ca_, &cb_), &cc_);
        let right = self.star(&ca_, &self.star(&cb_, &cc_));
        let star_associativity = left
            .iter()
            .zip(&right)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()));

        AxiomReport {
            antisymmetry,
            symmetry,
            jacobi,
            jordan_identity,
            leibniz,
            associator,
            star_associativity,
            triples: 1,
        }
    }

    /// Residuals over every triple of basis elements.
    pub fn axioms_over_basis(&self, exec: Execution) -> AxiomReport {
        let n = self.dim;
        let unit = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let reports = par::map_indexed(n * n * n, exec, |t| {
            let (i, j, k) = (t / (n * n), (t / n) % n, t % n);
            self.residuals(&unit(i), &unit(j), &unit(k))
        });
        reports.into_iter().fold(AxiomReport::default(), AxiomReport::merge)
    }

    /// Residuals over `trials` pseudo-random triples drawn from `[-1, 1]^dim`.
    pub fn axioms_random(&self, trials: usize, seed: u64, exec: Execution) -> AxiomReport {
        let n = self.dim;
        let reports = par::map_indexed(trials, exec, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let mut draw = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (a, b, cc) = (draw(), draw(), draw());
            self.residuals(&a, &b, &cc)
        });
        reports.into_iter().fold(AxiomReport::default(), AxiomReport::merge)
    }
}

/// Hermitian basis `{σ_0 = I, σ_1, .., σ_{n²−1}}` with its structure constants.
#[derive(Debug, Clone)]
pub struct ObservableBasis {
    n: usize,
    elements: Vec<HermitianMatrix>,
    tables: StructureTables,
}

fn unit_matrix(n: usize, i: usize, j: usize, v: Complex64) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = v;
    m
}

fn symmetric_pair(n: usize, i: usize, j: usize) -> CMat {
    unit_matrix(n, i, j, c(1.0, 0.0)) + unit_matrix(n, j, i, c(1.0, 0.0))
}

fn antisymmetric_pair(n: usize, i: usize, j: usize) -> CMat {
    unit_matrix(n, i, j, -I) + unit_matrix(n, j, i, I)
}

/// `sqrt(2/(l(l+1))) diag(1,..,1, -l, 0,..)` with `l` leading ones.
fn diagonal_generator(n: usize, l: usize) -> CMat {
    let s = (2.0 / (l * (l + 1)) as f64).sqrt();
    let mut m = CMat::zeros(n, n);
    for i in 0..l {
        m[(i, i)] = c(s, 0.0);
    }
    m[(l, l)] = c(-s * l as f64, 0.0);
    m
}

fn generators(n: usize) -> Vec<CMat> {
    match n {
        // Pauli ordering σ_1, σ_2, σ_3
        2 => vec![symmetric_pair(2, 0, 1), antisymmetric_pair(2, 0, 1), diagonal_generator(2, 1)],
        // Gell-Mann ordering λ_1 .. λ_8
        3 => vec![
            symmetric_pair(3, 0, 1),
            antisymmetric_pair(3, 0, 1),
            diagonal_generator(3, 1),
            symmetric_pair(3, 0, 2),
            antisymmetric_pair(3, 0, 2),
            symmetric_pair(3, 1, 2),
            antisymmetric_pair(3, 1, 2),
            diagonal_generator(3, 2),
        ],
        _ => {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let mut out: Vec<CMat> = pairs.iter().map(|&(i, j)| symmetric_pair(n, i, j)).collect();
            out.extend(pairs.iter().map(|&(i, j)| antisymmetric_pair(n, i, j)));
            out.extend((1..n).map(|l| diagonal_generator(n, l)));
            out
        }
    }
}

/// Drop floating-point dust so that zero patterns are exact.
fn clean(v: f64) -> f64 {
    if v.abs() < 1e-14 {
        0.0
    } else {
        v
    }
}

impl ObservableBasis {
    /// Pauli basis for `n = 2`, Gell-Mann for `n = 3`, generalized Gell-Mann
    /// (symmetric pairs, antisymmetric pairs, diagonal) for `n ≥ 4`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeomError::InvalidDimension(n));
        }
        let mut mats = vec![CMat::identity(n, n)];
        mats.extend(generators(n));
        let elements = mats
            .into_iter()
            .map(HermitianMatrix::new)
            .collect::<Result<Vec<_>>>()?;
        let tables = Self::compute_tables(n, &elements);
        Ok(Self { n, elements, tables })
    }

    fn compute_tables(n: usize, elements: &[HermitianMatrix]) -> StructureTables {
        let dim = elements.len();
        let mut t = StructureTables::zeros(dim);
        let norm = |l: usize| if l == 0 { n as f64 } else { 2.0 };
        for j in 0..dim {
            for k in j..dim {
                let (sj, sk) = (elements[j].matrix(), elements[k].matrix());
                let lie = commutator(sj, sk) * c(0.0, -0.5);
                let jor = anticommutator(sj, sk) * c(0.5, 0.0);
                for l in 0..dim {
                    let sl = elements[l].matrix();
                    let cl = clean(trace(&(&lie * sl)).re / norm(l));
                    let dl = clean(trace(&(&jor * sl)).re / norm(l));
                    let (jk, kj) = ((j * dim + k) * dim + l, (k * dim + j) * dim + l);
                    if j == k {
                        t.lie[jk] = 0.0;
                    } else {
                        t.lie[jk] = cl;
                        t.lie[kj] = -cl;
                    }
                    t.jordan[jk] = dl;
                    t.jordan[kj] = dl;
                }
            }
        }
        t
    }

    /// Number of levels.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of basis elements, `n²`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Number of state coordinates, `n² − 1`.
    pub fn coord_dim(&self) -> usize {
        self.elements.len() - 1
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn element_matrix(&self, mu: usize) -> &CMat {
        self.elements[mu].matrix()
    }

    pub fn tables(&self) -> &StructureTables {
        &self.tables
    }

    /// `c_{jk}^l`
    pub fn lie_constant(&self, j: usize, k: usize, l: usize) -> f64 {
        self.tables.lie_constant(j, k, l)
    }

    /// `d_{jk}^l`
    pub fn jordan_constant(&self, j: usize, k: usize, l: usize) -> f64 {
        self.tables.jordan_constant(j, k, l)
    }

    /// `tr(σ_μ σ_μ)`
    pub fn norm_of(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.n as f64
        } else {
            2.0
        }
    }

    pub fn identity(&self) -> Observable {
        self.element(0)
    }

    pub fn element(&self, mu: usize) -> Observable {
        let mut v = vec![0.0; self.dim()];
        v[mu] = 1.0;
        Observable::new(v)
    }

    pub fn observable(&self, coeffs: Vec<f64>) -> Result<Observable> {
        self.check_len(coeffs.len())?;
        Ok(Observable::new(coeffs))
    }

    /// Traceless observable `Σ_j v_j σ_j`.
    pub fn traceless_observable(&self, v: &[f64]) -> Result<Observable> {
        self.check_len(v.len() + 1)?;
        let mut coeffs = vec![0.0];
        coeffs.extend_from_slice(v);
        Ok(Observable::new(coeffs))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(GeomError::DimensionMismatch { expected: self.dim(), got: len });
        }
        Ok(())
    }

    pub fn check(&self, a: &Observable) -> Result<()> {
        self.check_len(a.len())
    }

    /// `Σ a^μ σ_μ`
    pub fn to_matrix(&self, a: &Observable) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (mu, &v) in a.coeffs.iter().enumerate() {
            if v != 0.0 {
                m += self.element_matrix(mu) * c(v, 0.0);
            }
        }
        m
    }

    /// Coefficients of an arbitrary matrix; real parts only, so this is exact
    /// for Hermitian input.
    pub fn coefficients_of(&self, m: &CMat) -> Vec<f64> {
        (0..self.dim())
            .map(|mu| trace(&(m * self.element_matrix(mu))).re / self.norm_of(mu))
            .collect()
    }

    pub fn observable_from_matrix(&self, m: &HermitianMatrix) -> Result<Observable> {
        if m.dim() != self.n {
            return Err(GeomError::DimensionMismatch { expected: self.n, got: m.dim() });
        }
        Ok(Observable::new(self.coefficients_of(m.matrix())))
    }

    /// `⟦a, b⟧` through the structure constants.
    pub fn lie_product(&self, a: &Observable, b: &Observable) -> Result<Observable> {
        self.check(a)?;
        self.check(b)?;
        Ok(Observable::new(self.tables.lie(&a.coeffs, &b.coeffs)))
    }

    /// `a ⊙ b` through the structure constants.
    pub fn jordan_product(&self, a: &Observable, b: &Observable) -> Result<Observable> {
        self.check(a)?;
        self.check(b)?;
        Ok(Observable::new(self.tables.jordan(&a.coeffs, &b.coeffs)))
    }

    /// Hermitian parts `(re, im)` of `ab = re + i·im`.
    pub fn associative_product(
        &self,
        a: &Observable,
        b: &Observable,
    ) -> Result<(Observable, Observable)> {
        Ok((self.jordan_product(a, b)?, self.lie_product(a, b)?))
    }

    /// `⟦a, b⟧` computed from matrices.
    pub fn lie_product_matrix(&self, a: &Observable, b: &Observable) -> Result<Observable> {
        self.check(a)?;
        self.check(b)?;
        let m = commutator(&self.to_matrix(a), &self.to_matrix(b)) * c(0.0, -0.5);
        Ok(Observable::new(self.coefficients_of(&m)))
    }

    /// `a ⊙ b` computed from matrices.
    pub fn jordan_product_matrix(&self, a: &Observable, b: &Observable) -> Result<Observable> {
        self.check(a)?;
        self.check(b)?;
        let m = anticommutator(&self.to_matrix(a), &self.to_matrix(b)) * c(0.5, 0.0);
        Ok(Observable::new(self.coefficients_of(&m)))
    }

    /// Random observable with coefficients in `[-1, 1]`.
    pub fn random_observable<R: Rng>(&self, rng: &mut R) -> Observable {
        Observable::new((0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }
}

/// Builds the observable basis for an `n`-level system.
pub fn build_basis(n: usize) -> Result<ObservableBasis> {
    ObservableBasis::new(n)
}

/// Checks the Lie–Jordan identities on `trials` random triples.
pub fn verify_lie_jordan_axioms(basis: &ObservableBasis, trials: usize, seed: u64) -> AxiomReport {
    basis.tables().axioms_random(trials.max(1), seed, Execution::default())
}

/// Coefficient vector as an nalgebra column.
pub fn as_vector(a: &Observable) -> RVec {
    DVector::from_column_slice(&a.coeffs)
}

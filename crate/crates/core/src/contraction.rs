//! Transport of the tensor fields along affine flows and their long-time
//! limits.
//!
//! A tensor `T` moves as `T_t = e^{−t 𝓛_Z} T`. The Lie derivative is a linear
//! map on the coefficient space of degree-≤2 tensors; it is stored sparse and
//! analyzed on the Krylov space of the initial tensor, which is invariant and
//! usually much smaller than the full coefficient space.

use nalgebra::Complex;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AxiomReport, ObservableBasis, StructureTables};
use crate::dynamics::affine_zero_set;
use crate::error::{GeomError, Result};
use crate::linalg::{affine_flow, expm, null_space_complex, CMat, CVec, RMat, RVec};
use crate::par::{self, Execution};
use crate::poly::{flat_len, Poly, SparsePoly};
use crate::state::StateCoordinates;
use crate::tensor::{lambda_d, r_d, PolyTensorField, PolyVectorField, Symmetry, OVERFLOW_TOL};

/// Default zero-projection tolerance, relative to `‖T_0‖`.
pub const LIMIT_TOL: f64 = 1e-9;
/// Eigenvalues closer than this are one cluster.
const CLUSTER_TOL: f64 = 1e-5;
/// Arnoldi stops once a new direction is this small relative to its image.
const BREAKDOWN_TOL: f64 = 1e-10;

/// `Z·∇p` for `Z = A x + b`.
fn directional_affine(a: &RMat, b: &RVec, p: &Poly) -> Poly {
    let c0 = b.dot(&p.c1);
    let c1 = a.transpose() * &p.c1 + &p.c2 * b * 2.0;
    let c2 = &p.c2 * a + a.transpose() * &p.c2;
    Poly { c0, c1, c2 }
}

fn lie_derivative_affine(a: &RMat, b: &RVec, t: &PolyTensorField) -> PolyTensorField {
    let m = t.dim;
    let mut out = t.map(|p| if p.is_zero(0.0) { Poly::zero(m) } else { directional_affine(a, b, p) });
    for i in 0..m {
        for k in 0..m {
            let p = t.get(i, k);
            if p.is_zero(0.0) {
                continue;
            }
            // −T^{ik} ∂_i Z^j − T^{ji} ∂_i Z^k, written per source entry
            for j in 0..m {
                let aji = a[(j, i)];
                if aji != 0.0 {
                    out.components[j * m + k] = &out.components[j * m + k] - &(p * aji);
                }
            }
            for l in 0..m {
                let alk = a[(l, k)];
                if alk != 0.0 {
                    out.components[i * m + l] = &out.components[i * m + l] - &(p * alk);
                }
            }
        }
    }
    // mirror so the stored sector is exactly (anti)symmetric
    for (j, k) in sector_pairs(m, t.symmetry) {
        let p = out.get(j, k).clone();
        out.set(j, k, p);
    }
    out
}

/// `(𝓛_Z T)^{jk} = Z^m ∂_m T^{jk} − T^{mk} ∂_m Z^j − T^{jm} ∂_m Z^k`.
pub fn lie_derivative(z: &PolyVectorField, t: &PolyTensorField) -> Result<PolyTensorField> {
    if z.dim != t.dim {
        return Err(GeomError::DimensionMismatch { expected: t.dim, got: z.dim });
    }
    if let Ok((a, b)) = z.affine_parts() {
        return Ok(lie_derivative_affine(&a, &b, t));
    }
    let m = t.dim;
    let sparse_t: Vec<SparsePoly> = t.components.iter().map(SparsePoly::from).collect();
    let dz: Vec<Vec<SparsePoly>> = z
        .components
        .iter()
        .map(|p| (0..m).map(|i| SparsePoly::from(&p.deriv(i))).collect())
        .collect();
    let mut comps = Vec::with_capacity(m * m);
    for j in 0..m {
        for k in 0..m {
            let mut acc = z.apply_sparse(t.get(j, k));
            for i in 0..m {
                acc = acc.add(&sparse_t[i * m + k].mul(&dz[j][i]).scale(-1.0));
                acc = acc.add(&sparse_t[j * m + i].mul(&dz[k][i]).scale(-1.0));
            }
            let p = acc.to_poly(m, OVERFLOW_TOL).map_err(|residual| GeomError::DegreeOverflow {
                component: format!("({}, {})", j + 1, k + 1),
                residual,
            })?;
            comps.push(p);
        }
    }
    Ok(PolyTensorField { dim: m, symmetry: t.symmetry, components: comps })
}

/// Components stored for a symmetry class: `j < k`, `j ≤ k`, or all.
pub fn sector_pairs(dim: usize, symmetry: Symmetry) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..dim {
        for k in 0..dim {
            let keep = match symmetry {
                Symmetry::Antisymmetric => j < k,
                Symmetry::Symmetric => j <= k,
                Symmetry::None => true,
            };
            if keep {
                out.push((j, k));
            }
        }
    }
    out
}

/// Coefficients of the stored components, each in [`Poly::flatten`] order.
pub fn flatten_tensor(t: &PolyTensorField) -> Vec<f64> {
    let block = flat_len(t.dim);
    let pairs = sector_pairs(t.dim, t.symmetry);
    let mut out = vec![0.0; pairs.len() * block];
    for (q, &(j, k)) in pairs.iter().enumerate() {
        t.get(j, k).flatten_into(&mut out[q * block..(q + 1) * block]);
    }
    out
}

pub fn unflatten_tensor(dim: usize, symmetry: Symmetry, v: &[f64]) -> PolyTensorField {
    let block = flat_len(dim);
    let mut t = PolyTensorField::zeros(dim, symmetry);
    for (q, &(j, k)) in sector_pairs(dim, symmetry).iter().enumerate() {
        t.set(j, k, Poly::from_flat(dim, &v[q * block..(q + 1) * block]));
    }
    t
}

/// Sparse matrix of `T ↦ 𝓛_Z T` on one symmetry sector.
#[derive(Debug, Clone)]
pub struct LieDerivativeSuperoperator {
    pub dim: usize,
    pub symmetry: Symmetry,
    pub source: PolyVectorField,
    size: usize,
    /// Column-compressed entries.
    columns: Vec<Vec<(usize, f64)>>,
}

/// Builds the Lie-derivative matrix of an affine field, one column per unit
/// coefficient tensor.
pub fn build_superoperator(
    z: &PolyVectorField,
    symmetry: Symmetry,
    exec: Execution,
) -> Result<LieDerivativeSuperoperator> {
    let (a, b) = z.affine_parts()?;
    let m = z.dim;
    let block = flat_len(m);
    let pairs = sector_pairs(m, symmetry);
    let size = pairs.len() * block;
    let columns = par::map_indexed(size, exec, |col| {
        let (j, k) = pairs[col / block];
        let mut unit = vec![0.0; block];
        unit[col % block] = 1.0;
        let mut t = PolyTensorField::zeros(m, symmetry);
        t.set(j, k, Poly::from_flat(m, &unit));
        let image = flatten_tensor(&lie_derivative_affine(&a, &b, &t));
        image.into_iter().enumerate().filter(|&(_, v)| v.abs() > 1e-15).collect()
    });
    Ok(LieDerivativeSuperoperator { dim: m, symmetry, source: z.clone(), size, columns })
}

impl LieDerivativeSuperoperator {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (col, entries) in self.columns.iter().enumerate() {
            let x = v[col];
            if x != 0.0 {
                for &(row, val) in entries {
                    out[row] += val * x;
                }
            }
        }
        out
    }

    pub fn apply_tensor(&self, t: &PolyTensorField) -> PolyTensorField {
        unflatten_tensor(self.dim, self.symmetry, &self.apply(&flatten_tensor(t)))
    }

    pub fn to_dense(&self) -> RMat {
        let mut m = RMat::zeros(self.size, self.size);
        for (col, entries) in self.columns.iter().enumerate() {
            for &(row, val) in entries {
                m[(row, col)] = val;
            }
        }
        m
    }
}

/// Orthonormal Krylov basis `Q` of `v` under `M` and `H = Qᵀ M Q`.
fn arnoldi(op: &LieDerivativeSuperoperator, v: &[f64]) -> (RMat, RMat) {
    let n = op.size;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (RMat::zeros(n, 0), RMat::zeros(0, 0));
    }
    let mut q: Vec<RVec> = vec![RVec::from_column_slice(v) / norm];
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    loop {
        let j = q.len() - 1;
        let mut w = RVec::from_vec(op.apply(q[j].as_slice()));
        let scale = w.norm();
        let mut h = vec![0.0; q.len() + 1];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = qi.dot(&w);
                h[i] += c;
                w.axpy(-c, qi, 1.0);
            }
        }
        let beta = w.norm();
        if beta <= BREAKDOWN_TOL * scale.max(1.0) || q.len() == n {
            h.pop();
            h_cols.push(h);
            break;
        }
        h[q.len()] = beta;
        h_cols.push(h);
        q.push(w / beta);
    }
    let k = q.len();
    let mut qm = RMat::zeros(n, k);
    for (i, col) in q.iter().enumerate() {
        qm.set_column(i, col);
    }
    let mut hm = RMat::zeros(k, k);
    for (j, col) in h_cols.iter().enumerate() {
        for (i, &val) in col.iter().enumerate().take(k) {
            hm[(i, j)] = val;
        }
    }
    (qm, hm)
}

/// `t ↦ e^{−t M} T_0` for a fixed initial tensor.
#[derive(Debug, Clone)]
pub struct TensorFlowFamily {
    pub initial: PolyTensorField,
    dim: usize,
    symmetry: Symmetry,
    basis: RMat,
    reduced: RMat,
    coords: RVec,
}

impl TensorFlowFamily {
    pub fn new(generator: &LieDerivativeSuperoperator, initial: &PolyTensorField) -> Result<Self> {
        if initial.dim != generator.dim || initial.symmetry != generator.symmetry {
            return Err(GeomError::InvalidArgument("tensor does not match the generator sector".into()));
        }
        let v = flatten_tensor(initial);
        let (basis, reduced) = arnoldi(generator, &v);
        let coords = basis.transpose() * RVec::from_vec(v);
        Ok(Self { initial: initial.clone(), dim: generator.dim, symmetry: generator.symmetry, basis, reduced, coords })
    }

    /// Dimension of the invariant subspace generated by the initial tensor.
    pub fn krylov_dim(&self) -> usize {
        self.reduced.nrows()
    }

    /// The generator restricted to the Krylov space.
    pub fn reduced_generator(&self) -> &RMat {
        &self.reduced
    }

    pub fn eval(&self, t: f64) -> PolyTensorField {
        if t == 0.0 {
            return self.initial.clone();
        }
        if self.krylov_dim() == 0 {
            return PolyTensorField::zeros(self.dim, self.symmetry);
        }
        let c = expm(&(&self.reduced * -t)) * &self.coords;
        let v = &self.basis * c;
        unflatten_tensor(self.dim, self.symmetry, v.as_slice())
    }

    fn lift(&self, c: &CVec) -> PolyTensorField {
        let re = &self.basis * c.map(|z| z.re);
        unflatten_tensor(self.dim, self.symmetry, re.as_slice())
    }

    fn lift_imag(&self, c: &CVec) -> PolyTensorField {
        let im = &self.basis * c.map(|z| z.im);
        unflatten_tensor(self.dim, self.symmetry, im.as_slice())
    }
}

/// `flow_tensor(fam, t) = e^{−t M} T_0`.
pub fn flow_tensor(fam: &TensorFlowFamily, t: f64) -> PolyTensorField {
    fam.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Limit,
    Divergent,
    Oscillatory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Kernel,
    Decaying,
    Divergent,
    Oscillatory,
}

/// Part of `T_0` on one generalized eigenspace of the generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralMode {
    /// Eigenvalue `(re, im)` of the Lie derivative; the family behaves as `e^{−μt}`.
    pub eigenvalue: (f64, f64),
    pub multiplicity: usize,
    pub kind: ModeKind,
    /// `−Re μ` for divergent modes.
    pub growth_rate: f64,
    /// Nilpotent excitation at eigenvalue 0.
    pub polynomial_growth: bool,
    pub norm: f64,
    /// Real part of the component.
    pub direction: PolyTensorField,
    /// Imaginary part of the component (zero for real eigenvalues).
    pub direction_imag: PolyTensorField,
    pub leading: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitAnalysis {
    pub verdict: Verdict,
    pub eigenvalues: Vec<(f64, f64)>,
    pub limit: Option<PolyTensorField>,
    pub kernel_part: PolyTensorField,
    pub modes: Vec<SpectralMode>,
}

impl LimitAnalysis {
    pub fn divergent_modes(&self) -> impl Iterator<Item = &SpectralMode> {
        self.modes.iter().filter(|m| matches!(m.kind, ModeKind::Divergent | ModeKind::Oscillatory))
    }
}

fn describe(t: &PolyTensorField) -> String {
    let mut entries: Vec<(f64, usize, usize)> = sector_pairs(t.dim, t.symmetry)
        .into_iter()
        .map(|(j, k)| (t.get(j, k).max_abs(), j, k))
        .filter(|e| e.0 > 1e-12)
        .collect();
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    entries
        .iter()
        .take(3)
        .map(|&(_, j, k)| format!("T^{{{},{}}} = {}", j + 1, k + 1, round_poly(t.get(j, k))))
        .collect::<Vec<_>>()
        .join("; ")
}

fn round_poly(p: &Poly) -> Poly {
    let r = |v: f64| (v * 1e9).round() / 1e9;
    Poly { c0: r(p.c0), c1: p.c1.map(r), c2: p.c2.map(r) }
}

fn cluster(eigs: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, usize, Complex64)> = Vec::new();
    for &e in eigs {
        if let Some(c) = out.iter_mut().find(|c| (c.0 - e).norm() < CLUSTER_TOL) {
            c.2 += e;
            c.1 += 1;
            c.0 = c.2 / c.1 as f64;
        } else {
            out.push((e, 1, e));
        }
    }
    let mut v: Vec<(Complex64, usize)> = out.into_iter().map(|(m, k, _)| (m, k)).collect();
    v.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    v
}

fn chop_c(z: Complex64) -> (f64, f64) {
    let f = |v: f64| if v.abs() < 1e-9 { 0.0 } else { (v * 1e9).round() / 1e9 };
    (f(z.re), f(z.im))
}

/// Spectral decision on the long-time behavior of a tensor family.
pub fn asymptotic_limit(fam: &TensorFlowFamily, tol: f64) -> LimitAnalysis {
    let zero = PolyTensorField::zeros(fam.dim, fam.symmetry);
    let k = fam.krylov_dim();
    if k == 0 {
        return LimitAnalysis { verdict: Verdict::Limit, eigenvalues: vec![], limit: Some(zero.clone()), kernel_part: zero, modes: vec![] };
    }
    let h = &fam.reduced;
    let hc: CMat = h.map(|v| Complex::new(v, 0.0));
    let eigs: Vec<Complex64> = h.complex_eigenvalues().iter().copied().collect();
    let clusters = cluster(&eigs);
    let hnorm = h.norm().max(1.0);

    let mut blocks: Vec<CMat> = Vec::new();
    for &(mu, mult) in &clusters {
        let shifted = &hc - CMat::identity(k, k) * mu;
        let mut p = shifted.clone();
        for _ in 1..mult {
            p = &p * &shifted;
        }
        blocks.push(null_space_complex(&p, 1e-10, mult).columns(0, mult).into_owned());
    }
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut v = CMat::zeros(k, total);
    let mut at = 0;
    for b in &blocks {
        v.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    let c0: CVec = fam.coords.map(|x| Complex::new(x, 0.0));
    let coef = v.clone().lu().solve(&c0).unwrap_or_else(|| v.clone().pseudo_inverse(1e-12).map(|p| p * &c0).expect("svd"));
    let scale = fam.coords.norm();

    let mut modes = Vec::new();
    let mut kernel = CVec::zeros(k);
    let mut verdict = Verdict::Limit;
    let mut at = 0;
    for (&(mu, mult), b) in clusters.iter().zip(&blocks) {
        let comp: CVec = b * coef.rows(at, b.ncols());
        at += b.ncols();
        let norm = comp.norm();
        let excited = norm > tol * scale;
        let is_zero = mu.norm() <= 1e-7 * hnorm;
        let (kind, polynomial) = if is_zero {
            let nil = (&hc * &comp).norm() > 1e-8 * hnorm * scale;
            kernel += &comp;
            (if nil && excited { ModeKind::Divergent } else { ModeKind::Kernel }, nil && excited)
        } else if mu.re < -1e-7 * hnorm {
            (ModeKind::Divergent, false)
        } else if mu.re.abs() <= 1e-7 * hnorm {
            (ModeKind::Oscillatory, false)
        } else {
            (ModeKind::Decaying, false)
        };
        if excited {
            match kind {
                ModeKind::Divergent => verdict = Verdict::Divergent,
                ModeKind::Oscillatory if verdict == Verdict::Limit => verdict = Verdict::Oscillatory,
                _ => {}
            }
        }
        let direction = fam.lift(&comp).chop(1e-12);
        let direction_imag = fam.lift_imag(&comp).chop(1e-12);
        let leading = describe(&direction);
        modes.push(SpectralMode {
            eigenvalue: chop_c(mu),
            multiplicity: mult,
            kind,
            growth_rate: if kind == ModeKind::Divergent { -mu.re.min(0.0) } else { 0.0 },
            polynomial_growth: polynomial,
            norm,
            direction,
            direction_imag,
            leading,
        });
    }
    let kernel_part = fam.lift(&kernel).chop(1e-12);
    let limit = (verdict == Verdict::Limit).then(|| kernel_part.clone());
    LimitAnalysis { verdict, eigenvalues: clusters.iter().map(|c| chop_c(c.0)).collect(), limit, kernel_part, modes }
}

/// Tables of `{x_j, x_k}_∞` and `(x_j, x_k)_∞`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractedTables {
    pub dim: usize,
    /// Row-major `{x_j, x_k}_∞`.
    pub poisson: Vec<Poly>,
    /// Row-major `(x_j, x_k)_∞`.
    pub jordan: Vec<Poly>,
    /// False when some product leaves the affine span of the coordinates.
    pub linear: bool,
    pub structure: Option<StructureTables>,
    pub star: Option<Vec<StarEntry>>,
}

/// `x_j *_∞ x_k = re + i·im` for the listed pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarEntry {
    pub j: usize,
    pub k: usize,
    pub re: Poly,
    pub im: Poly,
}

impl ContractedTables {
    pub fn poisson(&self, j: usize, k: usize) -> &Poly {
        &self.poisson[j * self.dim + k]
    }

    pub fn jordan(&self, j: usize, k: usize) -> &Poly {
        &self.jordan[j * self.dim + k]
    }
}

/// Products of the coordinate functions from limit tensors (indices from 0).
pub fn contracted_tables(lambda: &PolyTensorField, r: &PolyTensorField) -> ContractedTables {
    let m = lambda.dim;
    let mut poisson = Vec::with_capacity(m * m);
    let mut jordan = Vec::with_capacity(m * m);
    for j in 0..m {
        for k in 0..m {
            poisson.push(lambda.get(j, k).chop(1e-12));
            let mut p = r.get(j, k).clone();
            p.add_quad_monomial(j, k, 1.0);
            jordan.push(p.chop(1e-12));
        }
    }
    let linear = poisson.iter().chain(&jordan).all(|p| p.quadratic_max_abs() == 0.0);
    let (structure, star) = if linear {
        let d = m + 1;
        let mut t = StructureTables::zeros(d);
        for mu in 0..d {
            // the constant function is the unit
            t.jordan[mu * d + mu] = 1.0;
            t.jordan[mu * d * d + mu] = 1.0;
        }
        for j in 0..m {
            for k in 0..m {
                let base = ((j + 1) * d + (k + 1)) * d;
                let (p, q) = (&poisson[j * m + k], &jordan[j * m + k]);
                t.lie[base] = p.c0;
                t.jordan[base] = q.c0;
                for l in 0..m {
                    t.lie[base + l + 1] = p.c1[l];
                    t.jordan[base + l + 1] = q.c1[l];
                }
            }
        }
        let star = (0..m)
            .flat_map(|j| (0..m).map(move |k| (j, k)))
            .filter(|&(j, k)| !(poisson[j * m + k].is_zero(0.0) && jordan[j * m + k].is_zero(0.0)))
            .map(|(j, k)| StarEntry { j, k, re: jordan[j * m + k].clone(), im: poisson[j * m + k].clone() })
            .collect();
        (Some(t), Some(star))
    } else {
        (None, None)
    };
    ContractedTables { dim: m, poisson, jordan, linear, structure, star }
}

/// Axiom residuals of contracted tables over all basis triples.
pub fn verify_contracted_axioms(tables: &StructureTables, exec: Execution) -> AxiomReport {
    tables.axioms_over_basis(exec)
}

/// Dimensions of the center (modulo constants) and of the derived algebra of
/// a Lie bracket given by structure constants with unit `e_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsomorphismNote {
    pub center_dim: usize,
    pub derived_dim: usize,
}

pub fn isomorphism_note(t: &StructureTables) -> IsomorphismNote {
    let d = t.dim;
    // derived algebra: span of all brackets of basis elements
    let mut rows = Vec::new();
    for j in 0..d {
        for k in 0..d {
            rows.push(t.lie_row(j, k).to_vec());
        }
    }
    let span = RMat::from_fn(rows.len(), d, |r, c| rows[r][c]);
    let derived_dim = span.rank(1e-10);
    // center: kernel of a ↦ (⟦a, e_k⟧)_k
    let ad = RMat::from_fn(d * d, d, |r, j| t.lie_constant(j, r / d, r % d));
    let center = d - ad.rank(1e-10);
    IsomorphismNote { center_dim: center.saturating_sub(1), derived_dim }
}

/// `J T_0(φ_t^{-1}(y)) Jᵀ` for the affine flow `φ_t(x) = J x + c` of `Z`.
pub fn pushforward_affine(t0: &PolyTensorField, z: &PolyVectorField, t: f64) -> Result<PolyTensorField> {
    let (a, b) = z.affine_parts()?;
    let (jac, shift) = affine_flow(&a, &b, t);
    let inv = jac.clone().try_inverse().ok_or_else(|| GeomError::InvalidArgument("singular flow".into()))?;
    let s = -(&inv * shift);
    Ok(transform(t0, &jac, &inv, &s))
}

/// Inverse of [`pushforward_affine`]: `J^{-1} T(φ_t(x)) J^{-ᵀ}`.
pub fn pullback_affine(tt: &PolyTensorField, z: &PolyVectorField, t: f64) -> Result<PolyTensorField> {
    let (a, b) = z.affine_parts()?;
    let (jac, shift) = affine_flow(&a, &b, t);
    let inv = jac.clone().try_inverse().ok_or_else(|| GeomError::InvalidArgument("singular flow".into()))?;
    Ok(transform(tt, &inv, &jac, &shift))
}

/// `L T(B x + s) Lᵀ`
fn transform(t: &PolyTensorField, l: &RMat, sub: &RMat, s: &RVec) -> PolyTensorField {
    let m = t.dim;
    let moved: Vec<Poly> = t.components.iter().map(|p| p.substitute_affine(sub, s)).collect();
    PolyTensorField::from_fn(m, t.symmetry, |j, k| {
        let mut acc = Poly::zero(m);
        for a in 0..m {
            for c in 0..m {
                let w = l[(j, a)] * l[(k, c)];
                if w != 0.0 {
                    acc = &acc + &(&moved[a * m + c] * w);
                }
            }
        }
        acc
    })
}

/// Fixed-step RK4 for `dT/dt = −𝓛_Z T`.
pub fn flow_tensor_rk4(z: &PolyVectorField, t0: &PolyTensorField, t: f64, dt: f64) -> Result<PolyTensorField> {
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let f = |x: &PolyTensorField| lie_derivative(z, x).map(|d| d.scale(-1.0));
    let mut x = t0.clone();
    for _ in 0..steps {
        let k1 = f(&x)?;
        let k2 = f(&x.add(&k1.scale(h / 2.0)))?;
        let k3 = f(&x.add(&k2.scale(h / 2.0)))?;
        let k4 = f(&x.add(&k3.scale(h)))?;
        let inc = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4).scale(h / 6.0);
        x = x.add(&inc);
        x.symmetry = t0.symmetry;
    }
    Ok(x)
}

/// Product tables on the fixed set of a divergent flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitSetAlgebra {
    /// A state in the set.
    pub base_point: Vec<f64>,
    /// Orthonormal directions spanning the set.
    pub directions: Vec<Vec<f64>>,
    /// Coordinates that parametrize the set (from 0).
    pub free_coordinates: Vec<usize>,
    /// Largest divergent or polynomial coefficient left after restriction.
    pub divergent_residual: f64,
    /// `{x_a, x_b}_L` for free coordinates `a, b`, as polynomials in them.
    pub poisson: Vec<Poly>,
    pub jordan: Vec<Poly>,
    pub structure: Option<StructureTables>,
}

impl LimitSetAlgebra {
    pub fn rank(&self) -> usize {
        self.free_coordinates.len()
    }

    pub fn poisson(&self, a: usize, b: usize) -> &Poly {
        &self.poisson[a * self.rank() + b]
    }

    pub fn jordan(&self, a: usize, b: usize) -> &Poly {
        &self.jordan[a * self.rank() + b]
    }
}

/// Picks coordinates on which the kernel directions project invertibly.
fn pick_free(kernel: &RMat) -> Vec<usize> {
    let (m, r) = kernel.shape();
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..m {
        if chosen.len() == r {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        let rows = RMat::from_fn(trial.len(), r, |a, c| kernel[(trial[a], c)]);
        if rows.rank(1e-8) == trial.len() {
            chosen = trial;
        }
    }
    chosen
}

/// Restricts the long-time tensors to the fixed set of `z` and returns the
/// finite product tables on the coordinates that vary over the set.
pub fn limit_set_algebra(
    basis: &ObservableBasis,
    z: &PolyVectorField,
    lambda: &LimitAnalysis,
    r: &LimitAnalysis,
) -> Result<LimitSetAlgebra> {
    if lambda.verdict == Verdict::Limit && r.verdict == Verdict::Limit {
        return Err(GeomError::LimitExists);
    }
    let (a, b) = z.affine_parts()?;
    let (particular, kernel) = affine_zero_set(&a, &b);
    let particular = particular.ok_or(GeomError::EmptyLimitSet)?;
    // the set must meet the state space
    let base = if StateCoordinates::new_checked(basis, particular.as_slice().to_vec(), 1e-9).is_ok() {
        particular.clone()
    } else {
        let (e, s) = affine_flow(&a, &b, 1e3);
        let y = e * RVec::zeros(a.nrows()) + s;
        if (&a * &y + &b).amax() > 1e-9 || StateCoordinates::new_checked(basis, y.as_slice().to_vec(), 1e-9).is_err() {
            return Err(GeomError::EmptyLimitSet);
        }
        y
    };
    let free = pick_free(&kernel);
    let rdim = free.len();
    // x = base + K (K_F)^{-1} (u − base_F)
    let kf = RMat::from_fn(rdim, kernel.ncols(), |i, c| kernel[(free[i], c)]);
    let sub = &kernel * kf.try_inverse().unwrap_or_else(|| RMat::zeros(rdim, rdim));
    let base_f = RVec::from_fn(rdim, |i, _| base[free[i]]);
    let shift = &base - &sub * base_f;

    let restrict = |p: &Poly| p.substitute_affine(&sub, &shift).chop(1e-10);
    let mut residual = 0.0_f64;
    for fam in [lambda, r] {
        for mode in fam.divergent_modes() {
            for part in [&mode.direction, &mode.direction_imag] {
                for p in &part.components {
                    residual = residual.max(restrict(p).max_abs());
                }
            }
        }
    }
    let mut poisson = Vec::with_capacity(rdim * rdim);
    let mut jordan = Vec::with_capacity(rdim * rdim);
    for &j in &free {
        for &k in &free {
            poisson.push(restrict(lambda.kernel_part.get(j, k)));
            let mut q = r.kernel_part.get(j, k).clone();
            q.add_quad_monomial(j, k, 1.0);
            jordan.push(restrict(&q));
        }
    }
    let reduced_lambda = PolyTensorField { dim: rdim, symmetry: Symmetry::Antisymmetric, components: poisson.clone() };
    let mut reduced_r = PolyTensorField { dim: rdim, symmetry: Symmetry::Symmetric, components: jordan.clone() };
    for a in 0..rdim {
        for c in 0..rdim {
            reduced_r.components[a * rdim + c].add_quad_monomial(a, c, -1.0);
        }
    }
    let structure = contracted_tables(&reduced_lambda, &reduced_r).structure;
    Ok(LimitSetAlgebra {
        base_point: base.iter().map(|&v| if v.abs() < 1e-13 { 0.0 } else { v }).collect(),
        directions: kernel.column_iter().map(|c| c.iter().copied().collect()).collect(),
        free_coordinates: free,
        divergent_residual: residual,
        poisson,
        jordan,
        structure,
    })
}

/// Everything known about the long-time products of one affine flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionReport {
    pub verdict: Verdict,
    pub lambda: LimitAnalysis,
    pub r: LimitAnalysis,
    pub product_tables: Option<ContractedTables>,
    pub axiom_report: Option<AxiomReport>,
    pub isomorphism_note: Option<IsomorphismNote>,
    pub limit_set: Option<LimitSetAlgebra>,
}

impl ContractionReport {
    pub fn divergent_modes(&self) -> impl Iterator<Item = &SpectralMode> {
        self.lambda.divergent_modes().chain(self.r.divergent_modes())
    }
}

/// Superoperators and families of `Λ_D` and `R_D` under `z`.
pub fn tensor_families(
    basis: &ObservableBasis,
    z: &PolyVectorField,
    exec: Execution,
) -> Result<(TensorFlowFamily, TensorFlowFamily)> {
    let lam = lambda_d(basis);
    let r = r_d(basis);
    let op_l = build_superoperator(z, Symmetry::Antisymmetric, exec)?;
    let op_r = build_superoperator(z, Symmetry::Symmetric, exec)?;
    Ok((TensorFlowFamily::new(&op_l, &lam)?, TensorFlowFamily::new(&op_r, &r)?))
}

/// Runs the spectral analysis of both families and, depending on the
/// verdict, the contracted tables or the limit-set algebra.
pub fn analyze_flow(basis: &ObservableBasis, z: &PolyVectorField, exec: Execution) -> Result<ContractionReport> {
    let (fl, fr) = tensor_families(basis, z, exec)?;
    let lambda = asymptotic_limit(&fl, LIMIT_TOL);
    let r = asymptotic_limit(&fr, LIMIT_TOL);
    let verdict = match (lambda.verdict, r.verdict) {
        (Verdict::Divergent, _) | (_, Verdict::Divergent) => Verdict::Divergent,
        (Verdict::Oscillatory, _) | (_, Verdict::Oscillatory) => Verdict::Oscillatory,
        _ => Verdict::Limit,
    };
    let mut report = ContractionReport {
        verdict,
        lambda,
        r,
        product_tables: None,
        axiom_report: None,
        isomorphism_note: None,
        limit_set: None,
    };
    if verdict == Verdict::Limit {
        let tables = contracted_tables(
            report.lambda.limit.as_ref().expect("limit"),
            report.r.limit.as_ref().expect("limit"),
        );
        if let Some(st) = &tables.structure {
            report.axiom_report = Some(verify_contracted_axioms(st, exec));
            report.isomorphism_note = Some(isomorphism_note(st));
        }
        report.product_tables = Some(tables);
    } else {
        match limit_set_algebra(basis, z, &report.lambda, &report.r) {
            Ok(ls) => report.limit_set = Some(ls),
            Err(GeomError::EmptyLimitSet) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Both 3-level decoherence contractions and their comparison with the
/// reference table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecoherenceComparison {
    pub massive: ContractionReport,
    pub pure: ContractionReport,
    /// Largest coefficient difference between the two models' tables.
    pub model_difference: f64,
    /// Largest coefficient difference from [`three_level_reference`].
    pub reference_difference: f64,
}

/// Contracted products of a 3-level system under diagonal decoherence, as
/// `(poisson, jordan)` row-major tables.
pub fn three_level_reference() -> (Vec<Poly>, Vec<Poly>) {
    let m = 8;
    let r3 = 3f64.sqrt();
    let lin = |c0: f64, terms: &[(usize, f64)]| {
        let mut p = Poly::constant(m, c0);
        for &(i, v) in terms {
            p.c1[i - 1] += v;
        }
        p
    };
    let mut poisson = vec![Poly::zero(m); m * m];
    let mut put = |j: usize, k: usize, p: Poly| {
        poisson[(k - 1) * m + (j - 1)] = -&p;
        poisson[(j - 1) * m + (k - 1)] = p;
    };
    put(1, 3, lin(0.0, &[(2, -1.0)]));
    put(2, 3, lin(0.0, &[(1, 1.0)]));
    put(4, 3, lin(0.0, &[(5, -0.5)]));
    put(5, 3, lin(0.0, &[(4, 0.5)]));
    put(4, 8, lin(0.0, &[(5, -r3 / 2.0)]));
    put(5, 8, lin(0.0, &[(4, r3 / 2.0)]));
    put(6, 3, lin(0.0, &[(7, 0.5)]));
    put(7, 3, lin(0.0, &[(6, -0.5)]));
    put(6, 8, lin(0.0, &[(7, -r3 / 2.0)]));
    put(7, 8, lin(0.0, &[(6, r3 / 2.0)]));
    let mut jordan = vec![Poly::zero(m); m * m];
    let mut put = |j: usize, k: usize, p: Poly| {
        jordan[(k - 1) * m + (j - 1)] = p.clone();
        jordan[(j - 1) * m + (k - 1)] = p;
    };
    put(3, 3, lin(2.0 / 3.0, &[(8, 1.0 / r3)]));
    put(8, 8, lin(2.0 / 3.0, &[(8, -1.0 / r3)]));
    for j in 1..=3 {
        put(j, 8, lin(0.0, &[(j, 1.0 / r3)]));
    }
    for j in 4..=7 {
        put(j, 8, lin(0.0, &[(j, -1.0 / (2.0 * r3))]));
    }
    put(4, 3, lin(0.0, &[(4, 0.5)]));
    put(5, 3, lin(0.0, &[(5, 0.5)]));
    put(6, 3, lin(0.0, &[(6, -0.5)]));
    put(7, 3, lin(0.0, &[(7, -0.5)]));
    (poisson, jordan)
}

fn table_difference(a: &ContractedTables, poisson: &[Poly], jordan: &[Poly]) -> f64 {
    let d = |x: &[Poly], y: &[Poly]| x.iter().zip(y).fold(0.0_f64, |m, (p, q)| m.max(p.max_abs_diff(q)));
    d(&a.poisson, poisson).max(d(&a.jordan, jordan))
}

/// Massive-particle decoherence (`γ = 1`) and pure decoherence
/// (`γ = (1, 1)`) on three levels.
pub fn contract_3level_decoherence(exec: Execution) -> Result<DecoherenceComparison> {
    use crate::dynamics::{massive_decoherence, pure_decoherence, vf_from_linear_map};
    let basis = ObservableBasis::new(3)?;
    let zm = vf_from_linear_map(&basis, &massive_decoherence(3, 1.0)?)?;
    let zp = vf_from_linear_map(&basis, &pure_decoherence(3, &[1.0, 1.0])?)?;
    let massive = analyze_flow(&basis, &zm, exec)?;
    let pure = analyze_flow(&basis, &zp, exec)?;
    let (tm, tp) = match (&massive.product_tables, &pure.product_tables) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(GeomError::InvariantViolation("a decoherence model has no limit".into())),
    };
    let model_difference = table_difference(tm, &tp.poisson, &tp.jordan);
    let (rp, rj) = three_level_reference();
    let reference_difference = table_difference(tm, &rp, &rj).max(table_difference(tp, &rp, &rj));
    Ok(DecoherenceComparison { massive, pure, model_difference, reference_difference })
}

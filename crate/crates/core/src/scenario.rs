//! Named scenarios and scenario files for the command-line runner.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{HermitianMatrix, ObservableBasis};
use crate::contraction::{analyze_flow, flow_tensor, tensor_families};
use crate::dynamics::{
    double_bracket, gisin, integrate, kaufman_morrison, lindblad_vf, massive_decoherence, phase_damping,
    pure_decoherence, qubit_dissipation, stationary_points, three_level_decay, vf_from_linear_map, LindbladModel,
    Trajectory,
};
use crate::error::{GeomError, Result};
use crate::linalg::{c, CMat};
use crate::par::Execution;
use crate::state::{purity, random_state, stratum, StateCoordinates, RANK_TOL};
use crate::tensor::{gradient_vf, hamiltonian_vf, lambda_d, r_d, sample_vf, PolyVectorField};

pub const BUILTINS: &[&str] = &[
    "bloch-field",
    "phase-damping",
    "qubit-dissipation",
    "massive-decoherence",
    "pure-decoherence",
    "three-level-decay",
    "gisin",
    "double-bracket",
    "kaufman-morrison",
];

/// Seed for field sampling unless `GEOM_SEED` is set.
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 500;
const DEFAULT_T_END: f64 = 5.0;
const DEFAULT_DT: f64 = 0.01;
const FAMILY_TIMES: [f64; 4] = [0.0, 0.25, 1.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Artifact {
    Trajectory,
    FieldSamples,
    TensorFamily,
    Contraction,
    Tables,
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> num_complex::Complex64 {
        match self {
            Entry::Real(r) => c(r, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplicitModel {
    #[serde(rename = "H", default)]
    pub hamiltonian: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "V", default)]
    pub jumps: Vec<Vec<Vec<Entry>>>,
    /// Multiplies every jump operator by `√gamma`.
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Builtin(String),
    Explicit(ExplicitModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    pub model: ModelSpec,
    #[serde(default)]
    pub outputs: Option<Vec<Artifact>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "B", default)]
    pub field: Option<[f64; 3]>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub report: bool,
}

impl Scenario {
    pub fn builtin(name: &str) -> Self {
        Scenario {
            name: Some(name.to_string()),
            n: None,
            model: ModelSpec::Builtin(name.to_string()),
            outputs: None,
            gamma: None,
            field: None,
            x0: None,
            t_end: None,
            dt: None,
            samples: None,
            report: false,
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeomError::Parse(format!("{origin}: {e}")))
    }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub field: Option<[f64; 3]>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub report: bool,
    pub seed: Option<u64>,
}

/// Everything a run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub n: usize,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

enum Dynamics {
    /// Hamiltonian and gradient fields of one observable.
    Pair { hamiltonian: PolyVectorField, gradient: PolyVectorField },
    Single(PolyVectorField),
}

struct Resolved {
    name: String,
    basis: ObservableBasis,
    dynamics: Dynamics,
    defaults: Vec<Artifact>,
}

fn unknown(name: &str) -> GeomError {
    GeomError::UnknownScenario { name: name.to_string(), registered: BUILTINS.join(", ") }
}

fn bloch_hamiltonian(b: [f64; 3]) -> Result<HermitianMatrix> {
    let basis = ObservableBasis::new(2)?;
    let obs = basis.traceless_observable(&b)?;
    HermitianMatrix::new(basis.to_matrix(&obs))
}

fn parse_matrix(rows: &[Vec<Entry>], n: usize, what: &str) -> Result<CMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(GeomError::Parse(format!("{what} must be {n}×{n}")));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j].value()))
}

fn infer_n(m: &ExplicitModel) -> Option<usize> {
    m.hamiltonian.as_ref().map(Vec::len).or_else(|| m.jumps.first().map(Vec::len))
}

fn resolve(s: &Scenario, o: &Overrides) -> Result<Resolved> {
    let gamma = o.gamma.or(s.gamma).unwrap_or(1.0);
    let field = o.field.or(s.field).unwrap_or([0.0, 0.0, 1.0]);
    let lindblad = |basis: &ObservableBasis, m: LindbladModel| lindblad_vf(basis, &m).map(Dynamics::Single);
    let all = vec![Artifact::Trajectory, Artifact::FieldSamples, Artifact::TensorFamily, Artifact::Tables];
    match &s.model {
        ModelSpec::Builtin(name) => {
            let n = match name.as_str() {
                "massive-decoherence" | "pure-decoherence" | "three-level-decay" => 3,
                n if BUILTINS.contains(&n) => 2,
                _ => return Err(unknown(name)),
            };
            if let Some(req) = s.n {
                if req != n {
                    return Err(GeomError::DimensionMismatch { expected: n, got: req });
                }
            }
            let basis = ObservableBasis::new(n)?;
            let (dynamics, defaults) = match name.as_str() {
                "bloch-field" => {
                    let h = basis.traceless_observable(&field)?;
                    let hamiltonian = hamiltonian_vf(&basis, &h)?;
                    let gradient = gradient_vf(&basis, &h)?.scale(-1.0);
                    (Dynamics::Pair { hamiltonian, gradient }, vec![Artifact::FieldSamples, Artifact::Trajectory])
                }
                "phase-damping" => (lindblad(&basis, phase_damping(gamma)?)?, all),
                "qubit-dissipation" => {
                    let z = lindblad_vf(&basis, &qubit_dissipation()?)?.scale(gamma);
                    (Dynamics::Single(z), all)
                }
                "massive-decoherence" => {
                    (Dynamics::Single(vf_from_linear_map(&basis, &massive_decoherence(3, gamma)?)?), all)
                }
                "pure-decoherence" => {
                    (Dynamics::Single(vf_from_linear_map(&basis, &pure_decoherence(3, &[gamma, gamma])?)?), all)
                }
                "three-level-decay" => {
                    let z = lindblad_vf(&basis, &three_level_decay()?)?.scale(gamma);
                    (Dynamics::Single(z), all)
                }
                "gisin" => (
                    Dynamics::Single(gisin(&basis, &bloch_hamiltonian(field)?)?),
                    vec![Artifact::Trajectory, Artifact::FieldSamples],
                ),
                "double-bracket" => (Dynamics::Single(double_bracket(&basis, &bloch_hamiltonian(field)?)?), all),
                "kaufman-morrison" => {
                    let h = basis.traceless_observable(&field)?;
                    let s = h.scale(-gamma);
                    (
                        Dynamics::Single(kaufman_morrison(&basis, &h, &s)?),
                        vec![Artifact::Trajectory, Artifact::FieldSamples],
                    )
                }
                _ => return Err(unknown(name)),
            };
            Ok(Resolved { name: name.clone(), basis, dynamics, defaults })
        }
        ModelSpec::Explicit(m) => {
            let n = s.n.or_else(|| infer_n(m)).ok_or_else(|| GeomError::Parse("scenario needs \"n\" or a matrix".into()))?;
            let basis = ObservableBasis::new(n)?;
            let h = match &m.hamiltonian {
                Some(rows) => parse_matrix(rows, n, "H")?,
                None => CMat::zeros(n, n),
            };
            let scale = c(m.gamma.unwrap_or(1.0).sqrt(), 0.0);
            let jumps = m
                .jumps
                .iter()
                .enumerate()
                .map(|(i, v)| parse_matrix(v, n, &format!("V[{i}]")).map(|x| x * scale))
                .collect::<Result<Vec<_>>>()?;
            let model = LindbladModel::new(HermitianMatrix::new(h)?, jumps)?;
            Ok(Resolved {
                name: s.name.clone().unwrap_or_else(|| "scenario".into()),
                basis,
                dynamics: lindblad(&ObservableBasis::new(n)?, model)?,
                defaults: all,
            })
        }
    }
}

fn default_x0(n: usize) -> Vec<f64> {
    match n {
        2 => vec![0.5, 0.3, 0.6],
        3 => vec![0.3, 0.1, 0.2, 0.2, 0.0, 0.2, 0.0, 0.1],
        _ => {
            let mut x = vec![0.0; n * n - 1];
            x[0] = 0.5 / n as f64;
            x
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points mapped to the closed unit ball, followed by points on the
/// x3-axis (poles included).
pub fn bloch_ball_points(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(count + 9);
    for k in 0..count as u64 {
        let i = k + 1 + seed;
        let r = radical_inverse(i, 2).cbrt();
        let cos_t = 1.0 - 2.0 * radical_inverse(i, 3);
        let phi = 2.0 * std::f64::consts::PI * radical_inverse(i, 5);
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        pts.push(vec![r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t]);
    }
    for k in 0..=8 {
        pts.push(vec![0.0, 0.0, -1.0 + 0.25 * k as f64]);
    }
    pts
}

/// Random states, then a grid on the slice spanned by the first and last
/// coordinates, keeping positive points.
fn slice_points(basis: &ObservableBasis, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let m = basis.coord_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<f64>> = (0..count).map(|_| random_state(basis, &mut rng).x).collect();
    let steps = 21;
    for a in 0..steps {
        for b in 0..steps {
            let mut x = vec![0.0; m];
            x[0] = -1.0 + 2.0 * a as f64 / (steps - 1) as f64;
            x[m - 1] = -1.0 + 2.0 * b as f64 / (steps - 1) as f64;
            if let Ok(s) = StateCoordinates::new_checked(basis, x, 1e-12) {
                pts.push(s.x);
            }
        }
    }
    pts
}

fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.12e}")
}

fn write_field_csv(path: &Path, z: &PolyVectorField, points: &[Vec<f64>]) -> Result<()> {
    let m = z.dim;
    let values = sample_vf(z, points, Execution::Parallel);
    let mut out = String::new();
    let head: Vec<String> = (1..=m).map(|i| format!("x{i}")).chain((1..=m).map(|i| format!("z{i}"))).collect();
    out.push_str(&head.join(","));
    out.push_str(",norm,stationary\n");
    for (x, v) in points.iter().zip(&values) {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let row: Vec<String> = x.iter().chain(v.iter()).map(|&a| fmt(a)).collect();
        out.push_str(&row.join(","));
        out.push_str(&format!(",{},{}\n", fmt(norm), u8::from(norm < 1e-12)));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_trajectory_csv(path: &Path, basis: &ObservableBasis, traj: &Trajectory) -> Result<()> {
    let m = basis.coord_dim();
    let mut out = String::from("t,");
    out.push_str(&(1..=m).map(|i| format!("x{i}")).collect::<Vec<_>>().join(","));
    out.push_str(",purity,rank\n");
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.push_str(&fmt(*t));
        for &v in &s.x {
            out.push(',');
            out.push_str(&fmt(v));
        }
        out.push_str(&format!(",{},{}\n", fmt(purity(s)), stratum(basis, s, RANK_TOL).rank));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs a builtin by name or a scenario file and writes its artifacts to `out`.
pub fn run(target: &str, out: &Path, o: &Overrides) -> Result<RunSummary> {
    let scenario = if BUILTINS.contains(&target) {
        Scenario::builtin(target)
    } else if Path::new(target).is_file() || target.ends_with(".json") {
        Scenario::from_json(&fs::read_to_string(target)?, target)?
    } else {
        return Err(unknown(target));
    };
    run_scenario(&scenario, out, o)
}

pub fn run_scenario(s: &Scenario, out: &Path, o: &Overrides) -> Result<RunSummary> {
    let r = resolve(s, o)?;
    let basis = &r.basis;
    let n = basis.n();
    let seed = o.seed.unwrap_or(DEFAULT_SEED);
    let report = o.report || s.report;
    let mut artifacts = s.outputs.clone().unwrap_or_else(|| r.defaults.clone());
    if report && !artifacts.contains(&Artifact::Contraction) {
        artifacts.push(Artifact::Contraction);
    }
    fs::create_dir_all(out)?;
    let stem = s.name.clone().unwrap_or_else(|| r.name.clone());
    let mut files = Vec::new();
    let mut verdict = None;
    let emit = |name: String, files: &mut Vec<String>| -> PathBuf {
        files.push(name.clone());
        out.join(name)
    };

    let (primary, fields): (&PolyVectorField, Vec<(&str, &PolyVectorField)>) = match &r.dynamics {
        Dynamics::Pair { hamiltonian, gradient } => {
            (hamiltonian, vec![("hamiltonian", hamiltonian), ("gradient", gradient)])
        }
        Dynamics::Single(z) => (z, vec![("field", z)]),
    };

    for art in &artifacts {
        match art {
            Artifact::FieldSamples => {
                let samples = s.samples.unwrap_or(DEFAULT_SAMPLES);
                let points = if n == 2 { bloch_ball_points(samples, seed) } else { slice_points(basis, samples, seed) };
                for (label, z) in &fields {
                    let path = emit(format!("{stem}_{label}_samples.csv"), &mut files);
                    write_field_csv(&path, z, &points)?;
                }
                let stationary: Vec<_> = fields
                    .iter()
                    .map(|(label, z)| json!({ "field": label, "set": stationary_points(basis, z, seed) }))
                    .collect();
                write_json(&emit(format!("{stem}_stationary.json"), &mut files), &stationary)?;
            }
            Artifact::Trajectory => {
                let x0 = s.x0.clone().unwrap_or_else(|| default_x0(n));
                let s0 = StateCoordinates::new_checked(basis, x0, 1e-12)?;
                let t_end = o.t_end.or(s.t_end).unwrap_or(DEFAULT_T_END);
                let dt = o.dt.or(s.dt).unwrap_or(DEFAULT_DT);
                for (label, z) in &fields {
                    let traj = integrate(basis, z, &s0, t_end, dt)?;
                    let path = emit(format!("{stem}_{label}_trajectory.csv"), &mut files);
                    write_trajectory_csv(&path, basis, &traj)?;
                }
            }
            Artifact::TensorFamily => {
                let (fl, fr) = tensor_families(basis, primary, Execution::Parallel)?;
                let family: Vec<_> = FAMILY_TIMES
                    .iter()
                    .map(|&t| json!({ "t": t, "lambda": flow_tensor(&fl, t), "r": flow_tensor(&fr, t) }))
                    .collect();
                let value = json!({
                    "krylov_dim": { "lambda": fl.krylov_dim(), "r": fr.krylov_dim() },
                    "family": family,
                });
                write_json(&emit(format!("{stem}_tensor_family.json"), &mut files), &value)?;
            }
            Artifact::Tables => {
                let lam = lambda_d(basis);
                let rd = r_d(basis);
                let m = basis.coord_dim();
                let mut poisson = Vec::new();
                let mut jordan = Vec::new();
                for j in 0..m {
                    for k in 0..m {
                        poisson.push(lam.get(j, k).to_string());
                        let mut q = rd.get(j, k).clone();
                        q.add_quad_monomial(j, k, 1.0);
                        jordan.push(q.to_string());
                    }
                }
                let value = json!({
                    "n": n,
                    "structure": basis.tables(),
                    "poisson": poisson,
                    "jordan": jordan,
                });
                write_json(&emit(format!("{stem}_tables.json"), &mut files), &value)?;
            }
            Artifact::Contraction => {
                let path = emit(format!("{stem}_contraction.json"), &mut files);
                match analyze_flow(basis, primary, Execution::Parallel) {
                    Ok(rep) => {
                        verdict = Some(format!("{:?}", rep.verdict).to_lowercase());
                        write_json(&path, &rep)?;
                    }
                    // the tensor flow is only defined for affine fields
                    Err(GeomError::NotAffine) => {
                        verdict = Some("not-applicable".into());
                        write_json(&path, &json!({ "verdict": null, "reason": GeomError::NotAffine.to_string() }))?;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let summary = RunSummary { scenario: stem.clone(), n, files: files.clone(), verdict };
    let mut all = files;
    all.push(format!("{stem}_summary.json"));
    write_json(&out.join(format!("{stem}_summary.json")), &RunSummary { files: all, ..summary.clone() })?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_in_ball() {
        let pts = bloch_ball_points(500, 0);
        assert_eq!(pts.len(), 509);
        assert!(pts.iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12));
        assert_eq!(pts[500], vec![0.0, 0.0, -1.0]);
        assert_eq!(pts[508], vec![0.0, 0.0, 1.0]);
        assert_ne!(bloch_ball_points(5, 3), bloch_ball_points(5, 0));
    }

    #[test]
    fn entries_parse() {
        let s = Scenario::from_json(r#"{"n": 2, "model": {"H": [[1, 0], [0, -1]], "V": [[[0, [0, 1]], [0, 0]]]}}"#, "inline").unwrap();
        match s.model {
            ModelSpec::Explicit(m) => {
                assert_eq!(m.jumps.len(), 1);
                assert_eq!(m.jumps[0][0][1].value(), c(0.0, 1.0));
            }
            _ => panic!("expected explicit model"),
        }
        let err = Scenario::from_json("{\"model\": 3", "bad.json").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn default_states_are_states() {
        for n in [2, 3, 4] {
            let b = ObservableBasis::new(n).unwrap();
            assert!(StateCoordinates::new_checked(&b, default_x0(n), 1e-12).is_ok());
        }
    }

    #[test]
    fn unknown_builtin_lists_registry() {
        let dir = tempfile::tempdir().unwrap();
        let err = run("nope", dir.path(), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(BUILTINS.iter().all(|b| msg.contains(b)));
    }
}

//! Command implementations and file formats for the `eigenreflect` binary.
//!
//! Exit codes: 0 success, 1 bound not met, 2 configuration or input error,
//! 3 completion or synthesis failure, 4 gap violation, 5 target absent.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::completion;
use crate::error::{Error, Result};
use crate::oracle::{discrepancy_record, verify_reflection, VerificationReport};
use crate::pipeline::Synthesis;
use crate::poly::{select_parameters_with, GapSpec, ReflectionPlan, TFormula, DEFAULT_OVERSAMPLE};
use crate::sim::DenseOperator;
use crate::testgen::{random_gapped_unitary, SpectrumSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_NOT_MET: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPLETION: i32 = 3;
pub const EXIT_GAP_VIOLATION: i32 = 4;
pub const EXIT_TARGET_ABSENT: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CompletionFailed { .. } | Error::NotComplementary { .. } | Error::DegreeMismatch { .. } => {
            EXIT_COMPLETION
        }
        Error::GapViolation { .. } => EXIT_GAP_VIOLATION,
        Error::TargetAbsent { .. } => EXIT_TARGET_ABSENT,
        Error::Domain(_)
        | Error::InvalidInput(_)
        | Error::NonUnitary { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => EXIT_CONFIG,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Plan,
    Synth,
    Verify,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Matrix(PathBuf),
    Spectrum(SpectrumSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub plan: Option<PathBuf>,
    pub circuit: Option<PathBuf>,
    pub angles: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub target_multiplicity: usize,
}

fn one() -> usize {
    1
}

fn default_tol() -> f64 {
    completion::DEFAULT_TOL
}

fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE
}

/// A complete job, as read from a config file or assembled from flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub command: Command,
    /// Absent only for sweeps, which take their gaps from the grid.
    #[serde(default)]
    pub gap: Option<GapSpec>,
    #[serde(default)]
    pub input: Option<InputSource>,
    #[serde(default)]
    pub outputs: OutputPaths,
    #[serde(default)]
    pub use_paper_t_formula: bool,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default = "default_tol")]
    pub completion_tol: f64,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            gap: None,
            input: None,
            outputs: OutputPaths::default(),
            use_paper_t_formula: false,
            oversample: DEFAULT_OVERSAMPLE,
            completion_tol: completion::DEFAULT_TOL,
            sweep: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn formula(&self) -> TFormula {
        if self.use_paper_t_formula {
            TFormula::Paper
        } else {
            TFormula::Corrected
        }
    }

    fn gap(&self) -> Result<GapSpec> {
        let gap = self.gap.ok_or_else(|| Error::InvalidInput("missing gap (delta, epsilon)".into()))?;
        gap.validate()?;
        Ok(gap)
    }

    fn validate_tolerances(&self) -> Result<()> {
        if !(self.completion_tol > 0.0) {
            return Err(Error::Domain(format!("completion tolerance must be positive, got {}", self.completion_tol)));
        }
        if self.oversample == 0 {
            return Err(Error::Domain("oversample must be positive".into()));
        }
        Ok(())
    }
}

/// Row-major matrix file: `{"dim": N, "re": [[...]], "im": [[...]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_operator(u: &DenseOperator) -> Self {
        let n = u.dim();
        let m = u.matrix();
        Self {
            dim: n,
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<DenseOperator> {
        let n = self.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::InvalidInput(format!("matrix file does not hold two {n}x{n} arrays")));
        }
        DenseOperator::new(DMatrix::from_fn(n, n, |i, j| Complex64::new(self.re[i][j], self.im[i][j])))
    }
}

pub fn read_matrix(path: &Path) -> Result<DenseOperator> {
    let text = std::fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    file.to_operator()
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes to `path` if given, otherwise returns the bytes for stdout.
fn emit(path: Option<&Path>, bytes: Vec<u8>) -> Result<Option<Vec<u8>>> {
    match path {
        Some(p) => {
            write_atomic(p, &bytes)?;
            Ok(None)
        }
        None => Ok(Some(bytes)),
    }
}

/// What a command hands back to the binary.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    /// Printed to stdout.
    pub stdout: Vec<u8>,
}

impl Outcome {
    fn ok(stdout: Vec<u8>) -> Self {
        Self { exit_code: EXIT_OK, stdout }
    }
}

pub fn run(config: &JobConfig) -> Result<Outcome> {
    config.validate_tolerances()?;
    match config.command {
        Command::Plan => {
            let plan = cmd_plan(config)?;
            let printed = emit(config.outputs.plan.as_deref(), to_json(&plan)?)?;
            Ok(Outcome::ok(printed.unwrap_or_default()))
        }
        Command::Synth => {
            let s = cmd_synth(config)?;
            let summary = format!(
                "degree {} completion residual {:e} ({:?})\n",
                s.plan.degree, s.completion.residual, s.completion.method
            );
            Ok(Outcome::ok(summary.into_bytes()))
        }
        Command::Verify => {
            let report = cmd_verify(config)?;
            let printed = emit(config.outputs.report.as_deref(), to_json(&report)?)?;
            let exit_code = if report.bound_satisfied { EXIT_OK } else { EXIT_BOUND_NOT_MET };
            Ok(Outcome { exit_code, stdout: printed.unwrap_or_default() })
        }
        Command::Sweep => {
            let rows = cmd_sweep(config)?;
            let printed = emit(config.outputs.table.as_deref(), sweep_csv(&rows)?)?;
            Ok(Outcome::ok(printed.unwrap_or_default()))
        }
    }
}

pub fn cmd_plan(config: &JobConfig) -> Result<ReflectionPlan> {
    select_parameters_with(config.gap()?, config.formula())
}

fn synthesis(config: &JobConfig, gap: GapSpec) -> Result<Synthesis> {
    let plan = select_parameters_with(gap, config.formula())?;
    Synthesis::from_plan(plan, config.completion_tol)
}

/// Writes the composite circuit and the angle record.
pub fn cmd_synth(config: &JobConfig) -> Result<Synthesis> {
    let s = synthesis(config, config.gap()?)?;
    let circuit_path = config.outputs.circuit.clone().unwrap_or_else(|| PathBuf::from("circuit.json"));
    let angles_path = config.outputs.angles.clone().unwrap_or_else(|| PathBuf::from("angles.json"));
    write_atomic(&circuit_path, &to_json(&s.composite)?)?;
    write_atomic(&angles_path, &to_json(&s)?)?;
    Ok(s)
}

fn load_input(config: &JobConfig) -> Result<DenseOperator> {
    match &config.input {
        Some(InputSource::Matrix(path)) => read_matrix(path),
        Some(InputSource::Spectrum(spec)) => random_gapped_unitary(spec),
        None => Err(Error::InvalidInput("verify needs a matrix file or a spectrum spec".into())),
    }
}

pub fn cmd_verify(config: &JobConfig) -> Result<VerificationReport> {
    let gap = config.gap()?;
    let u = load_input(config)?;
    let s = synthesis(config, gap)?;
    let mut report = verify_reflection(&u, &s)?;
    if config.use_paper_t_formula {
        report.discrepancy = Some(discrepancy_record(&gap, config.oversample)?);
    }
    Ok(report)
}

/// One line of the sweep table. `error` is empty for successful rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub seed: u64,
    pub t: Option<usize>,
    pub n: Option<usize>,
    pub degree: Option<usize>,
    pub measured_error: Option<f64>,
    pub bound: f64,
    pub satisfied: bool,
    pub completion_residual: Option<f64>,
    pub wall_time_ms: f64,
    pub error: String,
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "delta",
    "epsilon",
    "dim",
    "seed",
    "t",
    "n",
    "degree",
    "measured_error",
    "bound",
    "satisfied",
    "completion_residual",
    "wall_time_ms",
    "error",
];

/// Runs every `(delta, epsilon, dim, seed)` combination. Failures are kept
/// as rows; synthesis is shared between rows with the same gap.
pub fn cmd_sweep(config: &JobConfig) -> Result<Vec<SweepRow>> {
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("sweep needs a grid".into()))?;
    let theta = config.gap.map_or(0.0, |g| g.theta);
    let mut cache: BTreeMap<(u64, u64), std::result::Result<Synthesis, String>> = BTreeMap::new();
    let mut rows = Vec::new();
    for &delta in &grid.deltas {
        for &epsilon in &grid.epsilons {
            let start = Instant::now();
            let syn = cache
                .entry((delta.to_bits(), epsilon.to_bits()))
                .or_insert_with(|| {
                    GapSpec::new(delta, epsilon, theta)
                        .and_then(|gap| synthesis(config, gap))
                        .map_err(|e| e.to_string())
                });
            // charged to the first row that uses it
            let mut synth_ms = start.elapsed().as_secs_f64() * 1e3;
            for &dim in &grid.dims {
                for &seed in &grid.seeds {
                    let row_start = Instant::now();
                    let mut row = SweepRow {
                        delta,
                        epsilon,
                        dim,
                        seed,
                        t: None,
                        n: None,
                        degree: None,
                        measured_error: None,
                        bound: 4.0 * epsilon,
                        satisfied: false,
                        completion_residual: None,
                        wall_time_ms: 0.0,
                        error: String::new(),
                    };
                    match syn {
                        Ok(s) => {
                            row.t = Some(s.plan.t);
                            row.n = Some(s.plan.n);
                            row.degree = Some(s.plan.degree);
                            row.completion_residual = Some(s.completion.residual);
                            let spec = SpectrumSpec {
                                dim,
                                delta,
                                theta,
                                target_multiplicity: grid.target_multiplicity,
                                seed,
                            };
                            match random_gapped_unitary(&spec).and_then(|u| verify_reflection(&u, s)) {
                                Ok(report) => {
                                    row.measured_error = Some(report.measured_error);
                                    row.satisfied = report.bound_satisfied;
                                }
                                Err(e) => row.error = e.to_string(),
                            }
                        }
                        Err(e) => row.error = e.clone(),
                    }
                    row.wall_time_ms = synth_ms + row_start.elapsed().as_secs_f64() * 1e3;
                    synth_ms = 0.0;
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e16)`.
fn real(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            real(r.delta),
            real(r.epsilon),
            r.dim.to_string(),
            r.seed.to_string(),
            cell(&r.t),
            cell(&r.n),
            cell(&r.degree),
            r.measured_error.map(real).unwrap_or_default(),
            real(r.bound),
            r.satisfied.to_string(),
            r.completion_residual.map(real).unwrap_or_default(),
            format!("{:.3}", r.wall_time_ms),
            r.error.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gap_config(command: Command, delta: f64, epsilon: f64) -> JobConfig {
        JobConfig { gap: Some(GapSpec { delta, epsilon, theta: 0.0 }), ..JobConfig::new(command) }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Domain("x".into())), 2);
        assert_eq!(exit_code(&Error::CompletionFailed { residual: 1.0, tol: 0.1 }), 3);
        assert_eq!(exit_code(&Error::GapViolation { phase: 0.1, theta: 0.0, delta: 1.0 }), 4);
        assert_eq!(exit_code(&Error::TargetAbsent { theta: 0.0 }), 5);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn plan_json_fields() {
        let plan = cmd_plan(&gap_config(Command::Plan, 1.5707963, 0.1)).unwrap();
        let v = serde_json::to_value(plan).unwrap();
        assert_eq!((v["t"].as_u64(), v["n"].as_u64(), v["degree"].as_u64()), (Some(4), Some(3), Some(9)));
        assert_eq!(v["t_formula"], "corrected");
        for key in ["delta", "epsilon", "theta", "counts"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let plan = cmd_plan(&gap_config(Command::Plan, 3.14159265, 0.5)).unwrap();
        assert_eq!((plan.t, plan.n, plan.degree), (3, 1, 2));
        assert!(matches!(cmd_plan(&gap_config(Command::Plan, 0.0, 0.1)), Err(Error::Domain(_))));
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{
            "command": "verify",
            "gap": {"delta": 0.785, "epsilon": 0.01},
            "input": {"spectrum": {"dim": 16, "delta": 0.785, "target_multiplicity": 1, "seed": 7}},
            "outputs": {"report": "r.json"}
        }"#;
        let c: JobConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.command, Command::Verify);
        assert_eq!(c.oversample, DEFAULT_OVERSAMPLE);
        assert!(matches!(c.input, Some(InputSource::Spectrum(SpectrumSpec { dim: 16, seed: 7, .. }))));
        let again: JobConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn matrix_file_round_trip() {
        let spec = SpectrumSpec { dim: 5, delta: 0.4, theta: 0.0, target_multiplicity: 2, seed: 3 };
        let u = random_gapped_unitary(&spec).unwrap();
        let file = MatrixFile::from_operator(&u);
        let text = serde_json::to_string(&file).unwrap();
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_operator().unwrap(), u);
        let bad = MatrixFile { dim: 2, re: vec![vec![1.0]], im: vec![vec![0.0]] };
        assert!(bad.to_operator().is_err());
    }

    #[test]
    fn verify_identity_and_missing_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("id.json");
        let file = MatrixFile::from_operator(&DenseOperator::identity(4));
        write_atomic(&path, &serde_json::to_vec(&file).unwrap()).unwrap();
        let config = JobConfig { input: Some(InputSource::Matrix(path)), ..gap_config(Command::Verify, 1.0, 0.1) };
        let report = cmd_verify(&config).unwrap();
        assert!(report.measured_error <= 1e-10);
        assert_eq!(run(&config).unwrap().exit_code, EXIT_OK);

        let missing = gap_config(Command::Verify, 1.0, 0.1);
        assert_eq!(exit_code(&cmd_verify(&missing).unwrap_err()), EXIT_CONFIG);
    }

    #[test]
    fn verify_literal_formula_records_discrepancy() {
        let spec = SpectrumSpec { dim: 8, delta: PI / 2.0, theta: 0.0, target_multiplicity: 1, seed: 2 };
        let config = JobConfig {
            input: Some(InputSource::Spectrum(spec)),
            use_paper_t_formula: true,
            ..gap_config(Command::Verify, PI / 2.0, 1e-3)
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.exit_code, EXIT_BOUND_NOT_MET);
        let report: VerificationReport = serde_json::from_slice(&outcome.stdout).unwrap();
        assert!(!report.bound_satisfied);
        let d = report.discrepancy.unwrap();
        assert!(d.corrected.meets_epsilon && !d.paper.meets_epsilon);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let config = JobConfig {
            sweep: Some(SweepGrid { deltas: vec![], epsilons: vec![0.1], dims: vec![4], seeds: vec![1], target_multiplicity: 1 }),
            ..JobConfig::new(Command::Sweep)
        };
        let rows = cmd_sweep(&config).unwrap();
        assert!(rows.is_empty());
        let text = String::from_utf8(sweep_csv(&rows).unwrap()).unwrap();
        assert_eq!(text, format!("{}\n", SWEEP_COLUMNS.join(",")));
    }

    #[test]
    fn sweep_keeps_going_after_bad_rows() {
        let config = JobConfig {
            sweep: Some(SweepGrid {
                deltas: vec![PI / 2.0, 4.0],
                epsilons: vec![0.1],
                dims: vec![4],
                seeds: vec![1, 2],
                target_multiplicity: 1,
            }),
            ..JobConfig::new(Command::Sweep)
        };
        let rows = cmd_sweep(&config).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[..2].iter().all(|r| r.satisfied && r.error.is_empty()));
        assert!(rows[2..].iter().all(|r| !r.satisfied && !r.error.is_empty()));
    }
}

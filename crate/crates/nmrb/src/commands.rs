//! The `generate`, `learn`, `diagnose` and `fit` commands. Each is a function
//! of its input files and options; results are written to an output directory
//! together with a [`RunManifest`].
use std::path::{Path, PathBuf};
use std::time::Instant;

use nmrb_core::fit::{fit_curve, ExpFit};
use nmrb_core::learner::{diagnose_markovianity, train, Diagnosis, LearningProblem, TrainingResult};
use nmrb_core::rb::AsfCurve;
use serde::{Deserialize, Serialize};

use crate::config::{LearnerSection, RunConfig, SYSTEM_DIM};
use crate::error::{CliError, Result};
use crate::format::{read_curve_csv, read_matrix_json, write_curve_csv, CurveRecord, CurveRow, MatrixRecord, PHASE_TOL};
use crate::manifest::RunManifest;
use crate::montecarlo::estimate_asf_parallel;

pub const CURVE_CSV: &str = "curve.csv";
pub const CURVE_JSON: &str = "curve.json";
pub const RESULT_JSON: &str = "result.json";
pub const PREDICTED_CSV: &str = "predicted.csv";

/// Default off-block tolerance for the Markovianity diagnosis.
pub const DEFAULT_DIAGNOSIS_TOL: f64 = 1e-2;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("record serializes") + "\n"
}

/// Loads a curve from CSV, or from its JSON form when the extension is `.json`.
pub fn load_curve(path: &Path) -> Result<AsfCurve> {
    let text = read(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        let rec: CurveRecord = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
        crate::format::curve_from_rows(&rec.rows)
    } else {
        read_curve_csv(&text)
    };
    parsed.map_err(|e| CliError::parse(path, e))
}

#[derive(Clone, Debug, Default)]
pub struct GenerateOptions {
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct GenerateOutput {
    pub curve: AsfCurve,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn generate(config_path: &Path, out_dir: &Path, opts: &GenerateOptions) -> Result<GenerateOutput> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(config_path)?;
    if let (Some(seed), Some(ex)) = (opts.seed, cfg.experiment.as_mut()) {
        ex.seed = seed;
    }
    let experiment = cfg.experiment()?;
    let curve = estimate_asf_parallel(&experiment)?;
    prepare_dir(out_dir)?;
    let outputs = vec![write(out_dir.join(CURVE_CSV), &write_curve_csv(&curve)?)?, write(out_dir.join(CURVE_JSON), &to_json(&CurveRecord::new(&curve)))?];
    let mut manifest = RunManifest::new("generate", experiment.seed, serde_json::to_value(&cfg).expect("config serializes"));
    manifest.inputs.push(config_path.to_path_buf());
    manifest.outputs = outputs.clone();
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest = manifest.write(out_dir)?;
    Ok(GenerateOutput { curve, outputs, manifest })
}

#[derive(Clone, Debug)]
pub struct LearnOptions {
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    /// Off-block tolerance for the diagnosis stored with the result.
    pub tol: f64,
    pub require_convergence: bool,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self { seed: None, max_iterations: None, tol: DEFAULT_DIAGNOSIS_TOL, require_convergence: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisRecord {
    pub markovian: bool,
    pub off_block_norm: f64,
    pub tol: f64,
    pub system_block: MatrixRecord,
}

impl DiagnosisRecord {
    pub fn new(d: &Diagnosis, tol: f64) -> Self {
        Self { markovian: d.markovian, off_block_norm: d.off_block_norm, tol, system_block: MatrixRecord::from(&d.system_block) }
    }
}

/// Everything `learn` writes to `result.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    /// Learned unitary on `E ⊗ S` with its global phase fixed.
    pub lambda: MatrixRecord,
    pub env_dim: usize,
    pub system_dim: usize,
    pub converged: bool,
    pub iterations: usize,
    pub best_iteration: usize,
    pub threshold: f64,
    pub cost: f64,
    pub l1_residual: f64,
    pub predicted: Vec<CurveRow>,
    pub diagnosis: DiagnosisRecord,
    pub cost_trace: Vec<f64>,
    pub l1_trace: Vec<f64>,
    pub unitarity_trace: Vec<f64>,
    pub seed: u64,
    pub learner: LearnerSection,
}

#[derive(Clone, Debug)]
pub struct LearnOutput {
    pub result: TrainingResult,
    pub diagnosis: Diagnosis,
    pub record: TrainingRecord,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn learn(data_path: &Path, config_path: &Path, out_dir: &Path, opts: &LearnOptions) -> Result<LearnOutput> {
    let start = Instant::now();
    let mut cfg = RunConfig::load(config_path)?;
    let data = load_curve(data_path)?;
    let section = cfg.learner.as_mut().ok_or_else(|| CliError::Input("config has no [learner] section".into()))?;
    if let Some(seed) = opts.seed {
        section.seed = seed;
    }
    if let Some(n) = opts.max_iterations {
        section.max_iterations = n;
    }
    let section = section.clone();
    let learner = section.build()?;
    let (rho_s, povm) = cfg.learning_spam()?;
    let problem = LearningProblem::new(data, rho_s, povm, learner.d_e)?;
    let result = train(&problem, &learner)?;
    let diagnosis = diagnose_markovianity(&result.lambda, learner.d_e, SYSTEM_DIM, opts.tol)?;
    let cost = problem.cost(&result.lambda)?;
    let l1_residual = problem.l1_residual(&result.lambda)?;
    let record = TrainingRecord {
        lambda: MatrixRecord::from(&result.lambda.canonical_phase(PHASE_TOL)),
        env_dim: learner.d_e,
        system_dim: SYSTEM_DIM,
        converged: result.converged,
        iterations: result.iterations,
        best_iteration: result.best_iteration,
        threshold: result.threshold,
        cost,
        l1_residual,
        predicted: crate::format::curve_rows(&result.predicted),
        diagnosis: DiagnosisRecord::new(&diagnosis, opts.tol),
        cost_trace: result.cost_trace.clone(),
        l1_trace: result.l1_trace.clone(),
        unitarity_trace: result.unitarity_trace.clone(),
        seed: section.seed,
        learner: section,
    };
    prepare_dir(out_dir)?;
    let outputs = vec![write(out_dir.join(RESULT_JSON), &to_json(&record))?, write(out_dir.join(PREDICTED_CSV), &write_curve_csv(&result.predicted)?)?];
    let mut manifest = RunManifest::new("learn", record.seed, serde_json::to_value(&cfg).expect("config serializes"));
    manifest.inputs = vec![data_path.to_path_buf(), config_path.to_path_buf()];
    manifest.outputs = outputs.clone();
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest = manifest.write(out_dir)?;
    if opts.require_convergence && !result.converged {
        let best_l1 = result.l1_trace.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(CliError::NotConverged { iterations: result.iterations, threshold: result.threshold, best_l1 });
    }
    Ok(LearnOutput { result, diagnosis, record, outputs, manifest })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub env_dim: usize,
    pub system_dim: usize,
    #[serde(flatten)]
    pub diagnosis: DiagnosisRecord,
}

impl std::fmt::Display for DiagnoseReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = &self.diagnosis;
        writeln!(f, "{}", if d.markovian { "markovian" } else { "non-markovian" })?;
        writeln!(f, "off_block_norm = {:.6e} (tol {:e})", d.off_block_norm, d.tol)?;
        writeln!(f, "system block (environment in |0>):")?;
        for (re, im) in d.system_block.re.iter().zip(&d.system_block.im) {
            let cells: Vec<String> = re.iter().zip(im).map(|(a, b)| format!("{a:+.6}{b:+.6}i")).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Reads a unitary on `E ⊗ S` (a matrix record or a `learn` result) and tests
/// whether it leaves the fiducial environment state invariant.
pub fn diagnose(model_path: &Path, tol: f64) -> Result<DiagnoseReport> {
    let lambda = read_matrix_json(&read(model_path)?).map_err(|e| CliError::parse(model_path, e))?;
    let n = lambda.rows();
    if !lambda.is_square() || n % SYSTEM_DIM != 0 || n == SYSTEM_DIM {
        return Err(CliError::Input(format!("model must be a square matrix on E⊗S with dimension a multiple of {SYSTEM_DIM}, found {}x{}", n, lambda.cols())));
    }
    let env_dim = n / SYSTEM_DIM;
    let diagnosis = diagnose_markovianity(&lambda, env_dim, SYSTEM_DIM, tol).map_err(|e| match e {
        nmrb_core::Error::Contract { .. } => CliError::Input(format!("{}: {e}", model_path.display())),
        other => other.into(),
    })?;
    Ok(DiagnoseReport { env_dim, system_dim: SYSTEM_DIM, diagnosis: DiagnosisRecord::new(&diagnosis, tol) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub max_residual: f64,
    pub median_stderr: f64,
    pub degenerate: bool,
}

impl FitReport {
    pub fn new(fit: &ExpFit, curve: &AsfCurve) -> Self {
        Self { a: fit.a, p: fit.p, b: fit.b, max_residual: fit.max_residual, median_stderr: median(&curve.stderrs), degenerate: fit.degenerate }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Best fit of `A·p^m + B` to a curve file.
pub fn fit(data_path: &Path) -> Result<FitReport> {
    let curve = load_curve(data_path)?;
    Ok(FitReport::new(&fit_curve(&curve)?, &curve))
}

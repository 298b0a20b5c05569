//! The `reisda` command line: `gen`, `run`, `sweep` and `oracle`.

pub mod bundle;
pub mod config;
pub mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub use config::{CsvFiles, DatasetSource, ExperimentConfig, Preprocessing, CONFIG_SCHEMA_VERSION};
pub use pipeline::{prepare, Prepared};

use crate::adaptation::{dp_exhaustive_oracle, self_label, ActionSpace, DomainPair};
use crate::dataset::{Dataset, LabeledSample};
use crate::datagen::{make_friedman_benchmark, make_motion_subjects, FriedmanBenchmarkSpec, MotionSpec};
use crate::error::Error;
use crate::evaluation::{
    emit_report, eta_sweep, run_comparison, write_timings, Method, RunReport,
};
use crate::learner::{MlpSpec, RidgeLearner};
use crate::adaptation::{KmmConfig, TcaConfig};

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments (exit 2).
    Usage(String),
    /// Unreadable or invalid config or dataset (exit 2).
    Config(Error),
    /// Failure while running (exit 1).
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(e: Error) -> CliError {
    CliError::Config(e)
}

fn runtime_err(e: Error) -> CliError {
    CliError::Runtime(e)
}

/// What `run` and `sweep` wrote.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
    /// Some method or sweep run failed; the report is still complete otherwise.
    pub any_failed: bool,
}

/// Reads and validates a config, keeping the file's own JSON as the snapshot.
pub fn load_config(path: &Path) -> CliResult<(ExperimentConfig, Value)> {
    let cfg = ExperimentConfig::load(path).map_err(config_err)?;
    let text = fs::read_to_string(path).map_err(|e| config_err(Error::io(path, e)))?;
    let snapshot: Value = serde_json::from_str(&text).map_err(|e| {
        config_err(Error::Json {
            context: path.display().to_string(),
            source: e,
        })
    })?;
    Ok((cfg, snapshot))
}

/// One line per run on standard error, prefixed with method and seed.
pub fn log_report(report: &RunReport) {
    for m in &report.methods {
        for r in &m.runs {
            match (&r.rmse, &r.error) {
                (Some(e), _) => eprintln!("[{} seed={}] rmse={e:.6}", m.name, r.seed),
                (None, Some(err)) => eprintln!("[{} seed={}] failed: {err}", m.name, r.seed),
                _ => {}
            }
        }
    }
    for s in &report.sweep {
        match (s.final_rmse(), &s.error) {
            (Some(e), _) => eprintln!("[sweep eta={} seed={}] final labeled rmse={e:.6}", s.eta, s.seed),
            (None, Some(err)) => eprintln!("[sweep eta={} seed={}] failed: {err}", s.eta, s.seed),
            _ => {}
        }
    }
}

/// Full pipeline: ingest, preprocess, run every method on every seed, score, write.
pub fn cmd_run(config_path: &Path, out_dir: Option<&Path>) -> CliResult<CommandOutput> {
    let (cfg, snapshot) = load_config(config_path)?;
    if cfg.methods.is_empty() {
        return Err(config_err(Error::invalid("run needs at least one entry in methods")));
    }
    let prepared = prepare(&cfg).map_err(config_err)?;
    let p = prepared.bench.pair().target_len();
    for m in &cfg.methods {
        if let Method::Isda { eta } | Method::ReIsda { eta } = m {
            if *eta > p {
                return Err(config_err(Error::invalid(format!("eta = {eta} exceeds the {p} targets"))));
            }
        }
    }
    let (outcomes, timings) = run_comparison(
        &prepared.bench,
        prepared.raw_pair.as_ref(),
        &cfg.methods,
        &prepared.base,
        &cfg.seeds,
    )
    .map_err(runtime_err)?;
    let mut report = RunReport::new(prepared.dataset, snapshot, cfg.seeds.clone(), prepared.bench.truth().export());
    report.methods = outcomes;
    report.validate().map_err(runtime_err)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let mut files = emit_report(&report, &dir).map_err(runtime_err)?;
    let timing_path = dir.join("timings.json");
    write_timings(&timings, &timing_path).map_err(runtime_err)?;
    files.push(timing_path);
    Ok(CommandOutput {
        any_failed: report.any_failed(),
        report,
        files,
    })
}

/// Re-ISDA for each block size, tracing the RMSE of the labeled targets.
pub fn cmd_sweep(config_path: &Path, etas: &[usize], out_dir: Option<&Path>) -> CliResult<CommandOutput> {
    let (cfg, snapshot) = load_config(config_path)?;
    let etas: Vec<usize> = if etas.is_empty() { cfg.etas.clone() } else { etas.to_vec() };
    if etas.is_empty() {
        return Err(CliError::Usage("sweep needs --etas (or etas in the config)".into()));
    }
    let prepared = prepare(&cfg).map_err(config_err)?;
    let p = prepared.bench.pair().target_len();
    if let Some(bad) = etas.iter().find(|&&e| e == 0 || e > p) {
        return Err(config_err(Error::invalid(format!("eta = {bad} is outside 1..={p}"))));
    }
    let sweep = eta_sweep(&prepared.bench, &etas, &prepared.base, &cfg.seeds).map_err(runtime_err)?;
    let mut report = RunReport::new(prepared.dataset, snapshot, cfg.seeds.clone(), prepared.bench.truth().export());
    report.sweep = sweep;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let files = emit_report(&report, &dir).map_err(runtime_err)?;
    Ok(CommandOutput {
        any_failed: report.any_failed(),
        report,
        files,
    })
}

pub fn cmd_gen_friedman(spec: &FriedmanBenchmarkSpec, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    spec.validate().map_err(config_err)?;
    let bench = make_friedman_benchmark(spec).map_err(config_err)?;
    bundle::write_friedman_bundle(&bench, spec, out_dir).map_err(runtime_err)
}

/// Config for the synthetic time series: five methods with the motion
/// settings, ten seeds, PCA to 10 components.
pub fn motion_config(dataset_dir: &str) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: CONFIG_SCHEMA_VERSION,
        dataset: DatasetSource::Bundle(dataset_dir.into()),
        preprocessing: Preprocessing {
            normalize: true,
            pca_components: Some(10),
            frame_difference: None,
            order: None,
        },
        base: Some(motion_base()),
        methods: vec![
            Method::Baseline,
            Method::Kmm(KmmConfig::new(2.0)),
            Method::Tca(TcaConfig::new(10)),
            Method::Isda { eta: 2 },
            Method::ReIsda { eta: 2 },
        ],
        seeds: (0..10).collect(),
        output_dir: "out".into(),
        etas: vec![2, 3, 5],
    }
}

/// `c(10,16,16,8,1)`, learning rate 0.1, 1500 epochs.
pub fn motion_base() -> MlpSpec {
    MlpSpec::new(vec![10, 16, 16, 8, 1], 0.1, 1500)
}

/// Writes the subject files, meta.json and a ready-to-run config.json.
pub fn cmd_gen_timeseries(spec: &MotionSpec, target_subject: Option<usize>, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let subjects = make_motion_subjects(spec).map_err(config_err)?;
    let target = target_subject.unwrap_or(subjects.len());
    if target == 0 || target > subjects.len() {
        return Err(CliError::Usage(format!("--target-subject must be in 1..={}", subjects.len())));
    }
    let mut files = bundle::write_motion_bundle(&subjects, spec, target, out_dir).map_err(runtime_err)?;
    let cfg_path = out_dir.join("config.json");
    bundle::write_json(&cfg_path, &motion_config(".")).map_err(runtime_err)?;
    files.push(cfg_path);
    Ok(files)
}

/// Loads a single-source bundle with a calibration file, keeping target order.
pub fn load_oracle_pair(dir: &Path) -> CliResult<DomainPair> {
    let files = bundle::bundle_files(dir).map_err(config_err)?;
    if files.sources.len() != 1 {
        return Err(config_err(Error::invalid("the oracle takes a bundle with a single source.csv")));
    }
    let source = bundle::read_table(&files.sources[0]).map_err(config_err)?;
    let target = bundle::read_table(&files.target).map_err(config_err)?;
    let cal_path = files
        .calibration
        .ok_or_else(|| config_err(Error::invalid("the oracle needs calibration.csv in the bundle")))?;
    let cal = bundle::read_table(&cal_path).map_err(config_err)?;
    let labels = |t: &bundle::Table, what: &str| {
        t.labels
            .clone()
            .ok_or_else(|| config_err(Error::invalid(format!("{what} has no y column"))))
    };
    let source = Dataset::labeled(source.inputs.clone(), labels(&source, "source")?).map_err(config_err)?;
    let cal_label = labels(&cal, "calibration")?;
    let calibration = LabeledSample::new(cal.inputs.row(0).to_vec(), cal_label[0]);
    DomainPair::new(source, target.inputs, calibration).map_err(config_err)
}

/// Exhaustive minimum of the summed calibration losses over a label grid, next
/// to the greedy ISDA and Re-ISDA totals, with grid-snapping ridge as the learner.
pub fn cmd_oracle(dir: &Path, grid: &[f64], eta: usize, penalty: f64) -> CliResult<Value> {
    if grid.is_empty() {
        return Err(CliError::Usage("--grid needs at least one value".into()));
    }
    if !(penalty > 0.0) {
        return Err(CliError::Usage("--penalty must be positive".into()));
    }
    let pair = load_oracle_pair(dir)?;
    let learner = RidgeLearner::quantized(penalty, grid.to_vec());
    let fixed = dp_exhaustive_oracle(&learner, &pair, eta, grid, ActionSpace::FixedLabels).map_err(config_err)?;
    let renewing = dp_exhaustive_oracle(&learner, &pair, eta, grid, ActionSpace::Renewing).map_err(config_err)?;
    let isda = self_label(&learner, &pair, eta, false, false).map_err(runtime_err)?;
    let re_isda = self_label(&learner, &pair, eta, true, false).map_err(runtime_err)?;
    let total = |states: &[crate::adaptation::IterationState]| states.iter().map(|s| s.state_loss).sum::<f64>();
    Ok(json!({
        "targets": pair.target_len(),
        "eta": eta,
        "grid": grid,
        "penalty": penalty,
        "fixed_labels": {
            "min_total_loss": fixed.min_total_loss,
            "best_labels": fixed.best_labels,
            "fits": fixed.fits,
        },
        "renewing": {
            "min_total_loss": renewing.min_total_loss,
            "best_labels": renewing.best_labels,
            "fits": renewing.fits,
        },
        "isda": { "total_loss": total(&isda.states), "labels": isda.predictions },
        "re_isda": { "total_loss": total(&re_isda.states), "labels": re_isda.predictions },
    }))
}

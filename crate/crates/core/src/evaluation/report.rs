use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::{MethodOutcome, RunTiming, SweepTrace};
use super::svg;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const PROTOCOL_NOTE: &str =
    "each method is run once per seed and summarized by the median RMSE across seeds; min, max and mean are also given";

/// Everything one experiment produced. Wall-clock timings are kept outside
/// this struct so that repeated runs serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub protocol: String,
    /// Benchmark spec or dataset fingerprint.
    pub dataset: serde_json::Value,
    /// The configuration the run was started with.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub truth: Vec<f64>,
    pub methods: Vec<MethodOutcome>,
    #[serde(default)]
    pub sweep: Vec<SweepTrace>,
}

impl RunReport {
    pub fn new(dataset: serde_json::Value, config: serde_json::Value, seeds: Vec<u64>, truth: Vec<f64>) -> Self {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            protocol: PROTOCOL_NOTE.to_string(),
            dataset,
            config,
            seeds,
            truth,
            methods: Vec::new(),
            sweep: Vec::new(),
        }
    }

    pub fn any_failed(&self) -> bool {
        self.methods.iter().any(|m| m.summary.failures > 0) || self.sweep.iter().any(|s| s.error.is_some())
    }

    /// Checks prediction lengths and that every stored RMSE matches its predictions.
    pub fn validate(&self) -> Result<()> {
        let p = self.truth.len();
        for m in &self.methods {
            for run in m.runs.iter().filter(|r| r.rmse.is_some()) {
                if run.predictions.len() != p {
                    return Err(Error::invalid(format!(
                        "{} seed {}: {} predictions for {p} targets",
                        m.name,
                        run.seed,
                        run.predictions.len()
                    )));
                }
                let e = super::rmse(&run.predictions, &self.truth)?;
                let stored = run.rmse.unwrap_or(f64::NAN);
                if (e - stored).abs() > 1e-10 {
                    return Err(Error::invalid(format!(
                        "{} seed {}: stored RMSE {stored} but predictions give {e}",
                        m.name, run.seed
                    )));
                }
            }
        }
        Ok(())
    }

    /// Column names for the methods, made unique when a method appears twice.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::with_capacity(self.methods.len());
        for m in &self.methods {
            let mut name = m.name.clone();
            let mut k = 2;
            while names.contains(&name) {
                name = format!("{}_{k}", m.name);
                k += 1;
            }
            names.push(name);
        }
        names
    }
}

pub const TABLE_HEADER: [&str; 8] = [
    "method", "settings", "median_rmse", "mean_rmse", "min_rmse", "max_rmse", "runs", "failures",
];
pub const TRACES_HEADER: [&str; 5] = ["kind", "series", "seed", "step", "value"];

fn num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let wrap = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn table_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .methods
        .iter()
        .zip(report.column_names())
        .map(|(m, name)| {
            let s = &m.summary;
            vec![
                name,
                serde_json::to_string(&m.method).unwrap_or_default(),
                num(s.median_rmse),
                num(s.mean_rmse),
                num(s.min_rmse),
                num(s.max_rmse),
                m.runs.len().to_string(),
                s.failures.to_string(),
            ]
        })
        .collect()
}

fn prediction_rows(report: &RunReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["point".to_string(), "truth".to_string()];
    header.extend(report.column_names());
    let reps: Vec<Option<&[f64]>> = report
        .methods
        .iter()
        .map(|m| m.representative().map(|r| r.predictions.as_slice()))
        .collect();
    let rows = report
        .truth
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![i.to_string(), t.to_string()];
            row.extend(reps.iter().map(|r| num(r.and_then(|p| p.get(i).copied()))));
            row
        })
        .collect();
    (header, rows)
}

fn trace_rows(report: &RunReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (m, name) in report.methods.iter().zip(report.column_names()) {
        for run in &m.runs {
            for (step, v) in run.loss_trace.iter().enumerate() {
                rows.push(vec![
                    "state_loss".into(),
                    name.clone(),
                    run.seed.to_string(),
                    step.to_string(),
                    v.to_string(),
                ]);
            }
        }
    }
    for s in &report.sweep {
        for (step, v) in s.labeled_rmse.iter().enumerate() {
            rows.push(vec![
                "labeled_rmse".into(),
                format!("eta={}", s.eta),
                s.seed.to_string(),
                step.to_string(),
                v.to_string(),
            ]);
        }
    }
    rows
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes report.json, table.csv, predictions.csv, traces.csv and plot.svg
/// into `dir`, creating it if needed. Returns the written paths.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Json {
        context: "report".into(),
        source: e,
    })?;
    let paths: Vec<PathBuf> = ["report.json", "table.csv", "predictions.csv", "traces.csv", "plot.svg"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_text(&paths[0], &(json + "\n"))?;
    let strings = |h: &[&str]| h.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    write_rows(&paths[1], &strings(&TABLE_HEADER), &table_rows(report))?;
    let (header, rows) = prediction_rows(report);
    write_rows(&paths[2], &header, &rows)?;
    write_rows(&paths[3], &strings(&TRACES_HEADER), &trace_rows(report))?;
    write_text(&paths[4], &svg::report_plot(report))?;
    Ok(paths)
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })
}

pub fn write_timings(timings: &[RunTiming], path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(timings).map_err(|e| Error::Json {
        context: "timings".into(),
        source: e,
    })?;
    write_text(path, &(json + "\n"))
}

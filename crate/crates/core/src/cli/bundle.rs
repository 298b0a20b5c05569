//! CSV tables and benchmark bundles on disk.
//!
//! A table has a header row. Feature columns start with `x_`, the label
//! column is `y` and an optional `t` column gives the time of each row.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::datagen::{FriedmanBenchmarkSpec, MotionSpec, SubjectSeries};
use crate::error::{Error, Result};
use crate::evaluation::Benchmark;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub inputs: Matrix,
    pub labels: Option<Vec<f64>>,
    pub time: Option<Vec<f64>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    /// Rows sorted by `t` (stable), or unchanged without a time column.
    pub fn time_sorted(&self) -> Table {
        let Some(time) = &self.time else {
            return self.clone();
        };
        let mut idx: Vec<usize> = (0..time.len()).collect();
        idx.sort_by(|&a, &b| time[a].total_cmp(&time[b]).then(a.cmp(&b)));
        Table {
            feature_names: self.feature_names.clone(),
            inputs: self.inputs.select_rows(&idx),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            time: Some(idx.iter().map(|&i| time[i]).collect()),
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = reader.headers().map_err(csv_err(path))?.iter().map(|h| h.trim().to_string()).collect();
    let mut features = Vec::new();
    let (mut y_col, mut t_col) = (None, None);
    for (j, name) in header.iter().enumerate() {
        match name.as_str() {
            "y" if y_col.is_none() => y_col = Some(j),
            "t" if t_col.is_none() => t_col = Some(j),
            n if n.starts_with("x_") && !features.iter().any(|&(_, f): &(usize, &String)| f == name) => {
                features.push((j, name))
            }
            _ => {
                return Err(Error::invalid(format!(
                    "{}: unexpected or repeated column {name:?}; expected x_* features, y and t",
                    path.display()
                )))
            }
        }
    }
    if features.is_empty() {
        return Err(Error::invalid(format!("{}: no x_* feature columns", path.display())));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut time = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let field = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("").trim();
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::invalid(format!(
                    "{} row {}: column {:?} is not a finite number: {raw:?}",
                    path.display(),
                    line + 1,
                    header[j]
                ))
            })
        };
        for &(j, _) in &features {
            data.push(field(j)?);
        }
        if let Some(j) = y_col {
            labels.push(field(j)?);
        }
        if let Some(j) = t_col {
            time.push(field(j)?);
        }
    }
    let rows = data.len() / features.len();
    Ok(Table {
        feature_names: features.iter().map(|(_, n)| n.to_string()).collect(),
        inputs: Matrix::new(rows, features.len(), data)?,
        labels: y_col.map(|_| labels),
        time: t_col.map(|_| time),
    })
}

pub fn feature_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("x_{j}")).collect()
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = Vec::new();
    if table.time.is_some() {
        header.push("t".to_string());
    }
    header.extend(table.feature_names.iter().cloned());
    if table.labels.is_some() {
        header.push("y".to_string());
    }
    w.write_record(&header).map_err(csv_err(path))?;
    for i in 0..table.len() {
        let mut row = Vec::with_capacity(header.len());
        if let Some(t) = &table.time {
            row.push(t[i].to_string());
        }
        row.extend(table.inputs.row(i).iter().map(|v| v.to_string()));
        if let Some(y) = &table.labels {
            row.push(y[i].to_string());
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_labels(path: &Path, labels: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["y"]).map_err(csv_err(path))?;
    for y in labels {
        w.write_record([y.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    let col = header
        .iter()
        .position(|h| h.trim() == "y")
        .ok_or_else(|| Error::invalid(format!("{}: no y column", path.display())))?;
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let raw = record.get(col).unwrap_or("").trim();
        let v = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            Error::invalid(format!("{} row {}: y is not a finite number: {raw:?}", path.display(), line + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct FriedmanMeta<'a> {
    kind: &'static str,
    spec: &'a FriedmanBenchmarkSpec,
    /// `target_order[k]` is the index, before ordering, of row `k` of target.csv.
    target_order: &'a [usize],
}

/// source.csv, target.csv (already ordered), calibration.csv, truth.csv and meta.json.
pub fn write_friedman_bundle(bench: &Benchmark, spec: &FriedmanBenchmarkSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pair = bench.pair();
    let names = feature_names(pair.dim());
    let files: Vec<PathBuf> = ["source.csv", "target.csv", "calibration.csv", "truth.csv", "meta.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_table(
        &files[0],
        &Table {
            feature_names: names.clone(),
            inputs: pair.source().inputs().clone(),
            labels: pair.source().labels().map(|l| l.to_vec()),
            time: None,
        },
    )?;
    write_table(
        &files[1],
        &Table {
            feature_names: names.clone(),
            inputs: pair.target_inputs().clone(),
            labels: None,
            time: None,
        },
    )?;
    let cal = pair.calibration();
    write_table(
        &files[2],
        &Table {
            feature_names: names,
            inputs: Matrix::new(1, cal.input.len(), cal.input.clone())?,
            labels: Some(vec![cal.label]),
            time: None,
        },
    )?;
    write_labels(&files[3], &bench.truth().export())?;
    write_json(
        &files[4],
        &FriedmanMeta {
            kind: "friedman",
            spec,
            target_order: bench.target_order(),
        },
    )?;
    Ok(files)
}

#[derive(Serialize)]
struct MotionMeta<'a> {
    kind: &'static str,
    spec: &'a MotionSpec,
    target_subject: usize,
    source_files: Vec<String>,
}

pub fn subject_table(series: &SubjectSeries) -> Table {
    Table {
        feature_names: feature_names(series.features.cols()),
        inputs: series.features.clone(),
        labels: Some(series.labels.clone()),
        time: Some(series.time.clone()),
    }
}

/// One CSV per source subject (`source_<k>.csv`), target.csv for the target
/// subject and meta.json. Subjects are numbered from 1.
pub fn write_motion_bundle(
    subjects: &[SubjectSeries],
    spec: &MotionSpec,
    target_subject: usize,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if target_subject == 0 || target_subject > subjects.len() {
        return Err(Error::invalid(format!(
            "target subject {target_subject} is not in 1..={}",
            subjects.len()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut source_files = Vec::new();
    for (k, s) in subjects.iter().enumerate() {
        let name = if k + 1 == target_subject {
            "target.csv".to_string()
        } else {
            let n = format!("source_{}.csv", k + 1);
            source_files.push(n.clone());
            n
        };
        let path = dir.join(&name);
        write_table(&path, &subject_table(s))?;
        files.push(path);
    }
    let meta = dir.join("meta.json");
    write_json(
        &meta,
        &MotionMeta {
            kind: "motion",
            spec,
            target_subject,
            source_files,
        },
    )?;
    files.push(meta);
    Ok(files)
}

/// Files of a bundle directory: source.csv or every source_*.csv, target.csv,
/// and calibration.csv / truth.csv when present.
pub fn bundle_files(dir: &Path) -> Result<super::config::CsvFiles> {
    let single = dir.join("source.csv");
    let sources = if single.is_file() {
        vec![single]
    } else {
        let mut found: Vec<(u64, PathBuf)> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter_map(|p| {
                let stem = p.file_stem()?.to_str()?.strip_prefix("source_")?.parse::<u64>().ok()?;
                (p.extension()? == "csv").then_some((stem, p))
            })
            .collect();
        found.sort();
        found.into_iter().map(|(_, p)| p).collect()
    };
    if sources.is_empty() {
        return Err(Error::invalid(format!("{}: no source.csv or source_*.csv", dir.display())));
    }
    let optional = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
    Ok(super::config::CsvFiles {
        sources,
        target: dir.join("target.csv"),
        calibration: optional("calibration.csv"),
        truth: optional("truth.csv"),
    })
}

/// SHA-256 of a file's bytes, as hex.
pub fn fingerprint(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

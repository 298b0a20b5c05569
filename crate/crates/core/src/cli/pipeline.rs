//! Turns a configured dataset into a scored adaptation problem:
//! ingest, scale, difference, project, choose calibration and source, order.

use serde_json::{json, Value};

use super::bundle::{bundle_files, feature_names, fingerprint, read_labels, read_table, Table};
use super::config::{CsvFiles, DatasetSource, ExperimentConfig};
use crate::adaptation::{select_source_model, DomainPair};
use crate::dataset::{Dataset, LabeledSample};
use crate::datagen::make_friedman_benchmark;
use crate::error::{Error, Result};
use crate::evaluation::{Benchmark, SealedTruth};
use crate::learner::{BaseLearner, MlpSpec};
use crate::numerics::Matrix;
use crate::preprocessing::{frame_difference, minmax_fit, order_targets, pca_fit, PcaRetention, TargetOrder};

/// A prepared experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub bench: Benchmark,
    /// The same problem before PCA, for methods that work on the full features.
    pub raw_pair: Option<DomainPair>,
    /// Base network with its input layer sized to the features.
    pub base: MlpSpec,
    pub dataset: Value,
}

struct Tables {
    sources: Vec<Table>,
    target: Table,
    calibration: Option<Table>,
    truth: Option<Vec<f64>>,
    description: Value,
}

fn friedman_tables(cfg: &ExperimentConfig) -> Result<Option<Tables>> {
    let DatasetSource::Friedman(spec) = &cfg.dataset else {
        return Ok(None);
    };
    let bench = make_friedman_benchmark(spec)?;
    let pair = bench.pair();
    let names = feature_names(pair.dim());
    let cal = pair.calibration();
    Ok(Some(Tables {
        sources: vec![Table {
            feature_names: names.clone(),
            inputs: pair.source().inputs().clone(),
            labels: pair.source().labels().map(|l| l.to_vec()),
            time: None,
        }],
        target: Table {
            feature_names: names.clone(),
            inputs: pair.target_inputs().clone(),
            labels: None,
            time: None,
        },
        calibration: Some(Table {
            feature_names: names,
            inputs: Matrix::new(1, cal.input.len(), cal.input.clone())?,
            labels: Some(vec![cal.label]),
            time: None,
        }),
        truth: Some(bench.truth().export()),
        description: json!({ "kind": "friedman", "spec": spec }),
    }))
}

fn csv_tables(files: &CsvFiles) -> Result<Tables> {
    let mut described = Vec::new();
    let mut note = |role: &str, p: &std::path::Path| -> Result<()> {
        described.push(json!({ "role": role, "path": p.display().to_string(), "sha256": fingerprint(p)? }));
        Ok(())
    };
    let mut sources = Vec::with_capacity(files.sources.len());
    for p in &files.sources {
        note("source", p)?;
        sources.push(read_table(p)?);
    }
    note("target", &files.target)?;
    let target = read_table(&files.target)?;
    let calibration = match &files.calibration {
        Some(p) => {
            note("calibration", p)?;
            Some(read_table(p)?)
        }
        None => None,
    };
    let truth = match &files.truth {
        Some(p) => {
            note("truth", p)?;
            Some(read_labels(p)?)
        }
        None => None,
    };
    Ok(Tables {
        sources,
        target,
        calibration,
        truth,
        description: json!({ "kind": "csv", "files": described }),
    })
}

fn check_tables(t: &Tables) -> Result<()> {
    let names = &t.target.feature_names;
    for (k, s) in t.sources.iter().enumerate() {
        if &s.feature_names != names {
            return Err(Error::invalid(format!("source {} has different feature columns than the target", k + 1)));
        }
        if s.labels.is_none() {
            return Err(Error::invalid(format!("source {} has no y column", k + 1)));
        }
        if s.is_empty() {
            return Err(Error::invalid(format!("source {} has no rows", k + 1)));
        }
    }
    if t.target.is_empty() {
        return Err(Error::invalid("target has no rows"));
    }
    if let Some(c) = &t.calibration {
        if &c.feature_names != names || c.len() != 1 || c.labels.is_none() {
            return Err(Error::invalid(
                "calibration file must hold exactly one labeled row with the target's feature columns",
            ));
        }
    }
    Ok(())
}

fn map_inputs(t: &mut Tables, f: impl Fn(&Matrix) -> Result<Matrix>) -> Result<()> {
    for s in &mut t.sources {
        s.inputs = f(&s.inputs)?;
    }
    t.target.inputs = f(&t.target.inputs)?;
    if let Some(c) = &mut t.calibration {
        c.inputs = f(&c.inputs)?;
    }
    Ok(())
}

fn stacked(t: &Tables) -> Result<Matrix> {
    let mut m = t.target.inputs.clone();
    for s in &t.sources {
        m = m.vstack(&s.inputs)?;
    }
    Ok(m)
}

/// Source, target and calibration inputs for one feature representation.
struct Features {
    sources: Vec<Matrix>,
    target: Matrix,
    calibration: Option<Vec<f64>>,
}

fn snapshot(t: &Tables) -> Features {
    Features {
        sources: t.sources.iter().map(|s| s.inputs.clone()).collect(),
        target: t.target.inputs.clone(),
        calibration: t.calibration.as_ref().map(|c| c.inputs.row(0).to_vec()),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let mut tables = match friedman_tables(cfg)? {
        Some(t) => t,
        None => match &cfg.dataset {
            DatasetSource::Bundle(dir) => csv_tables(&bundle_files(dir)?)?,
            DatasetSource::Csv(files) => csv_tables(files)?,
            DatasetSource::Friedman(_) => unreachable!(),
        },
    };
    check_tables(&tables)?;
    for s in &mut tables.sources {
        *s = s.time_sorted();
    }
    tables.target = tables.target.time_sorted();

    let pre = &cfg.preprocessing;
    let has_time = tables.target.time.is_some();
    let differencing = pre.frame_difference.unwrap_or(has_time);
    let order_mode = pre.order.unwrap_or(if has_time { TargetOrder::KeepOrder } else { TargetOrder::ByDistance });
    if differencing && tables.calibration.is_some() {
        return Err(Error::invalid(
            "a separate calibration file has no previous frame; frame differencing needs the calibration row inside the target series",
        ));
    }

    if pre.normalize {
        let params = minmax_fit(&stacked(&tables)?)?;
        map_inputs(&mut tables, |m| params.apply(m))?;
    }
    if differencing {
        map_inputs(&mut tables, |m| Ok(frame_difference(m)))?;
    }
    let raw = snapshot(&tables);
    let mut pca_variances = None;
    if let Some(k) = pre.pca_components {
        let params = pca_fit(&stacked(&tables)?, PcaRetention::Count(k))?;
        map_inputs(&mut tables, |m| params.apply(m))?;
        let total: f64 = params.variances.iter().sum();
        pca_variances = Some(params.variances.iter().take(k + 1).map(|v| v / total).collect::<Vec<f64>>());
    }
    let features = snapshot(&tables);
    let dim = features.target.cols();
    let base = cfg.base_spec().with_input_dim(dim);

    let truth = match (&tables.truth, &tables.target.labels) {
        (Some(t), _) => t.clone(),
        (None, Some(y)) => y.clone(),
        (None, None) => {
            return Err(Error::invalid(
                "no target labels to score against: give a truth file or a y column in the target file",
            ))
        }
    };
    if truth.len() != tables.target.len() {
        return Err(Error::invalid(format!(
            "{} truth labels for {} targets",
            truth.len(),
            tables.target.len()
        )));
    }

    let source_sets: Vec<Dataset> = tables
        .sources
        .iter()
        .zip(&features.sources)
        .map(|(t, x)| Dataset::labeled(x.clone(), t.labels.clone().unwrap_or_default()))
        .collect::<Result<_>>()?;

    // Calibration: a provided file, else the first labeled target frame, else
    // the source row closest on average to the targets.
    let (calibration, cal_rule, cal_raw) = if let (Some(c), Some(x)) = (&tables.calibration, &features.calibration) {
        let label = c.labels.as_ref().map(|l| l[0]).unwrap_or_default();
        (LabeledSample::new(x.clone(), label), "file".to_string(), raw.calibration.clone())
    } else if let Some(y) = &tables.target.labels {
        (
            LabeledSample::new(features.target.row(0).to_vec(), y[0]),
            "first_target".to_string(),
            Some(raw.target.row(0).to_vec()),
        )
    } else {
        let mut all = source_sets[0].clone();
        for s in &source_sets[1..] {
            all = all.concat(s)?;
        }
        let chosen = crate::preprocessing::choose_calibration(&all, &features.target, None)?;
        let idx = all.inputs().row_iter().position(|r| r == chosen.input.as_slice()).unwrap_or(0);
        let mut raw_all = raw.sources[0].clone();
        for s in &raw.sources[1..] {
            raw_all = raw_all.vstack(s)?;
        }
        (chosen, "nearest_source".to_string(), Some(raw_all.row(idx).to_vec()))
    };

    let selected = if source_sets.len() > 1 {
        let selector = base.clone().with_seed(cfg.seeds[0]);
        let models = source_sets
            .iter()
            .map(|s| selector.fit(s, None, None))
            .collect::<Result<Vec<_>>>()?;
        select_source_model(&models, &calibration)?
    } else {
        0
    };

    let order = order_targets(&features.target, &calibration.input, order_mode)?;
    let pair = DomainPair::new(source_sets[selected].clone(), features.target.clone(), calibration)?.reordered(&order)?;
    let truth_sorted: Vec<f64> = order.iter().map(|&i| truth[i]).collect();
    let raw_pair = match (pre.pca_components, cal_raw) {
        (Some(_), Some(cal_raw)) => Some(
            DomainPair::new(
                source_sets[selected].with_inputs(raw.sources[selected].clone())?,
                raw.target.clone(),
                LabeledSample::new(cal_raw, pair.calibration().label),
            )?
            .reordered(&order)?,
        ),
        _ => None,
    };

    let mut dataset = tables.description;
    dataset["source_rows"] = json!(pair.source_len());
    dataset["target_rows"] = json!(pair.target_len());
    dataset["features"] = json!(dim);
    dataset["raw_features"] = json!(raw.target.cols());
    dataset["selected_source"] = json!(selected);
    dataset["calibration"] = json!(cal_rule);
    dataset["target_order"] = json!(order_mode);
    dataset["frame_difference"] = json!(differencing);
    if let Some(v) = pca_variances {
        dataset["pca_variance_fractions"] = json!(v);
    }
    Ok(Prepared {
        bench: Benchmark::new(pair, SealedTruth::new(truth_sorted), order)?,
        raw_pair,
        base,
        dataset,
    })
}

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Benchmark, SealedTruth};
use crate::adaptation::{
    loss_trace, run_baseline, run_isda, run_kmm, run_re_isda, run_tca, AdaptationConfig,
    DomainPair, KmmConfig, TcaConfig,
};
use crate::error::{Error, Result};
use crate::learner::MlpSpec;
use crate::numerics::median;

/// One method under comparison with its own settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Baseline,
    Kmm(KmmConfig),
    Tca(TcaConfig),
    Isda { eta: usize },
    ReIsda { eta: usize },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Kmm(_) => "kmm",
            Method::Tca(_) => "tca",
            Method::Isda { .. } => "isda",
            Method::ReIsda { .. } => "re_isda",
        }
    }

    /// The five methods with the settings of the Friedman experiment.
    pub fn friedman_set(eta: usize) -> Vec<Method> {
        vec![
            Method::Baseline,
            Method::Kmm(KmmConfig::new(0.5)),
            Method::Tca(TcaConfig::new(5)),
            Method::Isda { eta },
            Method::ReIsda { eta },
        ]
    }
}

/// Predictions of one method, plus the calibration-loss trace for iterative methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub predictions: Vec<f64>,
    pub loss_trace: Vec<f64>,
}

/// Runs `method` with the base network seeded by `seed`. `raw_pair`, when
/// given, is the problem in its untransformed features and is used by TCA.
pub fn run_method(
    pair: &DomainPair,
    raw_pair: Option<&DomainPair>,
    method: &Method,
    base: &MlpSpec,
    seed: u64,
) -> Result<MethodOutput> {
    let base = base.clone().with_seed(seed);
    let plain = |predictions| MethodOutput {
        predictions,
        loss_trace: Vec::new(),
    };
    Ok(match method {
        Method::Baseline => plain(run_baseline(pair, &base)?),
        Method::Kmm(cfg) => plain(run_kmm(pair, &base, cfg)?),
        Method::Tca(cfg) => plain(run_tca(raw_pair.unwrap_or(pair), &base, cfg)?),
        Method::Isda { eta } => {
            let run = run_isda(pair, &AdaptationConfig::isda(*eta, base))?;
            MethodOutput {
                loss_trace: loss_trace(&run.states),
                predictions: run.predictions,
            }
        }
        Method::ReIsda { eta } => {
            let run = run_re_isda(pair, &AdaptationConfig::re_isda(*eta, base))?;
            MethodOutput {
                loss_trace: loss_trace(&run.states),
                predictions: run.predictions,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub seed: u64,
    pub rmse: Option<f64>,
    pub predictions: Vec<f64>,
    pub absolute_errors: Vec<f64>,
    pub loss_trace: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub median_rmse: Option<f64>,
    pub mean_rmse: Option<f64>,
    pub min_rmse: Option<f64>,
    pub max_rmse: Option<f64>,
    pub failures: usize,
    /// Seed of the run whose RMSE is the (lower) median; its predictions are the representative ones.
    pub representative_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub name: String,
    pub method: Method,
    pub runs: Vec<MethodRun>,
    pub summary: MethodSummary,
}

impl MethodOutcome {
    pub fn representative(&self) -> Option<&MethodRun> {
        let seed = self.summary.representative_seed?;
        self.runs.iter().find(|r| r.seed == seed)
    }

    pub fn successful_rmses(&self) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.rmse).collect()
    }
}

fn summarize(runs: &[MethodRun]) -> MethodSummary {
    let mut scored: Vec<(f64, u64)> = runs.iter().filter_map(|r| r.rmse.map(|e| (e, r.seed))).collect();
    let failures = runs.len() - scored.len();
    if scored.is_empty() {
        return MethodSummary {
            median_rmse: None,
            mean_rmse: None,
            min_rmse: None,
            max_rmse: None,
            failures,
            representative_seed: None,
        };
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut values: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    MethodSummary {
        median_rmse: median(&mut values),
        mean_rmse: Some(mean),
        min_rmse: Some(scored[0].0),
        max_rmse: Some(scored[scored.len() - 1].0),
        failures,
        representative_seed: Some(scored[(scored.len() - 1) / 2].1),
    }
}

/// Wall-clock time per (method, seed), kept apart from the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub method: String,
    pub seed: u64,
    pub seconds: f64,
}

/// Every method on every seed over the same data. One method failing does not
/// stop the others; its error is recorded in its run entry. Methods are
/// reported in sorted name order so the result does not depend on the order
/// methods are listed in.
pub fn run_comparison(
    bench: &Benchmark,
    raw_pair: Option<&DomainPair>,
    methods: &[Method],
    base: &MlpSpec,
    seeds: &[u64],
) -> Result<(Vec<MethodOutcome>, Vec<RunTiming>)> {
    if methods.is_empty() {
        return Err(Error::invalid("no methods to compare"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("no seeds"));
    }
    let jobs: Vec<(usize, u64)> = (0..methods.len())
        .flat_map(|m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<(MethodRun, f64)> = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let start = Instant::now();
            let run = score_run(bench.truth(), seed, run_method(bench.pair(), raw_pair, &methods[m], base, seed));
            (run, start.elapsed().as_secs_f64())
        })
        .collect();

    let mut outcomes = Vec::with_capacity(methods.len());
    let mut timings = Vec::with_capacity(jobs.len());
    for (m, method) in methods.iter().enumerate() {
        let runs: Vec<MethodRun> = jobs
            .iter()
            .zip(&results)
            .filter(|((jm, _), _)| *jm == m)
            .map(|((_, seed), (run, secs))| {
                timings.push(RunTiming {
                    method: method.label().to_string(),
                    seed: *seed,
                    seconds: *secs,
                });
                run.clone()
            })
            .collect();
        outcomes.push(MethodOutcome {
            name: method.label().to_string(),
            method: method.clone(),
            summary: summarize(&runs),
            runs,
        });
    }
    outcomes.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| {
        serde_json::to_string(&a.method).unwrap_or_default().cmp(&serde_json::to_string(&b.method).unwrap_or_default())
    }));
    timings.sort_by(|a, b| a.method.cmp(&b.method).then(a.seed.cmp(&b.seed)));
    Ok((outcomes, timings))
}

fn score_run(truth: &SealedTruth, seed: u64, output: Result<MethodOutput>) -> MethodRun {
    match output.and_then(|o| truth.score(&o.predictions).map(|e| (o, e))) {
        Ok((o, e)) => MethodRun {
            seed,
            rmse: Some(e),
            absolute_errors: truth.absolute_errors(&o.predictions),
            predictions: o.predictions,
            loss_trace: o.loss_trace,
            error: None,
        },
        Err(err) => MethodRun {
            seed,
            rmse: None,
            predictions: Vec::new(),
            absolute_errors: Vec::new(),
            loss_trace: Vec::new(),
            error: Some(err.to_string()),
        },
    }
}

/// RMSE of all labels assigned so far at each Re-ISDA iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub eta: usize,
    pub seed: u64,
    pub labeled_rmse: Vec<f64>,
    pub error: Option<String>,
}

impl SweepTrace {
    pub fn final_rmse(&self) -> Option<f64> {
        self.labeled_rmse.last().copied()
    }

    /// The maximum occurs strictly before the last step.
    pub fn rises_then_falls(&self) -> bool {
        let n = self.labeled_rmse.len();
        if n < 2 {
            return false;
        }
        let argmax = self
            .labeled_rmse
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > self.labeled_rmse[best] { i } else { best });
        argmax < n - 1
    }
}

pub fn eta_sweep(bench: &Benchmark, etas: &[usize], base: &MlpSpec, seeds: &[u64]) -> Result<Vec<SweepTrace>> {
    if etas.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("eta sweep needs at least one eta and one seed"));
    }
    let p = bench.pair().target_len();
    if let Some(&bad) = etas.iter().find(|&&e| e == 0 || e > p) {
        return Err(Error::invalid(format!("eta = {bad} is outside 1..={p}")));
    }
    let jobs: Vec<(usize, u64)> = etas
        .iter()
        .flat_map(|&e| seeds.iter().map(move |&s| (e, s)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(eta, seed)| {
            let cfg = AdaptationConfig::re_isda(eta, base.clone().with_seed(seed));
            let traced = run_re_isda(bench.pair(), &cfg).and_then(|run| {
                run.states
                    .iter()
                    .map(|s| bench.truth().score_prefix(&s.pseudo_labels))
                    .collect::<Result<Vec<f64>>>()
            });
            match traced {
                Ok(labeled_rmse) => SweepTrace {
                    eta,
                    seed,
                    labeled_rmse,
                    error: None,
                },
                Err(e) => SweepTrace {
                    eta,
                    seed,
                    labeled_rmse: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

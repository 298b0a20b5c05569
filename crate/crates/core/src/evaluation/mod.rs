//! Scoring against held-out target labels, the method comparison harness,
//! the η sweep and report files.

mod compare;
mod report;
mod svg;

pub use compare::{
    eta_sweep, run_comparison, run_method, Method, MethodOutcome, MethodOutput, MethodRun,
    MethodSummary, RunTiming, SweepTrace,
};
pub use report::{
    emit_report, read_report, table_rows, write_timings, RunReport, REPORT_SCHEMA_VERSION,
    TABLE_HEADER, TRACES_HEADER,
};

use crate::adaptation::DomainPair;
use crate::error::{Error, Result};

/// Target labels withheld from every adaptation method; only scoring reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct SealedTruth(Vec<f64>);

impl SealedTruth {
    pub fn new(labels: Vec<f64>) -> Self {
        Self(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn score(&self, predictions: &[f64]) -> Result<f64> {
        rmse(predictions, &self.0)
    }

    /// RMSE over the first `predictions.len()` targets.
    pub fn score_prefix(&self, predictions: &[f64]) -> Result<f64> {
        if predictions.len() > self.0.len() {
            return Err(Error::invalid("more predictions than sealed labels"));
        }
        rmse(predictions, &self.0[..predictions.len()])
    }

    pub fn absolute_errors(&self, predictions: &[f64]) -> Vec<f64> {
        predictions.iter().zip(&self.0).map(|(p, t)| (p - t).abs()).collect()
    }

    /// Exposes the labels for writing benchmark bundles to disk.
    pub fn export(&self) -> Vec<f64> {
        self.0.clone()
    }
}

/// An adaptation problem plus the withheld target labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pair: DomainPair,
    truth: SealedTruth,
    /// `target_order[k]` is the pre-ordering index of target `k`.
    target_order: Vec<usize>,
    original_targets: crate::numerics::Matrix,
}

impl Benchmark {
    pub fn new(pair: DomainPair, truth: SealedTruth, target_order: Vec<usize>) -> Result<Self> {
        if truth.len() != pair.target_len() || target_order.len() != pair.target_len() {
            return Err(Error::invalid(format!(
                "{} targets but {} sealed labels and {} order entries",
                pair.target_len(),
                truth.len(),
                target_order.len()
            )));
        }
        let mut original = crate::numerics::Matrix::zeros(pair.target_len(), pair.dim());
        for (k, &i) in target_order.iter().enumerate() {
            original.row_mut(i).copy_from_slice(pair.target_inputs().row(k));
        }
        Ok(Self {
            pair,
            truth,
            target_order,
            original_targets: original,
        })
    }

    pub fn pair(&self) -> &DomainPair {
        &self.pair
    }

    pub fn truth(&self) -> &SealedTruth {
        &self.truth
    }

    pub fn target_order(&self) -> &[usize] {
        &self.target_order
    }

    /// Target input by its index before ordering.
    pub fn original_target(&self, i: usize) -> Option<Vec<f64>> {
        (i < self.original_targets.rows()).then(|| self.original_targets.row(i).to_vec())
    }

    pub fn with_truth(&self, truth: SealedTruth) -> Result<Self> {
        Self::new(self.pair.clone(), truth, self.target_order.clone())
    }
}

/// `√(Σ(ŷᵢ − yᵢ)²/n)`.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("rmse of an empty vector"));
    }
    let sse: f64 = predicted.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_identities() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[3.0], &[0.0]).unwrap(), 3.0);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Feature matrix with an optional label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Matrix,
    labels: Option<Vec<f64>>,
}

/// One labeled point, e.g. the calibration sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub input: Vec<f64>,
    pub label: f64,
}

impl LabeledSample {
    pub fn new(input: Vec<f64>, label: f64) -> Self {
        Self { input, label }
    }
}

impl Dataset {
    pub fn labeled(inputs: Matrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != inputs.rows() {
            return Err(Error::invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                inputs.rows()
            )));
        }
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("non-finite label"));
        }
        Ok(Self {
            inputs,
            labels: Some(labels),
        })
    }

    pub fn unlabeled(inputs: Matrix) -> Self {
        Self {
            inputs,
            labels: None,
        }
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Labels, or an error naming `what` when the set is unlabeled.
    pub fn require_labels(&self, what: &str) -> Result<&[f64]> {
        self.labels()
            .ok_or_else(|| Error::invalid(format!("{what} must be labeled")))
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn sample(&self, i: usize) -> Option<LabeledSample> {
        let y = self.labels.as_ref()?.get(i)?;
        Some(LabeledSample::new(self.inputs.row(i).to_vec(), *y))
    }

    /// Appends one labeled row. Fails on an unlabeled set or a dimension mismatch.
    pub fn push(&mut self, input: &[f64], label: f64) -> Result<()> {
        let labels = self
            .labels
            .as_mut()
            .ok_or_else(|| Error::invalid("cannot push a labeled row onto an unlabeled set"))?;
        self.inputs.push_row(input)?;
        labels.push(label);
        Ok(())
    }

    /// Concatenation of two labeled sets.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let a = self.require_labels("left operand")?;
        let b = other.require_labels("right operand")?;
        let inputs = self.inputs.vstack(&other.inputs)?;
        Dataset::labeled(inputs, a.iter().chain(b).copied().collect())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select_rows(idx),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn with_inputs(&self, inputs: Matrix) -> Result<Dataset> {
        match &self.labels {
            Some(l) => Dataset::labeled(inputs, l.clone()),
            None => Ok(Dataset::unlabeled(inputs)),
        }
    }
}

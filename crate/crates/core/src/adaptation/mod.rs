//! Domain adaptation methods for regression: the unadapted baseline, kernel
//! mean matching, transfer component analysis, and iterative self-labeling with
//! and without label renewal.

mod kmm;
mod oracle;
mod self_labeling;
mod selection;
mod tca;

pub use kmm::{kmm_weights, run_kmm, weighted_mmd2, KmmConfig};
pub use oracle::{dp_exhaustive_oracle, trajectory_loss, ActionSpace, OracleResult};
pub use self_labeling::{
    loss_trace, run_isda, run_re_isda, self_label, AdaptationConfig, IterationState,
    SelfLabelingRun,
};
pub use selection::select_source_model;
pub use tca::{run_tca, tca_fit, tca_transform, TcaConfig, TcaModel};

use crate::dataset::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, MlpSpec, Predictor};
use crate::numerics::Matrix;

/// One adaptation problem: labeled source, ordered unlabeled targets, and a
/// single labeled calibration sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPair {
    source: Dataset,
    target_inputs: Matrix,
    calibration: LabeledSample,
}

impl DomainPair {
    pub fn new(source: Dataset, target_inputs: Matrix, calibration: LabeledSample) -> Result<Self> {
        source.require_labels("source domain")?;
        if source.is_empty() {
            return Err(Error::invalid("source domain is empty"));
        }
        if target_inputs.rows() == 0 {
            return Err(Error::invalid("target domain is empty"));
        }
        let d = source.dim();
        if target_inputs.cols() != d || calibration.input.len() != d {
            return Err(Error::invalid(format!(
                "feature dimensions disagree: source {d}, target {}, calibration {}",
                target_inputs.cols(),
                calibration.input.len()
            )));
        }
        if !calibration.label.is_finite() || calibration.input.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("calibration sample must be finite"));
        }
        Ok(Self {
            source,
            target_inputs,
            calibration,
        })
    }

    pub fn source(&self) -> &Dataset {
        &self.source
    }

    pub fn target_inputs(&self) -> &Matrix {
        &self.target_inputs
    }

    pub fn calibration(&self) -> &LabeledSample {
        &self.calibration
    }

    pub fn source_len(&self) -> usize {
        self.source.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_inputs.rows()
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// `S₀`: source samples followed by the calibration point.
    pub fn initial_pool(&self) -> Dataset {
        let mut pool = self.source.clone();
        pool.push(&self.calibration.input, self.calibration.label)
            .expect("dimensions validated at construction");
        pool
    }

    /// The same problem with targets permuted by `order` (`order[k]` is the
    /// original index placed at position `k`).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.target_len()];
        if order.len() != seen.len() || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::invalid("target order is not a permutation"));
        }
        Ok(Self {
            source: self.source.clone(),
            target_inputs: self.target_inputs.select_rows(order),
            calibration: self.calibration.clone(),
        })
    }

    /// The same problem with every feature matrix replaced.
    pub fn with_features(
        &self,
        source_inputs: Matrix,
        target_inputs: Matrix,
        calibration_input: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            self.source.with_inputs(source_inputs)?,
            target_inputs,
            LabeledSample::new(calibration_input, self.calibration.label),
        )
    }
}

/// Trains once on source ∪ calibration and predicts every target.
pub fn run_baseline(pair: &DomainPair, base: &MlpSpec) -> Result<Vec<f64>> {
    let spec = base.clone().with_input_dim(pair.dim());
    let model = spec.fit(&pair.initial_pool(), None, None)?;
    model.predict(pair.target_inputs())
}

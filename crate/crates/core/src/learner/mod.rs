//! Base learners used by every adaptation method.

mod mlp;
mod ridge;

pub use mlp::{gradient_check, Activation, Layer, MlpModel, MlpSpec, Network};
pub use ridge::{RidgeLearner, RidgeModel};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::numerics::Matrix;

/// A trained regressor.
pub trait Predictor {
    fn input_dim(&self) -> usize;

    fn predict(&self, inputs: &Matrix) -> Result<Vec<f64>>;

    fn predict_one(&self, input: &[f64]) -> Result<f64> {
        let m = Matrix::new(1, input.len(), input.to_vec())?;
        Ok(self.predict(&m)?[0])
    }
}

/// A deterministic training procedure `T(S)`.
pub trait BaseLearner: Sync {
    type Model: Predictor + Clone + Send;

    /// Trains on `data`. `warm_start`, when given, replaces the seeded
    /// initialization with the parameters of an earlier model.
    fn fit(
        &self,
        data: &Dataset,
        sample_weights: Option<&[f64]>,
        warm_start: Option<&Self::Model>,
    ) -> Result<Self::Model>;
}

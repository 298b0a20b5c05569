use super::{BaseLearner, Predictor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, dot, solve_lower, solve_lower_transpose, Matrix};

/// Closed-form ridge regression with an unpenalized intercept.
///
/// With `quantize_to` set, every prediction is snapped to the nearest grid value
/// (lower value on ties), which keeps self-labeling inside a finite label set.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeLearner {
    pub penalty: f64,
    pub quantize_to: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    quantize_to: Option<Vec<f64>>,
}

impl RidgeLearner {
    pub fn new(penalty: f64) -> Self {
        Self {
            penalty,
            quantize_to: None,
        }
    }

    pub fn quantized(penalty: f64, grid: Vec<f64>) -> Self {
        Self {
            penalty,
            quantize_to: Some(grid),
        }
    }
}

impl BaseLearner for RidgeLearner {
    type Model = RidgeModel;

    fn fit(
        &self,
        data: &Dataset,
        sample_weights: Option<&[f64]>,
        _warm_start: Option<&RidgeModel>,
    ) -> Result<RidgeModel> {
        if data.is_empty() {
            return Err(Error::invalid("cannot fit ridge on an empty dataset"));
        }
        if !(self.penalty > 0.0) {
            return Err(Error::invalid("ridge penalty must be positive"));
        }
        let y = data.require_labels("ridge training data")?;
        let d = data.dim();
        let w = |i: usize| sample_weights.map_or(1.0, |w| w[i]);
        // normal equations on [x, 1]
        let mut gram = Matrix::zeros(d + 1, d + 1);
        let mut rhs = Matrix::zeros(d + 1, 1);
        for (i, x) in data.inputs().row_iter().enumerate() {
            let wi = w(i);
            let feat: Vec<f64> = x.iter().copied().chain(std::iter::once(1.0)).collect();
            for a in 0..=d {
                rhs[(a, 0)] += wi * feat[a] * y[i];
                for b in 0..=d {
                    gram[(a, b)] += wi * feat[a] * feat[b];
                }
            }
        }
        for a in 0..d {
            gram[(a, a)] += self.penalty;
        }
        // tiny intercept jitter keeps the system definite for degenerate pools
        gram[(d, d)] += 1e-12;
        let l = cholesky(&gram)?;
        let beta = solve_lower_transpose(&l, &solve_lower(&l, &rhs)?)?;
        let coef = beta.column(0);
        Ok(RidgeModel {
            coefficients: coef[..d].to_vec(),
            intercept: coef[d],
            quantize_to: self.quantize_to.clone(),
        })
    }
}

impl Predictor for RidgeModel {
    fn input_dim(&self) -> usize {
        self.coefficients.len()
    }

    fn predict(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        if inputs.cols() != self.coefficients.len() {
            return Err(Error::invalid(format!(
                "ridge model expects {} columns, got {}",
                self.coefficients.len(),
                inputs.cols()
            )));
        }
        Ok(inputs
            .row_iter()
            .map(|x| {
                let raw = dot(x, &self.coefficients) + self.intercept;
                match &self.quantize_to {
                    Some(grid) => snap(raw, grid),
                    None => raw,
                }
            })
            .collect())
    }
}

fn snap(v: f64, grid: &[f64]) -> f64 {
    grid.iter()
        .copied()
        .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()).then(a.total_cmp(b)))
        .unwrap_or(v)
}

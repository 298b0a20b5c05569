use serde::{Deserialize, Serialize};

use super::DomainPair;
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, MlpSpec, Predictor};
use crate::numerics::{gaussian_gram, solve_qp, Matrix, QpProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmmConfig {
    /// Gaussian kernel bandwidth σ in `exp(−‖a−b‖²/(2σ²))`.
    pub bandwidth: f64,
    #[serde(default = "default_box")]
    pub box_upper: f64,
    /// Mean-weight slack ε; `None` selects `(√q − 1)/√q`.
    #[serde(default)]
    pub slack: Option<f64>,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_iters")]
    pub max_iter: usize,
}

fn default_box() -> f64 {
    1000.0
}
fn default_tol() -> f64 {
    1e-6
}
fn default_iters() -> usize {
    50_000
}

impl KmmConfig {
    pub fn new(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            box_upper: default_box(),
            slack: None,
            tolerance: default_tol(),
            max_iter: default_iters(),
        }
    }

    pub fn slack_for(&self, q: usize) -> f64 {
        self.slack.unwrap_or_else(|| {
            let r = (q as f64).sqrt();
            (r - 1.0) / r
        })
    }
}

/// Kernel mean matching weights for the source rows.
///
/// Minimizes `½βᵀKβ − κᵀβ` with `K` the source Gram matrix and
/// `κᵢ = (q/p) Σⱼ k(xᵢ, tⱼ)`, i.e. the squared RKHS distance between the
/// weighted source mean embedding and the target mean embedding up to a
/// constant, under `0 ≤ β ≤ B` and `|Σβ/q − 1| ≤ ε`.
pub fn kmm_weights(source_inputs: &Matrix, target_inputs: &Matrix, cfg: &KmmConfig) -> Result<Vec<f64>> {
    if source_inputs.cols() != target_inputs.cols() {
        return Err(Error::invalid(format!(
            "source has {} columns, target {}",
            source_inputs.cols(),
            target_inputs.cols()
        )));
    }
    if !(cfg.bandwidth > 0.0) {
        return Err(Error::invalid("KMM bandwidth must be positive"));
    }
    let (q, p) = (source_inputs.rows(), target_inputs.rows());
    if q == 0 || p == 0 {
        return Err(Error::invalid("KMM needs non-empty source and target sets"));
    }
    let mut gram = gaussian_gram(source_inputs, source_inputs, cfg.bandwidth);
    gram.symmetrize();
    let cross = gaussian_gram(source_inputs, target_inputs, cfg.bandwidth);
    let ratio = q as f64 / p as f64;
    let kappa: Vec<f64> = cross
        .row_iter()
        .map(|r| ratio * r.iter().sum::<f64>())
        .collect();
    let problem = QpProblem::new(gram, kappa, cfg.box_upper, cfg.slack_for(q));
    Ok(solve_qp(&problem, cfg.tolerance, cfg.max_iter)?.weights)
}

/// Squared empirical MMD between `β`-weighted source rows (normalized to a
/// probability vector) and uniformly weighted target rows.
pub fn weighted_mmd2(source: &Matrix, weights: &[f64], target: &Matrix, bandwidth: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let a: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let p = target.rows() as f64;
    let kss = gaussian_gram(source, source, bandwidth);
    let kst = gaussian_gram(source, target, bandwidth);
    let ktt = gaussian_gram(target, target, bandwidth);
    let mut ss = 0.0;
    let mut st = 0.0;
    for i in 0..source.rows() {
        for j in 0..source.rows() {
            ss += a[i] * a[j] * kss[(i, j)];
        }
        st += a[i] * kst.row(i).iter().sum::<f64>() / p;
    }
    let tt = ktt.as_slice().iter().sum::<f64>() / (p * p);
    ss - 2.0 * st + tt
}

/// Trains the base network on KMM-weighted source samples plus the calibration
/// point at unit weight, then predicts the targets.
pub fn run_kmm(pair: &DomainPair, base: &MlpSpec, cfg: &KmmConfig) -> Result<Vec<f64>> {
    let mut weights = kmm_weights(pair.source().inputs(), pair.target_inputs(), cfg)?;
    weights.push(1.0);
    let spec = base.clone().with_input_dim(pair.dim());
    let model = spec.fit(&pair.initial_pool(), Some(&weights), None)?;
    model.predict(pair.target_inputs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn points(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_sets_give_uniform_weights() {
        let x = Matrix::from_fn(20, 3, |i, j| ((i * 7 + j * 11) % 13) as f64 / 13.0);
        let w = kmm_weights(&x, &x, &KmmConfig::new(0.5)).unwrap();
        assert!(w.iter().all(|v| (v - 1.0).abs() < 1e-2), "{w:?}");
        let uniform = vec![1.0; 20];
        assert!(weighted_mmd2(&x, &w, &x, 0.5) <= weighted_mmd2(&x, &uniform, &x, 0.5) + 1e-15);
    }

    #[test]
    fn single_source_point_gets_unit_weight() {
        let x = points(&[[0.3, 0.7]]);
        let w = kmm_weights(&x, &x, &KmmConfig::new(0.5)).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_target_cluster_is_downweighted() {
        let source = points(&[
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 5.1],
        ]);
        let target = points(&[[0.05, 0.05], [0.02, 0.08], [0.08, 0.02]]);
        let cfg = KmmConfig::new(0.5);
        let w = kmm_weights(&source, &target, &cfg).unwrap();
        let mean_a = (w[0] + w[1] + w[2]) / 3.0;
        assert!(w[3..].iter().all(|&b| b < 0.1 * mean_a), "{w:?}");

        // random feasible points never beat the solver
        let q = 6;
        let mut gram = gaussian_gram(&source, &source, 0.5);
        gram.symmetrize();
        let cross = gaussian_gram(&source, &target, 0.5);
        let kappa: Vec<f64> = cross.row_iter().map(|r| 2.0 * r.iter().sum::<f64>()).collect();
        let problem = QpProblem::new(gram, kappa, cfg.box_upper, cfg.slack_for(q));
        let best = problem.objective(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let v: Vec<f64> = (0..q).map(|_| rng.random_range(0.0..3.0)).collect();
            let f = problem.project(&v);
            assert!(problem.objective(&f) >= best - 1e-9);
        }
    }

    #[test]
    fn rejects_mismatched_dims() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(kmm_weights(&a, &b, &KmmConfig::new(1.0)).is_err());
        assert!(kmm_weights(&a, &a, &KmmConfig::new(0.0)).is_err());
    }
}

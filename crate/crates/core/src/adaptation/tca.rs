use serde::{Deserialize, Serialize};

use super::DomainPair;
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, MlpSpec, Predictor};
use crate::numerics::{
    cholesky, gaussian_gram, median_pairwise_distance, solve_lower, solve_lower_transpose,
    symmetric_eig, Matrix,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcaConfig {
    /// Gaussian bandwidth; `None` uses the median pairwise distance of the pooled inputs.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    pub latent_dim: usize,
    #[serde(default = "default_mu")]
    pub regularizer: f64,
}

fn default_mu() -> f64 {
    1.0
}

impl TcaConfig {
    pub fn new(latent_dim: usize) -> Self {
        Self {
            bandwidth: None,
            latent_dim,
            regularizer: default_mu(),
        }
    }
}

/// Fitted transfer components: `z(x) = k(x, pool)·W`.
#[derive(Debug, Clone)]
pub struct TcaModel {
    pool: Matrix,
    projection: Matrix,
    bandwidth: f64,
    /// Generalized eigenvalues of the retained components, descending.
    pub eigenvalues: Vec<f64>,
    /// Pooled Gram matrix, source rows first.
    pub gram: Matrix,
}

impl TcaModel {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    /// Embeds arbitrary inputs through the pooled kernel.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        gaussian_gram(x, &self.pool, self.bandwidth).matmul(&self.projection)
    }
}

/// Leading solutions of `KHK·w = λ(KLK + μI)·w` on the pooled Gram matrix.
///
/// `L` holds `1/q²` on source pairs, `1/p²` on target pairs and `−1/(qp)`
/// across; `H = I − 11ᵀ/n`. The generalized problem is reduced to a symmetric
/// one with the Cholesky factor of `KLK + μI`.
pub fn tca_fit(source_inputs: &Matrix, target_inputs: &Matrix, cfg: &TcaConfig) -> Result<TcaModel> {
    if source_inputs.cols() != target_inputs.cols() {
        return Err(Error::invalid("source and target dimensions differ"));
    }
    let (q, p) = (source_inputs.rows(), target_inputs.rows());
    let n = q + p;
    if q == 0 || p == 0 {
        return Err(Error::invalid("TCA needs non-empty source and target sets"));
    }
    if cfg.latent_dim == 0 || cfg.latent_dim > n {
        return Err(Error::invalid(format!(
            "latent dimension must be in 1..={n}, got {}",
            cfg.latent_dim
        )));
    }
    if !(cfg.regularizer > 0.0) {
        return Err(Error::invalid("TCA regularizer must be positive"));
    }
    let pool = source_inputs.vstack(target_inputs)?;
    let bandwidth = match cfg.bandwidth {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(Error::invalid(format!("TCA bandwidth must be positive, got {s}"))),
        None => median_pairwise_distance(&pool)
            .filter(|&d| d > 0.0)
            .unwrap_or(1.0),
    };
    let mut k = gaussian_gram(&pool, &pool, bandwidth);
    k.symmetrize();

    let mmd = mmd_coefficients(q, p);
    let centering = Matrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - 1.0 / n as f64);

    let mut a = k.matmul(&mmd)?.matmul(&k)?;
    a.symmetrize();
    for i in 0..n {
        a[(i, i)] += cfg.regularizer;
    }
    let mut b = k.matmul(&centering)?.matmul(&k)?;
    b.symmetrize();

    let r = cholesky(&a)?;
    let half = solve_lower(&r, &b)?;
    let mut c = solve_lower(&r, &half.transpose())?;
    c.symmetrize();
    let eig = symmetric_eig(&c)?;
    let z = eig.vectors.leading_columns(cfg.latent_dim);
    let projection = solve_lower_transpose(&r, &z)?;

    Ok(TcaModel {
        pool,
        projection,
        bandwidth,
        eigenvalues: eig.values[..cfg.latent_dim].to_vec(),
        gram: k,
    })
}

/// Transfer components of source and target rows, shapes `q×m` and `p×m`.
pub fn tca_transform(
    source_inputs: &Matrix,
    target_inputs: &Matrix,
    cfg: &TcaConfig,
) -> Result<(Matrix, Matrix)> {
    let model = tca_fit(source_inputs, target_inputs, cfg)?;
    let embedded = model.gram.matmul(&model.projection)?;
    let q = source_inputs.rows();
    let src: Vec<usize> = (0..q).collect();
    let tgt: Vec<usize> = (q..embedded.rows()).collect();
    Ok((embedded.select_rows(&src), embedded.select_rows(&tgt)))
}

pub(crate) fn mmd_coefficients(q: usize, p: usize) -> Matrix {
    let (qf, pf) = (q as f64, p as f64);
    Matrix::from_fn(q + p, q + p, |i, j| match (i < q, j < q) {
        (true, true) => 1.0 / (qf * qf),
        (false, false) => 1.0 / (pf * pf),
        _ => -1.0 / (qf * pf),
    })
}

/// Trains the base network in the transfer-component space. The calibration
/// point is embedded through the fitted kernel map.
pub fn run_tca(pair: &DomainPair, base: &MlpSpec, cfg: &TcaConfig) -> Result<Vec<f64>> {
    let model = tca_fit(pair.source().inputs(), pair.target_inputs(), cfg)?;
    let embedded = model.gram.matmul(model.projection())?;
    let q = pair.source_len();
    let src: Vec<usize> = (0..q).collect();
    let tgt: Vec<usize> = (q..embedded.rows()).collect();
    let cal = Matrix::new(1, pair.dim(), pair.calibration().input.clone())?;
    let cal_z = model.transform(&cal)?;
    let latent = pair.with_features(
        embedded.select_rows(&src),
        embedded.select_rows(&tgt),
        cal_z.row(0).to_vec(),
    )?;
    let spec = base.clone().with_input_dim(cfg.latent_dim);
    let net = spec.fit(&latent.initial_pool(), None, None)?;
    net.predict(latent.target_inputs())
}

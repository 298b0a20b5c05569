use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BaseLearner, Predictor};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn default_true() -> bool {
    true
}

/// Configuration of a fully connected regression network.
///
/// Hidden layers use `activation`; the output layer is linear. Training is
/// plain full-batch gradient descent on (weighted) mean squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub seed: u64,
    /// Z-score inputs and labels on the training pool before fitting; predictions
    /// are mapped back to label units.
    #[serde(default = "default_true")]
    pub standardize: bool,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, learning_rate: f64, epochs: usize) -> Self {
        Self {
            layer_sizes,
            learning_rate,
            epochs,
            activation: Activation::Tanh,
            seed: 0,
            standardize: true,
        }
    }

    /// `c(5,10,5,1)`, learning rate 0.1, 300 epochs.
    pub fn friedman_default() -> Self {
        Self::new(vec![5, 10, 5, 1], 0.1, 300)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same spec with the first layer resized to `dim`.
    pub fn with_input_dim(mut self, dim: usize) -> Self {
        if let Some(first) = self.layer_sizes.first_mut() {
            *first = dim;
        }
        self
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes.first().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::invalid("a network needs at least an input and an output layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(Error::invalid("the output layer must have size 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Glorot-uniform weights `U(±√(6/(fan_in+fan_out)))`, zero biases, drawn
    /// layer by layer in row-major order from ChaCha8 seeded with `seed`.
    pub fn initialize(&self) -> Result<Network> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let layers = self
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..limit));
                Layer {
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Network {
            activation: self.activation,
            layers,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_out × fan_in`, row-major.
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// Raw network parameters, without any data scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

/// Per-sample scratch space for forward and backward passes.
struct Workspace {
    /// Pre-activations per layer.
    z: Vec<Vec<f64>>,
    /// Activations; `a[0]` is the input.
    a: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Network {
    pub fn from_layers(activation: Activation, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network has no layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.biases.len() != l.weights.rows() {
                return Err(Error::invalid(format!("layer {i}: bias length mismatch")));
            }
            if i > 0 && layers[i - 1].weights.rows() != l.weights.cols() {
                return Err(Error::invalid(format!("layer {i}: input size mismatch")));
            }
        }
        if layers.last().unwrap().weights.rows() != 1 {
            return Err(Error::invalid("output layer must have one unit"));
        }
        Ok(Self { activation, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.weights.rows()))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.biases.len())
            .sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(l.weights.as_slice());
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.parameter_count());
        let mut k = 0;
        for l in &mut self.layers {
            let n = l.weights.rows() * l.weights.cols();
            let w = Matrix::new(l.weights.rows(), l.weights.cols(), p[k..k + n].to_vec())
                .expect("finite parameters");
            l.weights = w;
            k += n;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
    }

    fn workspace(&self) -> Workspace {
        let sizes = self.layer_sizes();
        Workspace {
            z: sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
            a: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            delta: sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    fn forward_into(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        ws.a[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = ws.a.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut rest[0];
            for j in 0..layer.weights.rows() {
                let z = layer.biases[j]
                    + layer
                        .weights
                        .row(j)
                        .iter()
                        .zip(input.iter())
                        .map(|(w, a)| w * a)
                        .sum::<f64>();
                ws.z[l][j] = z;
                out[j] = if l == last { z } else { self.activation.apply(z) };
            }
        }
        ws.a[last + 1][0]
    }

    /// Forward pass of a single input.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut ws = self.workspace();
        self.forward_into(x, &mut ws)
    }

    /// Mean squared error and its gradient with respect to [`Network::parameters`].
    ///
    /// With weights the loss is `Σ wᵢ (ŷᵢ − yᵢ)² / Σ wᵢ`.
    pub fn loss_and_gradient(
        &self,
        inputs: &Matrix,
        labels: &[f64],
        weights: Option<&[f64]>,
    ) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.parameter_count()];
        let loss = self.accumulate(inputs, labels, weights, Some(&mut grad));
        (loss, grad)
    }

    pub fn loss(&self, inputs: &Matrix, labels: &[f64], weights: Option<&[f64]>) -> f64 {
        self.accumulate(inputs, labels, weights, None)
    }

    fn accumulate(
        &self,
        inputs: &Matrix,
        labels: &[f64],
        weights: Option<&[f64]>,
        mut grad: Option<&mut [f64]>,
    ) -> f64 {
        let mut ws = self.workspace();
        let total_weight = weights.map_or(inputs.rows() as f64, |w| w.iter().sum());
        let mut loss = 0.0;
        let offsets = self.offsets();
        let last = self.layers.len() - 1;
        for (i, x) in inputs.row_iter().enumerate() {
            let wi = weights.map_or(1.0, |w| w[i]);
            let pred = self.forward_into(x, &mut ws);
            let r = pred - labels[i];
            loss += wi * r * r;
            let Some(g) = grad.as_deref_mut() else {
                continue;
            };
            if wi == 0.0 {
                continue;
            }
            ws.delta[last][0] = 2.0 * wi * r / total_weight;
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let (w_off, b_off) = offsets[l];
                let cols = layer.weights.cols();
                for j in 0..layer.weights.rows() {
                    let d = ws.delta[l][j];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut g[w_off + j * cols..w_off + (j + 1) * cols];
                    for (gw, a) in row.iter_mut().zip(&ws.a[l]) {
                        *gw += d * a;
                    }
                    g[b_off + j] += d;
                }
                if l > 0 {
                    let (lower, upper) = ws.delta.split_at_mut(l);
                    let down = &mut lower[l - 1];
                    let up = &upper[0];
                    for k in 0..cols {
                        let back: f64 = (0..layer.weights.rows())
                            .map(|j| layer.weights[(j, k)] * up[j])
                            .sum();
                        down[k] = back * self.activation.derivative(ws.z[l - 1][k], ws.a[l][k]);
                    }
                }
            }
        }
        loss / total_weight
    }

    /// Start offsets of each layer's weights and biases in the flat parameter vector.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut k = 0;
        self.layers
            .iter()
            .map(|l| {
                let w = k;
                k += l.weights.rows() * l.weights.cols();
                let b = k;
                k += l.biases.len();
                (w, b)
            })
            .collect()
    }
}

/// Affine maps to and from the standardized training space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub label_mean: f64,
    pub label_scale: f64,
}

impl Scaler {
    fn fit(data: &Matrix, labels: &[f64]) -> Self {
        let n = data.rows() as f64;
        let input_mean = data.column_means();
        let mut input_scale = vec![0.0; data.cols()];
        for r in data.row_iter() {
            for (j, v) in r.iter().enumerate() {
                input_scale[j] += (v - input_mean[j]).powi(2);
            }
        }
        for s in &mut input_scale {
            *s = guard_scale((*s / n).sqrt());
        }
        let label_mean = labels.iter().sum::<f64>() / n;
        let label_var = labels.iter().map(|y| (y - label_mean).powi(2)).sum::<f64>() / n;
        Self {
            input_mean,
            input_scale,
            label_mean,
            label_scale: guard_scale(label_var.sqrt()),
        }
    }

    fn inputs(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] - self.input_mean[j]) / self.input_scale[j]
        })
    }

    fn label(&self, y: f64) -> f64 {
        (y - self.label_mean) / self.label_scale
    }

    fn unlabel(&self, z: f64) -> f64 {
        z * self.label_scale + self.label_mean
    }
}

fn guard_scale(s: f64) -> f64 {
    if s > 1e-12 {
        s
    } else {
        1.0
    }
}

/// A trained network together with the scaling it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub spec: MlpSpec,
    pub network: Network,
    pub scaler: Option<Scaler>,
    /// Training-pool MSE after the last epoch, in label units.
    pub final_training_loss: f64,
}

impl MlpModel {
    /// Wraps raw parameters without any scaling.
    pub fn from_network(spec: MlpSpec, network: Network) -> Self {
        Self {
            spec,
            network,
            scaler: None,
            final_training_loss: f64::NAN,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing model".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing model".into(),
            source,
        })
    }
}

impl Predictor for MlpModel {
    fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    fn predict(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        if inputs.cols() != self.network.input_dim() {
            return Err(Error::invalid(format!(
                "model expects {} input columns, got {}",
                self.network.input_dim(),
                inputs.cols()
            )));
        }
        let mut ws = self.network.workspace();
        Ok(match &self.scaler {
            Some(s) => {
                let scaled = s.inputs(inputs);
                scaled
                    .row_iter()
                    .map(|x| s.unlabel(self.network.forward_into(x, &mut ws)))
                    .collect()
            }
            None => inputs
                .row_iter()
                .map(|x| self.network.forward_into(x, &mut ws))
                .collect(),
        })
    }
}

impl BaseLearner for MlpSpec {
    type Model = MlpModel;

    fn fit(
        &self,
        data: &Dataset,
        sample_weights: Option<&[f64]>,
        warm_start: Option<&MlpModel>,
    ) -> Result<MlpModel> {
        train_mlp(self, data, sample_weights, warm_start)
    }
}

impl MlpSpec {
    pub fn train(&self, data: &Dataset, sample_weights: Option<&[f64]>) -> Result<MlpModel> {
        train_mlp(self, data, sample_weights, None)
    }
}

fn train_mlp(
    spec: &MlpSpec,
    data: &Dataset,
    sample_weights: Option<&[f64]>,
    warm_start: Option<&MlpModel>,
) -> Result<MlpModel> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let labels = data.require_labels("training data")?;
    if spec.input_dim() != data.dim() {
        return Err(Error::invalid(format!(
            "network input layer has size {}, data has {} columns",
            spec.input_dim(),
            data.dim()
        )));
    }
    let weights = match sample_weights {
        Some(w) => {
            if w.len() != data.len() {
                return Err(Error::invalid(format!(
                    "{} sample weights for {} samples",
                    w.len(),
                    data.len()
                )));
            }
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid("sample weights must be finite and non-negative"));
            }
            if !(w.iter().sum::<f64>() > 0.0) {
                return Err(Error::invalid("sample weights sum to zero"));
            }
            // all-equal weights reduce to the unweighted objective; take that path for exact equality
            if w.iter().all(|v| *v == w[0]) {
                None
            } else {
                Some(w)
            }
        }
        None => None,
    };

    let mut network = match warm_start {
        Some(m) if m.network.layer_sizes() == spec.layer_sizes => m.network.clone(),
        _ => spec.initialize()?,
    };

    let scaler = spec.standardize.then(|| Scaler::fit(data.inputs(), labels));
    let (inputs, targets): (Matrix, Vec<f64>) = match &scaler {
        Some(s) => (
            s.inputs(data.inputs()),
            labels.iter().map(|&y| s.label(y)).collect(),
        ),
        None => (data.inputs().clone(), labels.to_vec()),
    };

    let mut params = network.parameters();
    for epoch in 0..spec.epochs {
        let (loss, grad) = network.loss_and_gradient(&inputs, &targets, weights);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= spec.learning_rate * g;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: f64::INFINITY,
            });
        }
        network.set_parameters(&params);
    }
    let mut final_loss = network.loss(&inputs, &targets, weights);
    if !final_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: spec.epochs,
            loss: final_loss,
        });
    }
    if let Some(s) = &scaler {
        final_loss *= s.label_scale * s.label_scale;
    }
    Ok(MlpModel {
        spec: spec.clone(),
        network,
        scaler,
        final_training_loss: final_loss,
    })
}

/// Largest relative discrepancy between the backpropagated gradient of the
/// mean squared error and central finite differences, over all parameters of
/// the seeded initial network. Pairs where both values are below `1e-8` count as 0.
pub fn gradient_check(spec: &MlpSpec, data: &Dataset, fd_step: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("cannot check gradients on an empty dataset"));
    }
    if !(fd_step > 0.0 && fd_step <= 1e-3) {
        return Err(Error::invalid(format!("fd_step must lie in (0, 1e-3], got {fd_step}")));
    }
    let labels = data.require_labels("gradient-check data")?;
    let spec = spec.clone().with_input_dim(data.dim());
    let network = spec.initialize()?;
    let (_, analytic) = network.loss_and_gradient(data.inputs(), labels, None);
    let base = network.parameters();
    let mut probe = network.clone();
    let mut worst = 0.0f64;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + fd_step;
        probe.set_parameters(&p);
        let up = probe.loss(data.inputs(), labels, None);
        p[k] = base[k] - fd_step;
        probe.set_parameters(&p);
        let down = probe.loss(data.inputs(), labels, None);
        let numeric = (up - down) / (2.0 * fd_step);
        let scale = analytic[k].abs().max(numeric.abs());
        if scale < 1e-8 {
            continue;
        }
        worst = worst.max((analytic[k] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_net(w: f64, b: f64) -> Network {
        Network::from_layers(
            Activation::Tanh,
            vec![Layer {
                weights: Matrix::from_rows(&[[w]]).unwrap(),
                biases: vec![b],
            }],
        )
        .unwrap()
    }

    fn grid(n: usize) -> Matrix {
        Matrix::from_fn(n, 1, |i, _| i as f64 / (n - 1) as f64)
    }

    #[test]
    fn affine_output_layer() {
        let spec = MlpSpec::new(vec![1, 1], 0.1, 0);
        let model = MlpModel::from_network(spec, linear_net(2.0, 1.0));
        assert_eq!(model.predict_one(&[3.0]).unwrap(), 7.0);
    }

    #[test]
    fn zero_network_predicts_zero() {
        let spec = MlpSpec::new(vec![3, 4, 1], 0.1, 0);
        let mut net = spec.initialize().unwrap();
        let zeros = vec![0.0; net.parameter_count()];
        net.set_parameters(&zeros);
        let model = MlpModel::from_network(spec, net);
        let x = Matrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        assert!(model.predict(&x).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let spec = MlpSpec::new(vec![2, 1], 0.1, 0);
        let model = MlpModel::from_network(spec.clone(), spec.initialize().unwrap());
        assert!(model.predict(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn constant_target_is_learned() {
        let c = 7.5;
        let x = Matrix::from_fn(20, 2, |i, j| (i as f64 * 0.37 + j as f64).sin());
        let data = Dataset::labeled(x.clone(), vec![c; 20]).unwrap();
        for standardize in [true, false] {
            let mut spec = MlpSpec::new(vec![2, 6, 1], 0.05, 400).with_seed(3);
            spec.standardize = standardize;
            let model = spec.train(&data, None).unwrap();
            for p in model.predict(&x).unwrap() {
                assert!((p - c).abs() <= c.abs() * 0.01 + 0.01, "{p} (standardize {standardize})");
            }
        }
    }

    #[test]
    fn fits_linear_trend() {
        let x = grid(50);
        let y: Vec<f64> = (0..50).map(|i| 2.0 * x[(i, 0)]).collect();
        let data = Dataset::labeled(x.clone(), y.clone()).unwrap();
        let mut spec = MlpSpec::new(vec![1, 8, 1], 0.05, 2000).with_seed(1);
        spec.standardize = false;
        let model = spec.train(&data, None).unwrap();
        let p = model.predict(&x).unwrap();
        let rmse = (p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 50.0).sqrt();
        assert!(rmse < 0.05, "rmse {rmse}");
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let data = Dataset::labeled(grid(5), vec![1.0; 5]).unwrap();
        let spec = MlpSpec::new(vec![1, 3, 1], 0.1, 0).with_seed(9);
        let model = spec.train(&data, None).unwrap();
        assert_eq!(model.network, spec.initialize().unwrap());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let x = Matrix::from_fn(30, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let y: Vec<f64> = (0..30).map(|i| x.row(i).iter().sum::<f64>().sin()).collect();
        let data = Dataset::labeled(x, y).unwrap();
        let spec = MlpSpec::new(vec![3, 5, 1], 0.1, 50).with_seed(42);
        let a = spec.train(&data, None).unwrap();
        let b = spec.train(&data, None).unwrap();
        assert_eq!(a.network.parameters(), b.network.parameters());
    }

    #[test]
    fn uniform_weights_match_unweighted() {
        let x = Matrix::from_fn(12, 2, |i, j| (i + j) as f64 / 10.0);
        let y: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let data = Dataset::labeled(x, y).unwrap();
        let spec = MlpSpec::new(vec![2, 4, 1], 0.1, 30).with_seed(5);
        let plain = spec.train(&data, None).unwrap();
        let weighted = spec.train(&data, Some(&[2.5; 12])).unwrap();
        assert_eq!(plain, weighted);
    }

    #[test]
    fn rejects_bad_training_input() {
        let spec = MlpSpec::new(vec![1, 1], 0.1, 1);
        let empty = Dataset::labeled(Matrix::zeros(0, 1), vec![]).unwrap();
        assert!(matches!(spec.train(&empty, None), Err(Error::InvalidInput(_))));
        let data = Dataset::labeled(grid(3), vec![0.0; 3]).unwrap();
        assert!(spec.train(&data, Some(&[1.0, -1.0, 1.0])).is_err());
        assert!(spec.train(&data, Some(&[1.0])).is_err());
        let wide = MlpSpec::new(vec![2, 1], 0.1, 1);
        assert!(wide.train(&data, None).is_err());
    }

    #[test]
    fn divergence_names_the_epoch() {
        let x = Matrix::from_fn(10, 1, |i, _| i as f64 * 100.0);
        let y: Vec<f64> = (0..10).map(|i| i as f64 * 1e4).collect();
        let data = Dataset::labeled(x, y).unwrap();
        let mut spec = MlpSpec::new(vec![1, 1], 10.0, 500);
        spec.standardize = false;
        match spec.train(&data, None) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch < 500),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn small_step_loss_is_monotone() {
        let x = Matrix::from_fn(25, 2, |i, j| ((i * 13 + j * 5) % 17) as f64 / 17.0);
        let y: Vec<f64> = (0..25).map(|i| (3.0 * x[(i, 0)]).sin() + x[(i, 1)]).collect();
        let data = Dataset::labeled(x, y).unwrap();
        let mut previous = f64::INFINITY;
        for epochs in 0..40 {
            let spec = MlpSpec::new(vec![2, 5, 1], 1e-3, epochs).with_seed(11);
            let loss = spec.train(&data, None).unwrap().final_training_loss;
            assert!(loss <= previous, "epoch {epochs}: {loss} > {previous}");
            previous = loss;
        }
    }

    #[test]
    fn linear_gradient_matches_closed_form() {
        // ∇ of ‖Xw + b − y‖²/n is 2Xᵀr/n and 2Σr/n
        let x = Matrix::from_rows(&[[0.5], [1.5], [-1.0], [2.0]]).unwrap();
        let y = [1.0, 2.0, 0.0, -1.0];
        let net = linear_net(0.7, -0.2);
        let (_, g) = net.loss_and_gradient(&x, &y, None);
        let r: Vec<f64> = (0..4).map(|i| 0.7 * x[(i, 0)] - 0.2 - y[i]).collect();
        let gw = 2.0 * (0..4).map(|i| x[(i, 0)] * r[i]).sum::<f64>() / 4.0;
        let gb = 2.0 * r.iter().sum::<f64>() / 4.0;
        assert!((g[0] - gw).abs() < 1e-8 && (g[1] - gb).abs() < 1e-8);
    }

    #[test]
    fn gradient_check_small_net() {
        let x = Matrix::from_fn(5, 2, |i, j| ((i * 3 + j) as f64 * 0.61).sin());
        let y: Vec<f64> = (0..5).map(|i| (i as f64 * 0.3).cos()).collect();
        let data = Dataset::labeled(x, y).unwrap();
        let spec = MlpSpec::new(vec![2, 3, 1], 0.1, 0).with_seed(17);
        assert!(gradient_check(&spec, &data, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn gradient_check_perfect_fit_is_zero() {
        let spec = MlpSpec::new(vec![2, 3, 1], 0.1, 0).with_seed(4);
        let net = spec.initialize().unwrap();
        let x = Matrix::from_fn(6, 2, |i, j| (i as f64 - j as f64) * 0.2);
        let y: Vec<f64> = x.row_iter().map(|r| net.forward(r)).collect();
        let (_, g) = net.loss_and_gradient(&x, &y, None);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-10);
        let data = Dataset::labeled(x, y).unwrap();
        assert_eq!(gradient_check(&spec, &data, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let data = Dataset::labeled(grid(6), vec![0.0, 1.0, 0.5, 0.2, 0.9, 0.4]).unwrap();
        let model = MlpSpec::new(vec![1, 3, 1], 0.1, 5).with_seed(2).train(&data, None).unwrap();
        let back = MlpModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}

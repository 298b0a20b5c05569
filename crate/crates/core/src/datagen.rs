//! Synthetic benchmarks: the Friedman covariate-shift experiment and a
//! multi-subject motion-capture-like time series.

use serde::{Deserialize, Serialize};

use crate::adaptation::DomainPair;
use crate::dataset::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::evaluation::{Benchmark, SealedTruth};
use crate::numerics::{halton_point, Matrix};
use crate::preprocessing::{order_targets, TargetOrder};

/// `10 sin(π z₁z₂) + 20 (z₃ − ½)² + 10 z₄ + 5 z₅`.
pub fn friedman(z: &[f64]) -> Result<f64> {
    let [z1, z2, z3, z4, z5] = z else {
        return Err(Error::invalid(format!(
            "friedman takes 5 coordinates, got {}",
            z.len()
        )));
    };
    Ok(10.0 * (std::f64::consts::PI * z1 * z2).sin()
        + 20.0 * (z3 - 0.5) * (z3 - 0.5)
        + 10.0 * z4
        + 5.0 * z5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FriedmanBenchmarkSpec {
    pub n_source: usize,
    pub n_target: usize,
    pub domain_low: f64,
    pub domain_high: f64,
    /// Offset added to every coordinate of the target inputs.
    pub shift: f64,
    pub dims: usize,
}

impl Default for FriedmanBenchmarkSpec {
    fn default() -> Self {
        Self {
            n_source: 80,
            n_target: 41,
            domain_low: 0.2,
            domain_high: 1.2,
            shift: 0.2,
            dims: 5,
        }
    }
}

impl FriedmanBenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims != 5 {
            return Err(Error::invalid(format!(
                "the Friedman benchmark is 5-dimensional, got dims = {}",
                self.dims
            )));
        }
        if self.n_source == 0 || self.n_target == 0 || self.n_target > self.n_source {
            return Err(Error::invalid(format!(
                "need 1 ≤ n_target ≤ n_source, got {} and {}",
                self.n_target, self.n_source
            )));
        }
        if !(self.domain_low < self.domain_high) || !self.shift.is_finite() {
            return Err(Error::invalid("domain bounds must satisfy low < high"));
        }
        Ok(())
    }

    /// Halton point `i` (1-based) mapped affinely into `[low, high]^dims`.
    pub fn source_point(&self, i: usize) -> Result<Vec<f64>> {
        let width = self.domain_high - self.domain_low;
        Ok(halton_point(i as u64, self.dims)?
            .into_iter()
            .map(|u| self.domain_low + width * u)
            .collect())
    }
}

/// Source: the first `n_source` scaled Halton points with exact labels.
/// Targets: the first `n_target` source inputs shifted by `shift`, sorted by
/// distance to the calibration point `(x₁ + shift, f(x₁ + shift))`.
pub fn make_friedman_benchmark(spec: &FriedmanBenchmarkSpec) -> Result<Benchmark> {
    spec.validate()?;
    let mut source_rows = Vec::with_capacity(spec.n_source);
    for i in 1..=spec.n_source {
        source_rows.push(spec.source_point(i)?);
    }
    let labels = source_rows
        .iter()
        .map(|x| friedman(x))
        .collect::<Result<Vec<_>>>()?;
    let source = Dataset::labeled(Matrix::from_rows(&source_rows)?, labels)?;

    let target_rows: Vec<Vec<f64>> = source_rows[..spec.n_target]
        .iter()
        .map(|x| x.iter().map(|v| v + spec.shift).collect())
        .collect();
    let truth = target_rows
        .iter()
        .map(|x| friedman(x))
        .collect::<Result<Vec<_>>>()?;
    let calibration = LabeledSample::new(target_rows[0].clone(), truth[0]);

    let targets = Matrix::from_rows(&target_rows)?;
    let order = order_targets(&targets, &calibration.input, TargetOrder::ByDistance)?;
    let pair = DomainPair::new(source, targets, calibration)?.reordered(&order)?;
    let truth = order.iter().map(|&i| truth[i]).collect();
    Benchmark::new(pair, SealedTruth::new(truth), order)
}

/// Shape of the synthetic multi-subject time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSpec {
    pub subjects: usize,
    pub frames: usize,
    /// Raw per-frame feature columns, before frame differencing.
    pub channels: usize,
    pub seed: u64,
}

impl Default for MotionSpec {
    fn default() -> Self {
        Self {
            subjects: 6,
            frames: 40,
            channels: 31,
            seed: 2021,
        }
    }
}

/// One subject's recording: frame times, raw features, and the label per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSeries {
    pub time: Vec<f64>,
    pub features: Matrix,
    pub labels: Vec<f64>,
}

/// A shared latent flexion angle drives every subject; each subject sees it
/// through its own gain and offset on the feature channels (covariate shift),
/// while the label is the same smooth function of the latent motion and its
/// velocity for everyone.
pub fn make_motion_subjects(spec: &MotionSpec) -> Result<Vec<SubjectSeries>> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    if spec.subjects == 0 || spec.frames < 2 || spec.channels < 2 {
        return Err(Error::invalid("need ≥ 1 subject, ≥ 2 frames and ≥ 2 channels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // channel loadings shared by all subjects
    let loadings: Vec<(f64, f64, f64)> = (0..spec.channels)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let mut out = Vec::with_capacity(spec.subjects);
    for s in 0..spec.subjects {
        let amplitude = 0.8 + 0.4 * rng.random::<f64>() + 0.15 * s as f64;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let gain = 0.85 + 0.3 * rng.random::<f64>();
        let offset = 0.6 * (s as f64 - spec.subjects as f64 / 2.0) / spec.subjects as f64;
        let noise = 0.01;
        let mut rows = Vec::with_capacity(spec.frames);
        let mut labels = Vec::with_capacity(spec.frames);
        let mut time = Vec::with_capacity(spec.frames);
        for f in 0..spec.frames {
            let t = f as f64 / spec.frames as f64;
            let angle = amplitude * (std::f64::consts::TAU * t + phase).sin();
            let row: Vec<f64> = loadings
                .iter()
                .enumerate()
                .map(|(c, &(w1, w2, ph))| {
                    let base = w1 * angle + w2 * (angle + ph).sin();
                    let subject_shift = if c % 3 == 0 { offset } else { 0.0 };
                    gain * base + subject_shift + noise * (rng.random::<f64>() - 0.5)
                })
                .collect();
            labels.push(20.0 * angle + 5.0 * angle * angle);
            rows.push(row);
            time.push(f as f64);
        }
        out.push(SubjectSeries {
            time,
            features: Matrix::from_rows(&rows)?,
            labels,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friedman_values() {
        assert_eq!(friedman(&[0.0; 5]).unwrap(), 5.0);
        assert_eq!(friedman(&[1.0; 5]).unwrap(), 20.0);
        // 10 sin(π/4) + 0 + 5 + 2.5
        let h = friedman(&[0.5; 5]).unwrap();
        assert!((h - 14.5711).abs() < 1e-4, "{h}");
        assert!(friedman(&[0.0; 4]).is_err());
    }

    #[test]
    fn default_benchmark_shape() {
        let b = make_friedman_benchmark(&FriedmanBenchmarkSpec::default()).unwrap();
        let pair = b.pair();
        assert_eq!(pair.source_len(), 80);
        assert_eq!(pair.target_len(), 41);
        assert_eq!(pair.dim(), 5);
        // x₁ = 0.2 + (1/2, 1/3, 1/5, 1/7, 1/11) before the shift
        let x1 = [0.7, 0.2 + 1.0 / 3.0, 0.4, 0.2 + 1.0 / 7.0, 0.2 + 1.0 / 11.0];
        let first = b.original_target(0).unwrap();
        for (a, e) in first.iter().zip(x1) {
            assert!((a - (e + 0.2)).abs() < 1e-12);
        }
        assert_eq!(pair.calibration().input, first);
        assert_eq!(pair.calibration().label, friedman(&first).unwrap());
    }

    #[test]
    fn zero_shift_reuses_source_inputs() {
        let spec = FriedmanBenchmarkSpec {
            shift: 0.0,
            ..Default::default()
        };
        let b = make_friedman_benchmark(&spec).unwrap();
        for k in 0..41 {
            let orig = b.original_target(k).unwrap();
            assert_eq!(orig, b.pair().source().inputs().row(k));
        }
    }

    #[test]
    fn invariants() {
        let spec = FriedmanBenchmarkSpec::default();
        let b = make_friedman_benchmark(&spec).unwrap();
        for r in b.pair().source().inputs().row_iter() {
            assert!(r.iter().all(|&v| (0.2..=1.2).contains(&v)));
        }
        for (x, y) in b.pair().target_inputs().row_iter().zip(b.truth().export().iter()) {
            assert_eq!(friedman(x).unwrap(), *y);
        }
        assert_eq!(b, make_friedman_benchmark(&spec).unwrap());
        assert!(make_friedman_benchmark(&FriedmanBenchmarkSpec { dims: 4, ..spec.clone() }).is_err());
        assert!(make_friedman_benchmark(&FriedmanBenchmarkSpec { n_target: 81, ..spec }).is_err());
    }

    #[test]
    fn motion_subjects_shape() {
        let s = make_motion_subjects(&MotionSpec::default()).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s[0].features.cols(), 31);
        assert_eq!(s[0].features.rows(), 40);
        assert_eq!(s, make_motion_subjects(&MotionSpec::default()).unwrap());
    }
}

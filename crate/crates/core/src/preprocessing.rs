//! Feature pipeline: max-min scaling, PCA, frame differencing, target
//! ordering and calibration-point choice.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::numerics::{euclidean_distance, symmetric_eig, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn minmax_fit(data: &Matrix) -> Result<MinMaxParams> {
    if data.rows() == 0 {
        return Err(Error::invalid("cannot fit max-min scaling on an empty matrix"));
    }
    let mut min = data.row(0).to_vec();
    let mut max = min.clone();
    for r in data.row_iter().skip(1) {
        for (j, &v) in r.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(MinMaxParams { min, max })
}

impl MinMaxParams {
    /// `(x − min)/(max − min)` per column; constant columns map to 0.
    pub fn apply(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.min.len() {
            return Err(Error::invalid(format!(
                "scaler fitted on {} columns, got {}",
                self.min.len(),
                data.cols()
            )));
        }
        Ok(Matrix::from_fn(data.rows(), data.cols(), |i, j| {
            let range = self.max[j] - self.min[j];
            if range > 0.0 {
                (data[(i, j)] - self.min[j]) / range
            } else {
                0.0
            }
        }))
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply(&Matrix::new(1, row.len(), row.to_vec())?)?.into_vec())
    }
}

pub fn minmax_apply(params: &MinMaxParams, data: &Matrix) -> Result<Matrix> {
    params.apply(data)
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaRetention {
    Count(usize),
    /// Smallest count whose cumulative variance reaches this fraction.
    VarianceFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaParams {
    pub means: Vec<f64>,
    /// `cols × retained`, orthonormal columns in descending variance order.
    pub components: Matrix,
    /// Full covariance spectrum, descending.
    pub variances: Vec<f64>,
    pub retained: usize,
}

/// Principal axes of the sample covariance (divisor `rows − 1`).
pub fn pca_fit(data: &Matrix, retention: PcaRetention) -> Result<PcaParams> {
    let (n, d) = (data.rows(), data.cols());
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two rows"));
    }
    let means = data.column_means();
    let centered = Matrix::from_fn(n, d, |i, j| data[(i, j)] - means[j]);
    let mut cov = centered.transpose().matmul(&centered)?.scale(1.0 / (n - 1) as f64);
    cov.symmetrize();
    let eig = symmetric_eig(&cov)?;
    let variances: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let limit = (n - 1).min(d);
    let retained = match retention {
        PcaRetention::Count(k) => k,
        PcaRetention::VarianceFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("variance fraction must be in (0, 1], got {f}")));
            }
            let total: f64 = variances.iter().sum();
            let mut acc = 0.0;
            let mut k = 0;
            while k < limit {
                acc += variances[k];
                k += 1;
                if acc >= f * total {
                    break;
                }
            }
            k.max(1)
        }
    };
    if retained == 0 || retained > limit {
        return Err(Error::invalid(format!(
            "retained components must be in 1..={limit}, got {retained}"
        )));
    }
    Ok(PcaParams {
        means,
        components: eig.vectors.leading_columns(retained),
        variances,
        retained,
    })
}

impl PcaParams {
    /// Centers with the fitted means and projects onto the retained axes.
    pub fn apply(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.means.len() {
            return Err(Error::invalid(format!(
                "PCA fitted on {} columns, got {}",
                self.means.len(),
                data.cols()
            )));
        }
        let centered = Matrix::from_fn(data.rows(), data.cols(), |i, j| data[(i, j)] - self.means[j]);
        centered.matmul(&self.components)
    }

    /// Maps component scores back to the input space.
    pub fn inverse(&self, scores: &Matrix) -> Result<Matrix> {
        let back = scores.matmul(&self.components.transpose())?;
        Ok(Matrix::from_fn(back.rows(), back.cols(), |i, j| back[(i, j)] + self.means[j]))
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply(&Matrix::new(1, row.len(), row.to_vec())?)?.into_vec())
    }
}

pub fn pca_apply(params: &PcaParams, data: &Matrix) -> Result<Matrix> {
    params.apply(data)
}

/// Appends per-column velocities `row_t − row_{t−1}`; the first frame gets 0.
pub fn frame_difference(series: &Matrix) -> Matrix {
    let d = series.cols();
    Matrix::from_fn(series.rows(), 2 * d, |t, j| {
        if j < d {
            series[(t, j)]
        } else if t == 0 {
            0.0
        } else {
            series[(t, j - d)] - series[(t - 1, j - d)]
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetOrder {
    /// Ascending distance to the calibration input, ties by original index.
    #[default]
    ByDistance,
    /// Keep the given order (time series).
    KeepOrder,
}

/// Permutation of target rows; `order[k]` is the original index placed at position `k`.
pub fn order_targets(targets: &Matrix, calibration_input: &[f64], mode: TargetOrder) -> Result<Vec<usize>> {
    if targets.cols() != calibration_input.len() {
        return Err(Error::invalid(format!(
            "targets have {} columns, calibration input {}",
            targets.cols(),
            calibration_input.len()
        )));
    }
    let mut order: Vec<usize> = (0..targets.rows()).collect();
    if mode == TargetOrder::ByDistance {
        let dist: Vec<f64> = targets
            .row_iter()
            .map(|r| euclidean_distance(r, calibration_input))
            .collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    }
    Ok(order)
}

/// The provided sample if any; otherwise the source sample with the least mean
/// distance to the targets (lowest index on ties).
pub fn choose_calibration(
    source: &Dataset,
    targets: &Matrix,
    provided: Option<LabeledSample>,
) -> Result<LabeledSample> {
    if source.is_empty() {
        return Err(Error::invalid("source domain is empty"));
    }
    if let Some(sample) = provided {
        return Ok(sample);
    }
    if targets.rows() == 0 {
        return Err(Error::invalid(
            "choosing a calibration point from the source needs at least one target",
        ));
    }
    if targets.cols() != source.dim() {
        return Err(Error::invalid("source and target dimensions differ"));
    }
    let labels = source.require_labels("source domain")?;
    let mut best = (0, f64::INFINITY);
    for (i, x) in source.inputs().row_iter().enumerate() {
        let mean = targets.row_iter().map(|t| euclidean_distance(x, t)).sum::<f64>() / targets.rows() as f64;
        if mean < best.1 {
            best = (i, mean);
        }
    }
    Ok(LabeledSample::new(source.inputs().row(best.0).to_vec(), labels[best.0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_fn(v.len(), 1, |i, _| v[i])
    }

    #[test]
    fn minmax_examples() {
        let p = minmax_fit(&col(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(p.apply(&col(&[0.0, 5.0, 10.0])).unwrap().into_vec(), vec![0.0, 0.5, 1.0]);
        let c = minmax_fit(&col(&[4.0, 4.0, 4.0])).unwrap();
        assert_eq!(c.apply(&col(&[4.0, 4.0, 4.0])).unwrap().into_vec(), vec![0.0; 3]);
        let e = minmax_fit(&col(&[0.0, 10.0])).unwrap();
        assert_eq!(e.apply(&col(&[15.0])).unwrap().into_vec(), vec![1.5]);
        assert!(e.apply(&Matrix::zeros(1, 2)).is_err());
        assert!(minmax_fit(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn pca_on_a_line() {
        let x = Matrix::from_fn(6, 2, |i, _| i as f64 - 2.0);
        let p = pca_fit(&x, PcaRetention::Count(1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.components[(0, 0)] - h).abs() < 1e-10);
        assert!((p.components[(1, 0)] - h).abs() < 1e-10);
        let total: f64 = p.variances.iter().sum();
        assert!(p.variances[0] / total >= 1.0 - 1e-8);
    }

    #[test]
    fn pca_axis_aligned() {
        // var(±2) = 4 on x, var(±1) = 1 on y with divisor n − 1
        let x = Matrix::from_rows(&[[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let x = Matrix::from_fn(4, 2, |i, j| x[(i, j)] * (3.0f64 / 2.0).sqrt());
        let p = pca_fit(&x, PcaRetention::Count(2)).unwrap();
        assert!((p.variances[0] - 4.0).abs() < 1e-12 && (p.variances[1] - 1.0).abs() < 1e-12);
        assert_eq!(p.components, Matrix::identity(2));
    }

    #[test]
    fn pca_full_rank_round_trip() {
        let x = Matrix::from_fn(8, 3, |i, j| ((i * 5 + j * 7) % 9) as f64 + 0.1 * j as f64);
        let p = pca_fit(&x, PcaRetention::Count(3)).unwrap();
        let back = p.inverse(&p.apply(&x).unwrap()).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-8);
        assert!(pca_fit(&x, PcaRetention::Count(4)).is_err());
        assert!(pca_fit(&x, PcaRetention::Count(0)).is_err());
        assert!(pca_fit(&Matrix::zeros(1, 3), PcaRetention::Count(1)).is_err());
    }

    #[test]
    fn pca_variance_fraction() {
        let x = Matrix::from_fn(10, 3, |i, j| i as f64 * [10.0, 1.0, 0.01][j] + ((i * j) % 3) as f64 * 0.01);
        let p = pca_fit(&x, PcaRetention::VarianceFraction(0.9)).unwrap();
        assert_eq!(p.retained, 1);
    }

    #[test]
    fn frame_difference_examples() {
        let out = frame_difference(&col(&[1.0, 2.0, 4.0]));
        assert_eq!(out, Matrix::from_rows(&[[1.0, 0.0], [2.0, 1.0], [4.0, 2.0]]).unwrap());
        let c = frame_difference(&Matrix::from_rows(&[[3.0, 3.0], [3.0, 3.0]]).unwrap());
        assert_eq!(c.column(2), vec![0.0, 0.0]);
        let single = frame_difference(&Matrix::from_rows(&[[7.0, 8.0]]).unwrap());
        assert_eq!(single.into_vec(), vec![7.0, 8.0, 0.0, 0.0]);
    }

    #[test]
    fn ordering() {
        let t = col(&[3.0, 1.0, 2.0]);
        assert_eq!(order_targets(&t, &[0.0], TargetOrder::ByDistance).unwrap(), vec![1, 2, 0]);
        let eq = col(&[1.0, -1.0, 1.0]);
        assert_eq!(order_targets(&eq, &[0.0], TargetOrder::ByDistance).unwrap(), vec![0, 1, 2]);
        assert_eq!(order_targets(&t, &[0.0], TargetOrder::KeepOrder).unwrap(), vec![0, 1, 2]);
        assert!(order_targets(&t, &[0.0, 1.0], TargetOrder::KeepOrder).is_err());
    }

    #[test]
    fn calibration_choice() {
        let source = Dataset::labeled(col(&[0.0, 10.0]), vec![1.0, 2.0]).unwrap();
        let targets = col(&[1.0, 2.0]);
        let given = LabeledSample::new(vec![5.0], 9.0);
        assert_eq!(choose_calibration(&source, &targets, Some(given.clone())).unwrap(), given);
        assert_eq!(choose_calibration(&source, &targets, None).unwrap(), LabeledSample::new(vec![0.0], 1.0));
        let tie = Dataset::labeled(col(&[0.0, 2.0]), vec![1.0, 2.0]).unwrap();
        assert_eq!(choose_calibration(&tie, &col(&[1.0]), None).unwrap().label, 1.0);
        assert!(choose_calibration(&source, &Matrix::zeros(0, 1), None).is_err());
    }
}

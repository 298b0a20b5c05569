use crate::dataset::LabeledSample;
use crate::error::{Error, Result};
use crate::learner::Predictor;

/// Index of the model with the smallest calibration error `|fᵢ(x*) − y*|`,
/// lowest index on ties.
pub fn select_source_model<M: Predictor>(models: &[M], calibration: &LabeledSample) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::invalid("no candidate models"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, m) in models.iter().enumerate() {
        let err = (m.predict_one(&calibration.input)? - calibration.label).abs();
        if err < best.1 {
            best = (i, err);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    struct Constant(f64);

    impl Predictor for Constant {
        fn input_dim(&self) -> usize {
            1
        }
        fn predict(&self, inputs: &Matrix) -> Result<Vec<f64>> {
            Ok(vec![self.0; inputs.rows()])
        }
    }

    #[test]
    fn nearest_prediction_wins() {
        let cal = LabeledSample::new(vec![0.0], 1.2);
        assert_eq!(select_source_model(&[Constant(1.0), Constant(5.0)], &cal).unwrap(), 0);
        assert_eq!(select_source_model(&[Constant(5.0)], &cal).unwrap(), 0);
        let tie = LabeledSample::new(vec![0.0], 1.0);
        assert_eq!(select_source_model(&[Constant(1.5), Constant(0.5)], &tie).unwrap(), 0);
        assert!(select_source_model::<Constant>(&[], &cal).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::DomainPair;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, MlpSpec, Predictor};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationConfig {
    /// Targets pseudo-labeled per iteration.
    pub eta: usize,
    pub base: MlpSpec,
    /// Re-predict every previously added target at each iteration.
    pub renew: bool,
    /// Start each network from the previous iteration's parameters.
    #[serde(default)]
    pub warm_start: bool,
}

impl AdaptationConfig {
    pub fn isda(eta: usize, base: MlpSpec) -> Self {
        Self {
            eta,
            base,
            renew: false,
            warm_start: false,
        }
    }

    pub fn re_isda(eta: usize, base: MlpSpec) -> Self {
        Self {
            renew: true,
            ..Self::isda(eta, base)
        }
    }
}

/// Snapshot of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub step: usize,
    /// Pool the labeling model was trained on: source, calibration, and the
    /// targets added before this step with their then-current labels.
    pub labeled_pool: Dataset,
    /// Targets labeled for the first time at this step.
    pub pending_block: Matrix,
    /// Target indices covered by `pending_block`.
    pub block: std::ops::Range<usize>,
    /// Labels of all targets added so far, after this step's action.
    pub pseudo_labels: Vec<f64>,
    /// `|f(x_c) − y_c|` for the model trained on the pool after this step's labels are added.
    pub state_loss: f64,
    /// `|f*(x_c) − y_c|` for the model that produced this step's labels.
    pub labeling_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfLabelingRun {
    /// Final label for every target, in target order.
    pub predictions: Vec<f64>,
    pub states: Vec<IterationState>,
}

/// Number of iterations for `p` targets in blocks of `eta`; the last block may be short.
pub(crate) fn block_count(p: usize, eta: usize) -> usize {
    p.div_ceil(eta)
}

/// `S₀` followed by the first `labels.len()` targets with those labels.
pub(crate) fn build_pool(initial: &Dataset, targets: &Matrix, labels: &[f64]) -> Dataset {
    let mut pool = initial.clone();
    for (k, &y) in labels.iter().enumerate() {
        pool.push(targets.row(k), y).expect("dimensions validated");
    }
    pool
}

fn check_eta(pair: &DomainPair, eta: usize) -> Result<()> {
    if eta == 0 {
        return Err(Error::invalid("eta must be at least 1"));
    }
    if eta > pair.target_len() {
        return Err(Error::invalid(format!(
            "eta = {eta} exceeds the {} available targets",
            pair.target_len()
        )));
    }
    Ok(())
}

/// Iterative self-labeling over the already ordered targets of `pair`.
///
/// At step `n` a model trained on the current pool labels the next block of
/// `eta` targets. With `renew` the same model also relabels every target added
/// earlier; without it earlier labels stay fixed. The pool for the next step is
/// always rebuilt from `S₀` plus the current labels, so source samples and the
/// calibration point keep their original labels throughout.
pub fn self_label<L: BaseLearner>(
    learner: &L,
    pair: &DomainPair,
    eta: usize,
    renew: bool,
    warm_start: bool,
) -> Result<SelfLabelingRun> {
    check_eta(pair, eta)?;
    let p = pair.target_len();
    let targets = pair.target_inputs();
    let initial = pair.initial_pool();
    let cal = pair.calibration();

    let mut labels: Vec<f64> = Vec::with_capacity(p);
    let mut states = Vec::with_capacity(block_count(p, eta));
    let mut pool = initial.clone();
    let mut labeler = learner
        .fit(&pool, None, None)
        .map_err(|e| Error::at_step(0, e))?;

    for step in 0..block_count(p, eta) {
        let block = step * eta..((step + 1) * eta).min(p);
        let labeling_loss = (labeler.predict_one(&cal.input)? - cal.label).abs();
        if renew {
            let seen: Vec<usize> = (0..block.end).collect();
            labels = labeler.predict(&targets.select_rows(&seen))?;
        } else {
            let fresh: Vec<usize> = block.clone().collect();
            labels.extend(labeler.predict(&targets.select_rows(&fresh))?);
        }
        let next_pool = build_pool(&initial, targets, &labels);
        let warm = if warm_start { Some(&labeler) } else { None };
        let next = learner
            .fit(&next_pool, None, warm)
            .map_err(|e| Error::at_step(step, e))?;
        let state_loss = (next.predict_one(&cal.input)? - cal.label).abs();

        states.push(IterationState {
            step,
            labeled_pool: std::mem::replace(&mut pool, next_pool),
            pending_block: targets.select_rows(&block.clone().collect::<Vec<_>>()),
            block,
            pseudo_labels: labels.clone(),
            state_loss,
            labeling_loss,
        });
        labeler = next;
    }
    Ok(SelfLabelingRun {
        predictions: labels,
        states,
    })
}

/// ISDA with `k = 0`: labels are fixed once assigned.
pub fn run_isda(pair: &DomainPair, cfg: &AdaptationConfig) -> Result<SelfLabelingRun> {
    let spec = cfg.base.clone().with_input_dim(pair.dim());
    self_label(&spec, pair, cfg.eta, false, cfg.warm_start)
}

/// Re-ISDA: every iteration relabels all targets added so far.
pub fn run_re_isda(pair: &DomainPair, cfg: &AdaptationConfig) -> Result<SelfLabelingRun> {
    let spec = cfg.base.clone().with_input_dim(pair.dim());
    self_label(&spec, pair, cfg.eta, true, cfg.warm_start)
}

/// Per-step calibration losses `r_n`.
pub fn loss_trace(states: &[IterationState]) -> Vec<f64> {
    states.iter().map(|s| s.state_loss).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::run_baseline;
    use crate::dataset::LabeledSample;
    use crate::learner::{RidgeLearner, RidgeModel};

    fn toy_pair(p: usize) -> DomainPair {
        let xs = Matrix::from_fn(8, 2, |i, j| (i as f64 * 0.3 + j as f64 * 0.1).sin());
        let ys: Vec<f64> = xs.row_iter().map(|r| r[0] * 2.0 - r[1]).collect();
        let xt = Matrix::from_fn(p, 2, |i, j| 0.5 + (i as f64 * 0.7 + j as f64).cos() * 0.3);
        DomainPair::new(
            Dataset::labeled(xs, ys).unwrap(),
            xt,
            LabeledSample::new(vec![0.6, 0.4], 0.9),
        )
        .unwrap()
    }

    fn small_spec() -> MlpSpec {
        MlpSpec::new(vec![2, 4, 1], 0.1, 40).with_seed(3)
    }

    /// Memorizes every training pair exactly; unseen inputs get the pool mean.
    #[derive(Clone)]
    struct Lookup;
    #[derive(Clone)]
    struct LookupModel(Dataset);

    impl Predictor for LookupModel {
        fn input_dim(&self) -> usize {
            self.0.dim()
        }
        fn predict(&self, inputs: &Matrix) -> Result<Vec<f64>> {
            let y = self.0.labels().unwrap();
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            Ok(inputs
                .row_iter()
                .map(|x| {
                    self.0
                        .inputs()
                        .row_iter()
                        .position(|r| r == x)
                        .map_or(mean, |i| y[i])
                })
                .collect())
        }
    }

    impl BaseLearner for Lookup {
        type Model = LookupModel;
        fn fit(&self, d: &Dataset, _: Option<&[f64]>, _: Option<&LookupModel>) -> Result<LookupModel> {
            Ok(LookupModel(d.clone()))
        }
    }

    #[test]
    fn single_block_collapses_to_baseline() {
        let pair = toy_pair(3);
        let cfg = AdaptationConfig::isda(3, small_spec());
        let isda = run_isda(&pair, &cfg).unwrap();
        let base = run_baseline(&pair, &small_spec()).unwrap();
        assert_eq!(isda.predictions, base);
        let re = run_re_isda(&pair, &AdaptationConfig::re_isda(3, small_spec())).unwrap();
        assert_eq!(re.predictions, isda.predictions);
    }

    #[test]
    fn one_target_one_step() {
        let pair = toy_pair(1);
        let a = run_isda(&pair, &AdaptationConfig::isda(1, small_spec())).unwrap();
        let b = run_re_isda(&pair, &AdaptationConfig::re_isda(1, small_spec())).unwrap();
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(loss_trace(&a.states), loss_trace(&b.states));
    }

    #[test]
    fn trace_length_is_block_count() {
        let pair = toy_pair(41);
        let run = self_label(&Lookup, &pair, 2, true, false).unwrap();
        assert_eq!(loss_trace(&run.states).len(), 21);
        assert_eq!(run.states.last().unwrap().block, 40..41);
        assert_eq!(run.predictions.len(), 41);
    }

    #[test]
    fn perfect_learner_has_zero_state_loss() {
        let pair = toy_pair(5);
        for renew in [false, true] {
            let run = self_label(&Lookup, &pair, 2, renew, false).unwrap();
            assert!(loss_trace(&run.states).iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn pool_keeps_source_and_calibration() {
        let pair = toy_pair(7);
        let init = pair.initial_pool();
        for renew in [false, true] {
            let run = self_label(&RidgeLearner::new(0.1), &pair, 2, renew, false).unwrap();
            for s in &run.states {
                let pool = &s.labeled_pool;
                assert_eq!(pool.len(), init.len() + s.block.start);
                for i in 0..init.len() {
                    assert_eq!(pool.sample(i), init.sample(i));
                }
            }
        }
    }

    #[test]
    fn isda_labels_are_immutable() {
        let pair = toy_pair(9);
        let run = run_isda(&pair, &AdaptationConfig::isda(2, small_spec())).unwrap();
        for w in run.states.windows(2) {
            let (a, b) = (&w[0].pseudo_labels, &w[1].pseudo_labels);
            assert_eq!(&b[..a.len()], &a[..]);
        }
        assert_eq!(&run.predictions, &run.states.last().unwrap().pseudo_labels);
    }

    #[test]
    fn re_isda_relabels() {
        let pair = toy_pair(9);
        let run = self_label(&RidgeLearner::new(0.01), &pair, 2, true, false).unwrap();
        let changed = run
            .states
            .windows(2)
            .any(|w| w[1].pseudo_labels[..w[0].pseudo_labels.len()] != w[0].pseudo_labels[..]);
        assert!(changed);
        assert_eq!(&run.predictions, &run.states.last().unwrap().pseudo_labels);
    }

    #[test]
    fn deterministic_and_warm_start_runs() {
        let pair = toy_pair(6);
        let mut cfg = AdaptationConfig::re_isda(2, small_spec());
        let a = run_re_isda(&pair, &cfg).unwrap();
        let b = run_re_isda(&pair, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.warm_start = true;
        let w = run_re_isda(&pair, &cfg).unwrap();
        assert_eq!(w.predictions.len(), 6);
    }

    #[test]
    fn eta_bounds() {
        let pair = toy_pair(3);
        assert!(self_label(&Lookup, &pair, 0, true, false).is_err());
        assert!(self_label(&Lookup, &pair, 4, true, false).is_err());
    }

    #[test]
    fn training_errors_carry_the_step() {
        #[derive(Clone)]
        struct FailsLate;
        impl BaseLearner for FailsLate {
            type Model = RidgeModel;
            fn fit(&self, d: &Dataset, w: Option<&[f64]>, s: Option<&RidgeModel>) -> Result<RidgeModel> {
                if d.len() > 10 {
                    return Err(Error::invalid("pool too large"));
                }
                RidgeLearner::new(1.0).fit(d, w, s)
            }
        }
        let err = self_label(&FailsLate, &toy_pair(6), 1, false, false).unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 1, .. }), "{err}");
    }
}

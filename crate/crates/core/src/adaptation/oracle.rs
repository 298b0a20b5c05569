use super::self_labeling::{block_count, build_pool};
use super::DomainPair;
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, Predictor};

/// Which label sequences the exhaustive search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    /// One grid label per target, fixed once assigned (the ISDA policy class).
    FixedLabels,
    /// Every step may assign fresh grid labels to all targets added so far
    /// (the policy class that contains renewal).
    Renewing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Labels of the targets added by each step under the minimizing policy.
    pub best_labels: Vec<Vec<f64>>,
    pub min_total_loss: f64,
    /// Number of models trained during the search.
    pub fits: usize,
}

const BUDGET: f64 = 1e6;

/// Sum of state losses `Σₙ |fₙ(x_c) − y_c|` for a label trajectory, where
/// `fₙ` is trained on `S₀` plus the first `labels[n].len()` targets.
pub fn trajectory_loss<L: BaseLearner>(
    learner: &L,
    pair: &DomainPair,
    labels_per_step: &[Vec<f64>],
) -> Result<f64> {
    let initial = pair.initial_pool();
    let mut total = 0.0;
    for labels in labels_per_step {
        total += state_loss(learner, pair, &initial, labels)?;
    }
    Ok(total)
}

fn state_loss<L: BaseLearner>(
    learner: &L,
    pair: &DomainPair,
    initial: &crate::dataset::Dataset,
    labels: &[f64],
) -> Result<f64> {
    let pool = build_pool(initial, pair.target_inputs(), labels);
    let model = learner.fit(&pool, None, None)?;
    let cal = pair.calibration();
    Ok((model.predict_one(&cal.input)? - cal.label).abs())
}

/// Exact minimum of the summed state losses over every grid labeling.
///
/// Feasible only for tiny problems: `|grid|^p` may not exceed 10⁶.
pub fn dp_exhaustive_oracle<L: BaseLearner>(
    learner: &L,
    pair: &DomainPair,
    eta: usize,
    grid: &[f64],
    space: ActionSpace,
) -> Result<OracleResult> {
    let p = pair.target_len();
    if grid.is_empty() {
        return Err(Error::invalid("label grid is empty"));
    }
    if eta == 0 || eta > p {
        return Err(Error::invalid(format!("eta must be in 1..={p}")));
    }
    if (grid.len() as f64).powi(p as i32) > BUDGET {
        return Err(Error::invalid(format!(
            "{} labels over {p} targets exceeds the enumeration budget of {BUDGET:e}",
            grid.len()
        )));
    }
    let initial = pair.initial_pool();
    let ends: Vec<usize> = (0..block_count(p, eta))
        .map(|n| ((n + 1) * eta).min(p))
        .collect();
    let mut fits = 0;

    match space {
        ActionSpace::FixedLabels => {
            // depth-first over blocks; each prefix is trained once
            let mut best: Option<(f64, Vec<f64>)> = None;
            let mut prefix = Vec::with_capacity(p);
            search_prefix(
                learner,
                pair,
                &initial,
                grid,
                &ends,
                0,
                0.0,
                &mut prefix,
                &mut best,
                &mut fits,
            )?;
            let (min_total_loss, labels) = best.expect("grid is non-empty");
            Ok(OracleResult {
                best_labels: ends.iter().map(|&e| labels[..e].to_vec()).collect(),
                min_total_loss,
                fits,
            })
        }
        ActionSpace::Renewing => {
            // the state loss of step n depends only on that step's labels, so the
            // minimum separates across steps
            let mut best_labels = Vec::with_capacity(ends.len());
            let mut total = 0.0;
            for &end in &ends {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for labels in GridWords::new(grid, end) {
                    let r = state_loss(learner, pair, &initial, &labels)?;
                    fits += 1;
                    if best.as_ref().is_none_or(|(b, _)| r < *b) {
                        best = Some((r, labels));
                    }
                }
                let (r, labels) = best.expect("grid is non-empty");
                total += r;
                best_labels.push(labels);
            }
            Ok(OracleResult {
                best_labels,
                min_total_loss: total,
                fits,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn search_prefix<L: BaseLearner>(
    learner: &L,
    pair: &DomainPair,
    initial: &crate::dataset::Dataset,
    grid: &[f64],
    ends: &[usize],
    step: usize,
    acc: f64,
    prefix: &mut Vec<f64>,
    best: &mut Option<(f64, Vec<f64>)>,
    fits: &mut usize,
) -> Result<()> {
    if step == ends.len() {
        if best.as_ref().is_none_or(|(b, _)| acc < *b) {
            *best = Some((acc, prefix.clone()));
        }
        return Ok(());
    }
    let start = prefix.len();
    for block in GridWords::new(grid, ends[step] - start) {
        prefix.extend_from_slice(&block);
        let r = state_loss(learner, pair, initial, prefix)?;
        *fits += 1;
        search_prefix(learner, pair, initial, grid, ends, step + 1, acc + r, prefix, best, fits)?;
        prefix.truncate(start);
    }
    Ok(())
}

/// All words of length `len` over `grid`, lexicographic in grid order.
struct GridWords<'a> {
    grid: &'a [f64],
    digits: Vec<usize>,
    done: bool,
}

impl<'a> GridWords<'a> {
    fn new(grid: &'a [f64], len: usize) -> Self {
        Self {
            grid,
            digits: vec![0; len],
            done: false,
        }
    }
}

impl Iterator for GridWords<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let word = self.digits.iter().map(|&d| self.grid[d]).collect();
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if self.digits[k] < self.grid.len() {
                break;
            }
            self.digits[k] = 0;
        }
        Some(word)
    }
}

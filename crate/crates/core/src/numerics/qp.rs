use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

/// Box- and mean-constrained convex quadratic program
///
/// ```text
/// minimize    ½ βᵀQβ − cᵀβ
/// subject to  0 ≤ βᵢ ≤ B,   |Σβᵢ/n − t| ≤ ε
/// ```
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub quadratic: Matrix,
    pub linear: Vec<f64>,
    pub box_upper: f64,
    pub sum_slack: f64,
    pub sum_target: f64,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Projected-gradient residual `‖β − Π(β − ∇f(β))‖∞` at `weights`.
    pub residual: f64,
    pub iterations: usize,
}

impl QpProblem {
    pub fn new(quadratic: Matrix, linear: Vec<f64>, box_upper: f64, sum_slack: f64) -> Self {
        Self {
            quadratic,
            linear,
            box_upper,
            sum_slack,
            sum_target: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !self.quadratic.is_square() || self.quadratic.rows() != n {
            return Err(Error::invalid(format!(
                "quadratic term is {}x{}, linear term has length {n}",
                self.quadratic.rows(),
                self.quadratic.cols()
            )));
        }
        if n == 0 {
            return Err(Error::invalid("empty quadratic program"));
        }
        let asym = self.quadratic.asymmetry().unwrap_or(0.0);
        if asym > 1e-10 {
            return Err(Error::invalid(format!(
                "quadratic term is not symmetric (asymmetry {asym:e})"
            )));
        }
        if !(self.box_upper > 0.0) || !self.box_upper.is_finite() {
            return Err(Error::invalid(format!(
                "box upper bound must be positive, got {}",
                self.box_upper
            )));
        }
        if !(self.sum_slack >= 0.0) || !self.sum_target.is_finite() {
            return Err(Error::invalid("sum slack must be non-negative"));
        }
        if self.linear.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite linear term"));
        }
        let (lo, hi) = self.sum_bounds();
        if lo > n as f64 * self.box_upper || hi < 0.0 {
            return Err(Error::Infeasible(format!(
                "sum range [{lo}, {hi}] does not meet the box [0, {}]^{n}",
                self.box_upper
            )));
        }
        Ok(())
    }

    /// Admissible range of `Σβᵢ`.
    pub fn sum_bounds(&self) -> (f64, f64) {
        let n = self.dim() as f64;
        (
            n * (self.sum_target - self.sum_slack),
            n * (self.sum_target + self.sum_slack),
        )
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        let qb = self.quadratic.matvec(beta).expect("validated shape");
        0.5 * dot(beta, &qb) - dot(&self.linear, beta)
    }

    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let mut g = self.quadratic.matvec(beta).expect("validated shape");
        for (gi, ci) in g.iter_mut().zip(&self.linear) {
            *gi -= ci;
        }
        g
    }

    /// Euclidean projection onto the feasible set.
    ///
    /// The projection has the form `clip(v − λ, 0, B)`; the multiplier `λ` is found
    /// by bisection on the monotone map `λ ↦ Σ clip(vᵢ − λ, 0, B)`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let b = self.box_upper;
        let (lo, hi) = self.sum_bounds();
        let clipped_sum = |lambda: f64| v.iter().map(|x| (x - lambda).clamp(0.0, b)).sum::<f64>();
        let s0 = clipped_sum(0.0);
        let lambda = if s0 > hi {
            // λ > 0 lowers the sum; at λ = max(v) it is 0 ≤ hi
            let (mut l, mut u) = (0.0, v.iter().cloned().fold(f64::MIN, f64::max).max(0.0));
            for _ in 0..200 {
                let mid = 0.5 * (l + u);
                if mid <= l || mid >= u {
                    break;
                }
                if clipped_sum(mid) > hi {
                    l = mid;
                } else {
                    u = mid;
                }
            }
            u
        } else if s0 < lo {
            // λ < 0 raises the sum; at λ = min(v) − B it is nB ≥ lo
            let (mut l, mut u) = (v.iter().cloned().fold(f64::MAX, f64::min).min(0.0) - b, 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (l + u);
                if mid <= l || mid >= u {
                    break;
                }
                if clipped_sum(mid) < lo {
                    u = mid;
                } else {
                    l = mid;
                }
            }
            l
        } else {
            0.0
        };
        v.iter().map(|x| (x - lambda).clamp(0.0, b)).collect()
    }

    /// `‖β − Π(β − ∇f(β))‖∞`, zero exactly at a KKT point.
    pub fn kkt_residual(&self, beta: &[f64]) -> f64 {
        let g = self.gradient(beta);
        let trial: Vec<f64> = beta.iter().zip(&g).map(|(b, g)| b - g).collect();
        let p = self.project(&trial);
        beta.iter()
            .zip(&p)
            .fold(0.0f64, |m, (b, p)| m.max((b - p).abs()))
    }

    pub fn is_feasible(&self, beta: &[f64], tol: f64) -> bool {
        let (lo, hi) = self.sum_bounds();
        let s: f64 = beta.iter().sum();
        beta.iter().all(|&b| b >= -tol && b <= self.box_upper + tol)
            && s >= lo - tol * self.dim() as f64
            && s <= hi + tol * self.dim() as f64
    }
}

/// Accelerated projected gradient with backtracking step control and
/// function-value restarts.
pub fn solve_qp(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    problem.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = problem.dim();

    let mut x = problem.project(&vec![problem.sum_target.clamp(0.0, problem.box_upper); n]);
    let mut fx = problem.objective(&x);
    let mut residual = problem.kkt_residual(&x);
    let mut best = (x.clone(), fx, residual);
    if residual <= tol {
        return Ok(QpSolution {
            weights: x,
            objective: fx,
            residual,
            iterations: 0,
        });
    }

    let mut lipschitz = power_iteration_bound(&problem.quadratic).max(1e-12);
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut plain_step = true;

    for iter in 1..=max_iter {
        let fy = problem.objective(&y);
        let gy = problem.gradient(&y);
        let x_new = loop {
            let trial: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - gi / lipschitz).collect();
            let candidate = problem.project(&trial);
            let diff: Vec<f64> = candidate.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy + dot(&gy, &diff) + 0.5 * lipschitz * dot(&diff, &diff);
            let fc = problem.objective(&candidate);
            if fc <= model + 1e-12 * (1.0 + fy.abs()) || lipschitz > 1e300 {
                break candidate;
            }
            lipschitz *= 2.0;
        };
        let f_new = problem.objective(&x_new);

        if f_new > fx {
            if !plain_step {
                // restart the momentum from the last accepted point
                momentum = 1.0;
                y = x.clone();
                plain_step = true;
                continue;
            }
            if f_new > fx + 1e-12 * (1.0 + fx.abs()) {
                lipschitz *= 2.0;
                continue;
            }
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        y = problem.project(&y);
        plain_step = beta == 0.0;
        momentum = next_momentum;
        x = x_new;
        fx = f_new;
        lipschitz *= 0.95;

        residual = problem.kkt_residual(&x);
        if iter % 200 == 0 && residual > tol {
            if let Some((xp, fp, rp)) = polish(problem, &x, fx, residual) {
                x = xp;
                fx = fp;
                residual = rp;
                y = x.clone();
                momentum = 1.0;
                plain_step = true;
            }
        }
        if residual < best.2 {
            best = (x.clone(), fx, residual);
        }
        if residual <= tol {
            return Ok(QpSolution {
                weights: x,
                objective: fx,
                residual,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        what: "projected-gradient QP",
        iterations: max_iter,
        residual: best.2,
        best: Some(best.0),
    })
}

/// Newton step on the current active set: bounds at 0 or B stay fixed, the
/// free coordinates solve the stationarity equations, with the sum held at
/// its bound when that bound is active. Returns the improved point, if any.
fn polish(problem: &QpProblem, x: &[f64], fx: f64, residual: f64) -> Option<(Vec<f64>, f64, f64)> {
    let b = problem.box_upper;
    let n = x.len();
    let edge = 1e-9 * b.max(1.0);
    let free: Vec<usize> = (0..n).filter(|&i| x[i] > edge && x[i] < b - edge).collect();
    let (lo, hi) = problem.sum_bounds();
    let sum: f64 = x.iter().sum();
    let sum_edge = 1e-9 * hi.abs().max(1.0);
    let sum_target = if (sum - hi).abs() <= sum_edge {
        Some(hi)
    } else if (sum - lo).abs() <= sum_edge {
        Some(lo)
    } else {
        None
    };
    if free.is_empty() {
        return None;
    }
    let fixed: Vec<f64> = (0..n).map(|i| if free.contains(&i) { 0.0 } else { x[i] }).collect();
    let q_fixed = problem.quadratic.matvec(&fixed).ok()?;
    let m = free.len() + usize::from(sum_target.is_some());
    let mut a = Matrix::zeros(m, m);
    let mut rhs = vec![0.0; m];
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a[(r, c)] = problem.quadratic[(i, j)];
        }
        rhs[r] = problem.linear[i] - q_fixed[i];
        if sum_target.is_some() {
            a[(r, m - 1)] = 1.0;
            a[(m - 1, r)] = 1.0;
        }
    }
    if let Some(t) = sum_target {
        rhs[m - 1] = t - fixed.iter().sum::<f64>();
    }
    let solved = solve_dense(a, rhs)?;
    let mut candidate = fixed;
    for (r, &i) in free.iter().enumerate() {
        candidate[i] = solved[r];
    }
    let candidate = problem.project(&candidate);
    let fc = problem.objective(&candidate);
    let rc = problem.kkt_residual(&candidate);
    (rc < residual && fc <= fx + 1e-12 * (1.0 + fx.abs())).then_some((candidate, fc, rc))
}

/// Gaussian elimination with partial pivoting; `None` when numerically singular.
fn solve_dense(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.max_abs().max(1e-300);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))?;
        if a[(p, k)].abs() <= 1e-13 * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[(i, k)] / a[(k, k)];
            if f != 0.0 {
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[(k, j)] * x[j]).sum();
        x[k] = (b[k] - s) / a[(k, k)];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Upper estimate of the largest eigenvalue of a PSD matrix.
fn power_iteration_bound(q: &Matrix) -> f64 {
    let n = q.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..30 {
        let w = q.matvec(&v).expect("square");
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(q: Matrix, c: Vec<f64>, b: f64, eps: f64) -> QpProblem {
        QpProblem::new(q, c, b, eps)
    }

    #[test]
    fn unconstrained_optimum_inside_box() {
        let p = problem(Matrix::identity(3), vec![1.0; 3], 10.0, 10.0);
        let s = solve_qp(&p, 1e-10, 1000).unwrap();
        for w in &s.weights {
            assert!((w - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn box_binds() {
        // KKT: β = c − μ with μ ≥ 0 active at the upper bound → β = 0.5
        let p = problem(Matrix::identity(3), vec![1.0; 3], 0.5, 10.0);
        let s = solve_qp(&p, 1e-10, 1000).unwrap();
        for w in &s.weights {
            assert!((w - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar() {
        let p = problem(Matrix::from_diag(&[2.0]), vec![4.0], 10.0, 100.0);
        let s = solve_qp(&p, 1e-10, 1000).unwrap();
        assert!((s.weights[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sum_constraint_binds() {
        // optimum of ½|β|² − 3Σβ is 3 each; mean forced into [0.9, 1.1]
        let p = problem(Matrix::identity(4), vec![3.0; 4], 10.0, 0.1);
        let s = solve_qp(&p, 1e-10, 1000).unwrap();
        for w in &s.weights {
            assert!((w - 1.1).abs() < 1e-9, "{w}");
        }
    }

    #[test]
    fn infeasible_and_invalid() {
        let mut p = problem(Matrix::identity(2), vec![0.0; 2], 0.5, 0.1);
        assert!(matches!(p.validate(), Err(Error::Infeasible(_))));
        p.box_upper = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidInput(_))));
        let p = problem(Matrix::identity(2), vec![0.0; 3], 1.0, 0.1);
        assert!(matches!(solve_qp(&p, 1e-6, 10), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn budget_exhaustion_reports_best_iterate() {
        let q = Matrix::from_rows(&[[1.0, 0.999], [0.999, 1.0]]).unwrap();
        let p = problem(q, vec![1.0, -1.0], 100.0, 100.0);
        match solve_qp(&p, 1e-15, 2) {
            Err(Error::Convergence { best: Some(b), residual, .. }) => {
                assert_eq!(b.len(), 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn projection_is_feasible() {
        let p = problem(Matrix::identity(3), vec![0.0; 3], 2.0, 0.0);
        for v in [[5.0, 5.0, 5.0], [-3.0, 0.2, 9.0], [0.0, 0.0, 0.0]] {
            let x = p.project(&v);
            assert!(p.is_feasible(&x, 1e-12), "{x:?}");
        }
    }
}

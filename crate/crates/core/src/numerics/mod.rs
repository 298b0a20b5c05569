//! Dense linear algebra, a symmetric eigensolver, a constrained QP solver and
//! Halton sequences.

mod eigen;
mod halton;
mod matrix;
mod qp;

pub use eigen::{symmetric_eig, SymmetricEigen};
pub use halton::{halton, halton_point, PRIMES};
pub use matrix::{
    cholesky, dot, euclidean_distance, solve_lower, solve_lower_transpose, squared_distance,
    Matrix,
};
pub use qp::{solve_qp, QpProblem, QpSolution};

/// Gaussian kernel `exp(−‖a − b‖² / (2σ²))`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], bandwidth: f64) -> f64 {
    (-squared_distance(a, b) / (2.0 * bandwidth * bandwidth)).exp()
}

/// Kernel matrix between the rows of `a` and the rows of `b`.
pub fn gaussian_gram(a: &Matrix, b: &Matrix, bandwidth: f64) -> Matrix {
    Matrix::from_fn(a.rows(), b.rows(), |i, j| {
        gaussian_kernel(a.row(i), b.row(j), bandwidth)
    })
}

/// Median of the pairwise Euclidean distances between distinct rows.
pub fn median_pairwise_distance(x: &Matrix) -> Option<f64> {
    let n = x.rows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(euclidean_distance(x.row(i), x.row(j)));
        }
    }
    median(&mut d)
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

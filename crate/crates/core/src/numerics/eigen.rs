use super::matrix::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors stored as columns, aligned with `values`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V·diag(λ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Each rotation annihilates one off-diagonal pair; sweeps repeat until the
/// off-diagonal Frobenius mass falls to roundoff level relative to the input norm.
/// Eigenvector signs are fixed so the largest-magnitude coordinate is positive
/// (first such coordinate on ties).
pub fn symmetric_eig(a: &Matrix) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.max_abs().max(1.0);
    let asym = a.asymmetry().unwrap_or(0.0);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }

    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let norm = m.frobenius_norm();
    let tol = (n.max(1) as f64) * f64::EPSILON * norm;

    let mut converged = n <= 1;
    let mut off = off_diagonal_norm(&m);
    for _ in 0..MAX_SWEEPS {
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
        off = off_diagonal_norm(&m);
    }
    if !converged && off > tol {
        return Err(Error::Convergence {
            what: "jacobi eigensolver",
            iterations: MAX_SWEEPS,
            residual: off,
            best: None,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = m.diag();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_sign(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, k)] = x;
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    for k in 0..n {
        let (kp, kq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = c * kp - s * kq;
        m[(k, q)] = s * kp + c * kq;
    }
    for k in 0..n {
        let (pk, qk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = c * pk - s * qk;
        m[(q, k)] = s * pk + c * qk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let (kp, kq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * kp - s * kq;
        v[(k, q)] = s * kp + c * kq;
    }
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn fix_sign(col: &mut [f64]) {
    let largest = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if largest == 0.0 {
        return;
    }
    let pivot = col
        .iter()
        .position(|x| x.abs() >= largest * (1.0 - 1e-12))
        .unwrap_or(0);
    if col[pivot] < 0.0 {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_eigenpairs(a: &Matrix, e: &SymmetricEigen, tol: f64) {
        let n = a.rows();
        for k in 0..n {
            let v = e.vector(k);
            let av = a.matvec(&v).unwrap();
            for i in 0..n {
                assert!((av[i] - e.values[k] * v[i]).abs() < tol, "pair {k}");
            }
        }
        let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(vtv.sub(&Matrix::identity(n)).unwrap().max_abs() < tol);
    }

    #[test]
    fn identity_3x3() {
        let a = Matrix::identity(3);
        let e = symmetric_eig(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert_eigenpairs(&a, &e, 1e-12);
    }

    #[test]
    fn diagonal_gives_standard_basis() {
        let a = Matrix::from_diag(&[5.0, 2.0, 1.0]);
        let e = symmetric_eig(&a).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, 1.0]);
        assert_eq!(e.vectors, Matrix::identity(3));
    }

    #[test]
    fn two_by_two_by_hand() {
        // λ² - 4λ + 3 = 0 → λ ∈ {3, 1}; (1,1)/√2 and (1,-1)/√2.
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = symmetric_eig(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - h).abs() < 1e-12 && (v0[1] - h).abs() < 1e-12);
        // sign rule: tie in magnitude, so the first coordinate is positive
        assert!((v1[0] - h).abs() < 1e-12 && (v1[1] + h).abs() < 1e-12);
    }

    #[test]
    fn sign_rule_largest_coordinate_positive() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 3.0]]).unwrap();
        let e = symmetric_eig(&a).unwrap();
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        assert!(matches!(
            symmetric_eig(&Matrix::zeros(2, 3)),
            Err(Error::InvalidInput(_))
        ));
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eig(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn empty_and_scalar() {
        let e = symmetric_eig(&Matrix::zeros(0, 0)).unwrap();
        assert!(e.values.is_empty());
        let e = symmetric_eig(&Matrix::from_diag(&[-2.0])).unwrap();
        assert_eq!(e.values, vec![-2.0]);
    }
}

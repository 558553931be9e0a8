//! Small dense linear algebra on top of `nalgebra` storage.
//!
//! The symmetric eigensolver is a cyclic Jacobi iteration. It is slow for
//! large matrices but exact to near machine precision on the desk-scale
//! problems here (Laplacians and stacked gain matrices of order at most a
//! few hundred).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and matching eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a[(p, q)] * a[(p, q)];
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let scale = matrix.norm().max(1.0);
    for p in 0..n {
        for q in (p + 1)..n {
            if (matrix[(p, q)] - matrix[(q, p)]).abs() > 1e-10 * scale {
                return Err(Error::Numerical(format!("matrix is not symmetric at ({p}, {q})")));
            }
        }
    }

    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                // A <- J^T A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > JACOBI_TOL * scale {
        return Err(Error::Numerical("Jacobi iteration did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Lower-triangular factor `L` with `L Lᵀ = A` for a positive-semidefinite `A`.
///
/// Eigenvalues in `[-tol, 0]` are treated as exact zeros; a pivot that
/// collapses below `tol` zeroes its column.
pub fn psd_cholesky(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = symmetric_eigen(a)?;
    if eig.min() < -tol {
        return Err(Error::CholeskyFailure { min_eigenvalue: eig.min() });
    }
    let scale = eig.max().max(1.0);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol * scale {
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// `m ⊗ I_n`.
pub fn kron_identity(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    m.kronecker(&DMatrix::<f64>::identity(n, n))
}

/// Block-diagonal matrix from square blocks.
pub fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Solves `A P + P Aᵀ = Q` by vectorizing into an `n²×n²` system.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch("Lyapunov operands must be n x n".into()));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(A P) = (I ⊗ A) vec(P), vec(P Aᵀ) = (A ⊗ I) vec(P), column-major vec
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let lu = op.full_piv_lu();
    let u = lu.u();
    let diag_max = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
    let diag_min = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if n > 0 && (diag_max == 0.0 || diag_min <= 1e-13 * diag_max) {
        return Err(Error::SingularSystem(format!(
            "vectorized Lyapunov operator has pivot ratio {:e}",
            diag_min / diag_max
        )));
    }
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lu.solve(&rhs).ok_or_else(|| Error::SingularSystem("LU solve failed".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Build a dense matrix from row-major nested vectors.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Row-major nested vectors from a dense matrix.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let e = symmetric_eigen(&a).unwrap();
        assert_relative_eq!(e.values[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_random_matrix() {
        let b = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let a = &b + b.transpose();
        let e = symmetric_eigen(&a).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rebuilt = &e.vectors * d * e.vectors.transpose();
        assert!((rebuilt - &a).norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let reference = nalgebra::SymmetricEigen::new(a.clone());
        let mut ref_vals: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        ref_vals.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&ref_vals) {
            assert_relative_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigen(&a), Err(Error::Numerical(_))));
    }

    #[test]
    fn cholesky_handles_singular_psd() {
        // rank one: [1 1; 1 1]
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let l = psd_cholesky(&a, 1e-10).unwrap();
        assert!((&l * l.transpose() - &a).norm() < 1e-12);
        assert_eq!(l[(0, 1)], 0.0);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(psd_cholesky(&neg, 1e-10), Err(Error::CholeskyFailure { .. })));
    }

    #[test]
    fn lyapunov_scalar_case() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let q = DMatrix::from_element(1, 1, -4.0);
        let p = solve_lyapunov(&a, &q).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_singular_operator_is_reported() {
        // eigenvalues 1 and -1 make I⊗A + A⊗I singular
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let q = DMatrix::identity(2, 2);
        assert!(matches!(solve_lyapunov(&a, &q), Err(Error::SingularSystem(_))));
    }
}

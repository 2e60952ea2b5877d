//! Thin wrappers over the dense solvers.

use faer::Mat;

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix given by `entry(i, j)` (lower triangle read),
/// eigenvalues ascending, eigenvectors as columns.
pub(crate) fn symmetric_eigen(
    n: usize,
    entry: impl Fn(usize, usize) -> f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = Mat::<f64>::from_fn(n, n, entry);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::ConvergenceFailure {
            residual: f64::INFINITY,
        })?;
    let (s, u) = (eig.S(), eig.U());
    let values = (0..n).map(|j| s[j]).collect();
    let vectors = (0..n)
        .map(|j| (0..n).map(|i| u[(i, j)]).collect())
        .collect();
    Ok((values, vectors))
}

/// Thin SVD of the `rows x cols` matrix `entry`: `(U, singular values, V)`.
pub(crate) fn thin_svd(
    rows: usize,
    cols: usize,
    entry: impl Fn(usize, usize) -> f64,
) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let m = Mat::<f64>::from_fn(rows, cols, entry);
    let svd = m.thin_svd().map_err(|_| Error::ConvergenceFailure {
        residual: f64::INFINITY,
    })?;
    let s = svd.S();
    let values = (0..rows.min(cols)).map(|j| s[j]).collect();
    Ok((svd.U().to_owned(), values, svd.V().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_and_svd_of_rank_one() {
        let (vals, vecs) =
            symmetric_eigen(3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 }).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        assert!((vecs[0][1].abs() - 1.0).abs() < 1e-15);
        let (_, s, _) = thin_svd(4, 2, |i, j| (i + 1) as f64 * (j + 1) as f64).unwrap();
        assert!(s[1].abs() < 1e-12 * s[0]);
    }
}

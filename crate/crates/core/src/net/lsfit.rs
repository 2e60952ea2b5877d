//! Least-squares quadric fit over quadratic monomials.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::manifold::{n_coefficients, Quadric};

/// Design entry: `x_a^2` on the diagonal and `2 x_a x_b` (a < b) off it, so
/// coefficients are the entries of `Q` directly.
fn design(xs: &Array2<f64>, i: usize, c: usize) -> f64 {
    let (a, b) = pair_of(c, xs.ncols());
    let v = xs[[i, a]] * xs[[i, b]];
    if a == b {
        v
    } else {
        2.0 * v
    }
}

/// Row-major upper-triangular position `c` to `(row, col)`.
fn pair_of(mut c: usize, k: usize) -> (usize, usize) {
    for a in 0..k {
        let len = k - a;
        if c < len {
            return (a, a + c);
        }
        c -= len;
    }
    unreachable!("coefficient index out of range")
}

/// Fits `y = x^T Q x` with optional ridge penalty `ridge * |coeffs|^2`.
pub fn ls_quadric_fit(xs: &Array2<f64>, ys: &Array1<f64>, ridge: f64) -> Result<Quadric> {
    let (n, k) = xs.dim();
    if ys.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} values"),
            got: ys.len().to_string(),
        });
    }
    if k == 0 || n == 0 {
        return Err(Error::InvalidConfig(
            "quadric fit needs samples of positive dimension".into(),
        ));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "ridge must be nonnegative, got {ridge}"
        )));
    }
    let m = n_coefficients(k);
    let (u, sv, v) = thin_svd(n, m, |i, c| design(xs, i, c))?;
    let s_max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = s_max * (n.max(m) as f64) * f64::EPSILON * 16.0;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < m && ridge == 0.0 {
        return Err(Error::RankDeficient { rank, cols: m });
    }
    let mut beta = vec![0.0; m];
    for (j, &s) in sv.iter().enumerate() {
        if s <= 0.0 || (ridge == 0.0 && s <= tol) {
            continue;
        }
        let uty: f64 = (0..n).map(|i| u[(i, j)] * ys[i]).sum();
        let coef = s * uty / (s * s + ridge);
        for (c, b) in beta.iter_mut().enumerate() {
            *b += v[(c, j)] * coef;
        }
    }
    let mut q = Array2::zeros((k, k));
    for c in 0..m {
        let (i, j) = pair_of(c, k);
        q[[i, j]] = beta[c];
        q[[j, i]] = beta[c];
    }
    Ok(Quadric {
        q,
        intrinsic_dim: k,
    })
}

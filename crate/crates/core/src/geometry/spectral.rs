use std::io::{Read, Write};

use ndarray::{Array1, Array2, Axis};

use super::operator::DiffusionOperator;
use crate::error::{Error, Result};
use crate::io;
use crate::linalg::symmetric_eigen;

/// Largest operator handled by the dense symmetric solver.
pub const DENSE_LIMIT: usize = 2000;

const RESIDUAL_LIMIT: f64 = 1e-6;

/// Eigenpairs of a diffusion operator.
///
/// Column `j` of `eigenvectors` is the right eigenvector `phi_j`, normalized so
/// that `sum_i pi_i phi_j(i)^2 = 1`. With this normalization Euclidean
/// distances between rows of the full embedding equal diffusion distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMap {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    pub stationary: Array1<f64>,
    /// Diffusion time used when the map is embedded without an explicit time.
    pub t: u32,
}

impl DiffusionMap {
    pub fn n_points(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn with_time(mut self, t: u32) -> Self {
        self.t = t;
        self
    }

    /// `Phi diag(lambda) Phi^T diag(pi)`; equals `P` when all pairs are kept.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(Axis(0));
        let mut out = scaled.dot(&self.eigenvectors.t());
        for mut row in out.axis_iter_mut(Axis(0)) {
            row.zip_mut_with(&self.stationary, |v, &p| *v *= p);
        }
        out
    }

    /// Largest `||P phi_j - lambda_j phi_j||_2` over the stored pairs.
    pub fn max_residual(&self, op: &DiffusionOperator) -> f64 {
        let pphi = op.p().dot(&self.eigenvectors);
        (0..self.n_pairs())
            .map(|j| {
                let lam = self.eigenvalues[j];
                pphi.column(j)
                    .iter()
                    .zip(self.eigenvectors.column(j))
                    .map(|(a, b)| (a - lam * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `pi`-weighted residual `sqrt(sum_i pi_i r_i^2)`, which equals the
    /// residual of the conjugated symmetric problem and does not blow up on
    /// points with tiny stationary mass.
    pub fn max_weighted_residual(&self, op: &DiffusionOperator) -> f64 {
        let pphi = op.p().dot(&self.eigenvectors);
        (0..self.n_pairs())
            .map(|j| {
                let lam = self.eigenvalues[j];
                pphi.column(j)
                    .iter()
                    .zip(self.eigenvectors.column(j))
                    .zip(self.stationary.iter())
                    .map(|((a, b), p)| p * (a - lam * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// "DCMP" container: magic, u32 N, u32 m, u32 t, m eigenvalues, N stationary
    /// weights, then the N*m eigenvector matrix row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        io::write_magic(&mut w, io::MAGIC_MAP)?;
        io::write_u32(&mut w, self.n_points())?;
        io::write_u32(&mut w, self.n_pairs())?;
        io::write_u32(&mut w, self.t as usize)?;
        io::write_f64s(&mut w, self.eigenvalues.iter().copied())?;
        io::write_f64s(&mut w, self.stationary.iter().copied())?;
        io::write_f64s(&mut w, self.eigenvectors.iter().copied())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        io::expect_magic(&mut r, io::MAGIC_MAP)?;
        let n = io::read_u32(&mut r)? as usize;
        let m = io::read_u32(&mut r)? as usize;
        let t = io::read_u32(&mut r)?;
        let eigenvalues = Array1::from(io::read_f64s(&mut r, m)?);
        let stationary = Array1::from(io::read_f64s(&mut r, n)?);
        let eigenvectors = Array2::from_shape_vec((n, m), io::read_f64s(&mut r, n * m)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self {
            eigenvalues,
            eigenvectors,
            stationary,
            t,
        })
    }
}

/// Turns orthonormal eigenvectors of the conjugated matrix into right
/// eigenvectors of `P`, sorted by descending eigenvalue (ties by original index)
/// with deterministic signs.
fn assemble(
    op: &DiffusionOperator,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    keep: usize,
) -> Result<DiffusionMap> {
    let n = op.len();
    let pi = op.stationary();
    let inv_sqrt_pi = pi.mapv(|p| 1.0 / p.sqrt());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(keep);

    let mut eigenvalues = Array1::zeros(order.len());
    let mut eigenvectors = Array2::zeros((n, order.len()));
    for (col, &src) in order.iter().enumerate() {
        eigenvalues[col] = values[src];
        let mut phi: Vec<f64> = vectors[src]
            .iter()
            .zip(inv_sqrt_pi.iter())
            .map(|(v, s)| v * s)
            .collect();
        let flip = if col == 0 {
            phi.iter().sum::<f64>() < 0.0
        } else {
            // largest-magnitude entry positive, first index on ties
            let mut best = 0;
            for (i, v) in phi.iter().enumerate() {
                if v.abs() > phi[best].abs() {
                    best = i;
                }
            }
            phi[best] < 0.0
        };
        if flip {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        eigenvectors.column_mut(col).assign(&Array1::from(phi));
    }
    let map = DiffusionMap {
        eigenvalues,
        eigenvectors,
        stationary: pi,
        t: 1,
    };
    let residual = map.max_weighted_residual(op);
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(Error::ConvergenceFailure { residual });
    }
    Ok(map)
}

fn dense_decompose(op: &DiffusionOperator, keep: usize) -> Result<DiffusionMap> {
    let s = op.conjugated();
    let (values, vectors) = symmetric_eigen(op.len(), |i, j| 0.5 * (s[[i, j]] + s[[j, i]]))?;
    assemble(op, values, vectors, keep)
}

/// Full eigendecomposition via the degree-conjugated symmetric matrix.
pub fn spectral_decompose(op: &DiffusionOperator) -> Result<DiffusionMap> {
    if op.len() > DENSE_LIMIT {
        return spectral_decompose_top(op, op.len());
    }
    dense_decompose(op, op.len())
}

/// The `m` largest eigenpairs. Dense up to [`DENSE_LIMIT`] points, Lanczos
/// with full reorthogonalization above.
pub fn spectral_decompose_top(op: &DiffusionOperator, m: usize) -> Result<DiffusionMap> {
    let m = m.clamp(1, op.len());
    if op.len() <= DENSE_LIMIT {
        dense_decompose(op, m)
    } else {
        lanczos_top(op, m)
    }
}

pub(crate) fn lanczos_top(op: &DiffusionOperator, m: usize) -> Result<DiffusionMap> {
    let n = op.len();
    let s = op.conjugated();
    let s = (&s + &s.t()) * 0.5;
    let mut krylov = (2 * m + 20).min(n);
    loop {
        let (values, vectors, residual) = lanczos_run(&s, krylov, m);
        if residual <= 1e-10 || krylov == n {
            if residual > RESIDUAL_LIMIT {
                return Err(Error::ConvergenceFailure { residual });
            }
            return assemble(op, values, vectors, m);
        }
        krylov = (krylov * 2).min(n);
    }
}

/// One Lanczos pass of `steps` iterations from a fixed start vector. Returns the
/// top `m` Ritz pairs and the largest Ritz residual among them.
fn lanczos_run(s: &Array2<f64>, steps: usize, m: usize) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let n = s.nrows();
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    // deterministic, non-degenerate start vector
    let mut q = Array1::from_shape_fn(n, |i| 1.0 + ((i * 7919) % 104729) as f64 / 104729.0);
    q /= q.dot(&q).sqrt();
    for k in 0..steps {
        let mut w = s.dot(&q);
        let a = w.dot(&q);
        alpha.push(a);
        w.scaled_add(-a, &q);
        if k > 0 {
            w.scaled_add(-beta[k - 1], &basis[k - 1]);
        }
        basis.push(q.clone());
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w.scaled_add(-c, b);
            }
        }
        let b = w.dot(&w).sqrt();
        if k + 1 == steps || b < 1e-12 {
            break;
        }
        beta.push(b);
        q = w / b;
    }
    let k = alpha.len();
    let tri = |i: usize, j: usize| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    };
    let Ok((eig_values, eig_vectors)) = symmetric_eigen(k, tri) else {
        return (Vec::new(), Vec::new(), f64::INFINITY);
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig_values[b].total_cmp(&eig_values[a]));
    order.truncate(m.min(k));
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    let mut worst: f64 = 0.0;
    for &c in &order {
        let lam = eig_values[c];
        let mut v = Array1::<f64>::zeros(n);
        for (i, b) in basis.iter().enumerate() {
            v.scaled_add(eig_vectors[c][i], b);
        }
        let norm = v.dot(&v).sqrt();
        v /= norm;
        let r = s.dot(&v) - &v * lam;
        worst = worst.max(r.dot(&r).sqrt());
        values.push(lam);
        vectors.push(v.to_vec());
    }
    if order.len() < m {
        worst = f64::INFINITY;
    }
    (values, vectors, worst)
}

/// Rows `[lambda_1^t phi_1(x_i), ..., lambda_d^t phi_d(x_i)]`, trivial coordinate included.
pub fn diffusion_coordinates(map: &DiffusionMap, t: u32, d: usize) -> Array2<f64> {
    let d = d.min(map.n_pairs());
    let exponent = i32::try_from(t).unwrap_or(i32::MAX);
    let scale: Array1<f64> = map
        .eigenvalues
        .iter()
        .take(d)
        .map(|l| l.powi(exponent))
        .collect();
    let mut out = map.eigenvectors.slice(ndarray::s![.., ..d]).to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        row.zip_mut_with(&scale, |v, s| *v *= s);
    }
    out
}

use std::io::{Read, Write};

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

use super::kernel::{row_sums, AffinityMatrix};
use crate::error::{Error, Result};
use crate::io;

const ROW_SUM_TOL: f64 = 1e-10;

/// Row-stochastic transition matrix together with the degrees of the affinity
/// matrix it was normalized from.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    p: Array2<f64>,
    degrees: Array1<f64>,
}

impl DiffusionOperator {
    /// Wraps a transition matrix and its degree vector after checking
    /// row-stochasticity, entry range and positivity of the degrees.
    pub fn from_parts(p: Array2<f64>, degrees: Array1<f64>) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n || degrees.len() != n || n == 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("square matrix with {} degrees", degrees.len()),
                got: format!("{:?}", p.dim()),
            });
        }
        for (i, row) in p.axis_iter(Axis(0)).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidConfig(format!("row {i} sums to {s}")));
            }
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidConfig(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
        }
        if degrees.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidConfig("degrees must be positive".into()));
        }
        Ok(Self { p, degrees })
    }

    /// A transition matrix without kernel provenance; degrees are all one,
    /// so the stationary weights are uniform.
    pub fn from_transition_matrix(p: Array2<f64>) -> Result<Self> {
        let n = p.nrows();
        Self::from_parts(p, Array1::ones(n))
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    pub fn p(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn degrees(&self) -> &Array1<f64> {
        &self.degrees
    }

    /// Degree-normalized stationary weights `pi_i = d_i / sum(d)`.
    pub fn stationary(&self) -> Array1<f64> {
        let total: f64 = self.degrees.iter().sum();
        self.degrees.mapv(|d| d / total)
    }

    /// `D^{1/2} P D^{-1/2}` with `D = diag(pi)`; symmetric for kernel-built operators.
    pub fn conjugated(&self) -> Array2<f64> {
        let sqrt_pi = self.stationary().mapv(f64::sqrt);
        let mut s = self.p.clone();
        for ((i, j), v) in s.indexed_iter_mut() {
            *v *= sqrt_pi[i] / sqrt_pi[j];
        }
        s
    }

    /// "DCOP" container: magic, u32 N, N*N f64 row-major transition matrix, N f64 degrees.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        io::write_magic(&mut w, io::MAGIC_OPERATOR)?;
        io::write_u32(&mut w, self.len())?;
        io::write_f64s(&mut w, self.p.iter().copied())?;
        io::write_f64s(&mut w, self.degrees.iter().copied())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        io::expect_magic(&mut r, io::MAGIC_OPERATOR)?;
        let n = io::read_u32(&mut r)? as usize;
        let p = io::read_f64s(&mut r, n * n)?;
        let degrees = io::read_f64s(&mut r, n)?;
        let p = Array2::from_shape_vec((n, n), p).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_parts(p, Array1::from(degrees))
    }
}

/// `p_ij = k_ij / sum_j k_ij`.
pub fn markov_normalize(k: &AffinityMatrix) -> Result<DiffusionOperator> {
    let degrees = row_sums(&k.values);
    if let Some(row) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroRow { row });
    }
    let mut p = k.values.clone();
    for (mut row, &d) in p.axis_iter_mut(Axis(0)).zip(degrees.iter()) {
        row.mapv_inplace(|v| v / d);
    }
    Ok(DiffusionOperator { p, degrees })
}

fn mat_power(p: &Array2<f64>, t: u32) -> Array2<f64> {
    debug_assert!(t >= 1);
    // binary exponentiation; the multiplication order is fixed by t alone
    let mut result: Option<Array2<f64>> = None;
    let mut base = p.clone();
    let mut e = t;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.dot(&base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = base.dot(&base);
    }
    result.expect("t >= 1")
}

/// `P^t` for `t >= 1`, keeping the degree data.
pub fn power_operator(op: &DiffusionOperator, t: u32) -> Result<DiffusionOperator> {
    if t == 0 {
        return Err(Error::InvalidConfig(
            "diffusion time must be at least 1".into(),
        ));
    }
    Ok(DiffusionOperator {
        p: mat_power(&op.p, t),
        degrees: op.degrees.clone(),
    })
}

/// `P^t` with everything needed to evaluate diffusion distances at time `t`.
#[derive(Debug, Clone)]
pub struct PoweredOperator {
    pub t: u32,
    pt: Array2<f64>,
    /// Rows of `P^t` with column `z` scaled by `1 / sqrt(pi_z)`.
    scaled: Array2<f64>,
}

/// Squared Euclidean distance with four independent partial sums.
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl PoweredOperator {
    pub fn new(op: &DiffusionOperator, t: u32) -> Result<Self> {
        let powered = power_operator(op, t)?;
        let weight = op.stationary().mapv(|v| 1.0 / v.sqrt());
        let mut scaled = powered.p.clone();
        scaled
            .axis_iter_mut(Axis(0))
            .for_each(|mut row| row *= &weight);
        Ok(Self {
            t,
            pt: powered.p,
            scaled,
        })
    }

    pub fn len(&self) -> usize {
        self.pt.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.pt.nrows() == 0
    }

    /// The t-step transition matrix.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.pt
    }

    fn scaled_row(&self, i: usize) -> &[f64] {
        self.scaled.row(i).to_slice().expect("standard layout")
    }

    /// `sqrt(sum_z (P^t[i,z] - P^t[j,z])^2 / pi_z)`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.scaled_row(i), self.scaled_row(j)).sqrt()
    }

    pub fn distance_row(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|j| self.distance(i, j)).collect()
    }

    /// All pairwise distances; each pair is evaluated once, so the result is exactly symmetric.
    pub fn distance_matrix(&self) -> Array2<f64> {
        let n = self.len();
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| self.distance(i, j)).collect())
            .collect();
        let mut out = Array2::zeros((n, n));
        for (i, row) in upper.iter().enumerate() {
            for (off, &d) in row.iter().enumerate() {
                out[[i, i + 1 + off]] = d;
                out[[i + 1 + off, i]] = d;
            }
        }
        out
    }
}

/// Diffusion distance between points `i` and `j` at time `t`, evaluated by the
/// direct sum over transition rows.
pub fn diffusion_distance(op: &DiffusionOperator, t: u32, i: usize, j: usize) -> Result<f64> {
    let n = op.len();
    if i >= n || j >= n {
        return Err(Error::InvalidConfig(format!(
            "index out of range for {n} points"
        )));
    }
    Ok(PoweredOperator::new(op, t)?.distance(i, j))
}

pub fn diffusion_distance_matrix(op: &DiffusionOperator, t: u32) -> Result<Array2<f64>> {
    Ok(PoweredOperator::new(op, t)?.distance_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AffinityKind;
    use ndarray::array;

    fn affinity(values: Array2<f64>) -> AffinityMatrix {
        AffinityMatrix {
            values,
            kind: AffinityKind::Anisotropic,
            sigma: 1.0,
        }
    }

    fn close(a: &Array2<f64>, b: &Array2<f64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn markov_examples() {
        let p = markov_normalize(&affinity(array![[1.0, 1.0], [1.0, 1.0]])).unwrap();
        assert_eq!(p.p(), &array![[0.5, 0.5], [0.5, 0.5]]);
        let p = markov_normalize(&affinity(array![[2.0, 0.0], [0.0, 3.0]])).unwrap();
        assert_eq!(p.p(), &Array2::<f64>::eye(2));
        assert_eq!(p.degrees(), &array![2.0, 3.0]);
        let a = 0.25;
        let p = markov_normalize(&affinity(array![[1.0, a], [a, 1.0]])).unwrap();
        let e = array![
            [1.0 / (1.0 + a), a / (1.0 + a)],
            [a / (1.0 + a), 1.0 / (1.0 + a)]
        ];
        assert!(close(p.p(), &e, 1e-15));
    }

    #[test]
    fn zero_row_is_rejected() {
        let err = markov_normalize(&affinity(array![[1.0, 0.0], [0.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroRow { row: 1 }));
    }

    #[test]
    fn from_parts_validates() {
        assert!(DiffusionOperator::from_transition_matrix(array![[0.5, 0.4], [0.5, 0.5]]).is_err());
        assert!(
            DiffusionOperator::from_transition_matrix(array![[1.5, -0.5], [0.5, 0.5]]).is_err()
        );
        assert!(
            DiffusionOperator::from_parts(array![[1.0, 0.0], [0.0, 1.0]], array![1.0, 0.0])
                .is_err()
        );
    }

    #[test]
    fn powers() {
        let op = DiffusionOperator::from_transition_matrix(array![[0.7, 0.3], [0.2, 0.8]]).unwrap();
        assert_eq!(power_operator(&op, 1).unwrap().p(), op.p());
        let swap =
            DiffusionOperator::from_transition_matrix(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(
            power_operator(&swap, 2).unwrap().p(),
            &Array2::<f64>::eye(2)
        );
        assert!(power_operator(&op, 0).is_err());
    }

    #[test]
    fn cube_matches_naive_triple_product() {
        let raw = array![
            [0.1, 0.2, 0.3, 0.15, 0.25],
            [0.5, 0.1, 0.1, 0.2, 0.1],
            [0.05, 0.05, 0.6, 0.2, 0.1],
            [0.3, 0.3, 0.1, 0.1, 0.2],
            [0.2, 0.2, 0.2, 0.2, 0.2]
        ];
        let op = DiffusionOperator::from_transition_matrix(raw.clone()).unwrap();
        let mut naive = Array2::<f64>::zeros((5, 5));
        for i in 0..5 {
            for j in 0..5 {
                for a in 0..5 {
                    for b in 0..5 {
                        naive[[i, j]] += raw[[i, a]] * raw[[a, b]] * raw[[b, j]];
                    }
                }
            }
        }
        assert!(close(power_operator(&op, 3).unwrap().p(), &naive, 1e-15));
    }

    #[test]
    fn two_state_distance() {
        let op = DiffusionOperator::from_transition_matrix(array![[0.9, 0.1], [0.1, 0.9]]).unwrap();
        // (0.8^2 + 0.8^2) / 0.5 = 2.56
        let d = diffusion_distance(&op, 1, 0, 1).unwrap();
        assert!((d - 1.6).abs() < 1e-14, "{d}");
        assert_eq!(diffusion_distance(&op, 1, 1, 1).unwrap(), 0.0);
        assert!(diffusion_distance(&op, 1, 0, 2).is_err());
    }

    #[test]
    fn identical_rows_have_zero_distance() {
        let op = DiffusionOperator::from_transition_matrix(array![
            [0.2, 0.3, 0.5],
            [0.2, 0.3, 0.5],
            [0.1, 0.1, 0.8]
        ])
        .unwrap();
        assert_eq!(diffusion_distance(&op, 2, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn binary_round_trip() {
        let op = markov_normalize(&affinity(array![[1.0, 0.2], [0.2, 3.0]])).unwrap();
        let mut buf = Vec::new();
        op.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"DCOP");
        assert_eq!(DiffusionOperator::read_binary(buf.as_slice()).unwrap(), op);
    }
}

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Entries below this are zeroed when [`KernelConfig::truncate`] is set.
pub const TRUNCATION_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// sigma in squared-distance units.
    Fixed(f64),
    /// sigma = mean over points of the squared distance to the k-th nearest neighbour.
    AdaptiveKnn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidth: BandwidthRule,
    /// Density-normalization exponent in [0, 1].
    pub alpha: f64,
    /// Zero affinities below [`TRUNCATION_THRESHOLD`]. Meant for large clouds.
    #[serde(default)]
    pub truncate: bool,
}

impl KernelConfig {
    /// alpha = 1 and an adaptive bandwidth with k = ceil(log2 N).
    pub fn for_points(n_points: usize) -> Self {
        let k = (n_points.max(2) as f64).log2().ceil() as usize;
        Self {
            bandwidth: BandwidthRule::AdaptiveKnn(k.clamp(1, n_points.saturating_sub(1).max(1))),
            alpha: 1.0,
            truncate: false,
        }
    }

    pub fn fixed(sigma: f64, alpha: f64) -> Self {
        Self {
            bandwidth: BandwidthRule::Fixed(sigma),
            alpha,
            truncate: false,
        }
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        match self.bandwidth {
            BandwidthRule::Fixed(sigma) if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::InvalidConfig(format!("sigma must be positive, got {sigma}")),
            ),
            BandwidthRule::AdaptiveKnn(k) if k == 0 || k >= n_points => Err(Error::InvalidConfig(
                format!("knn bandwidth needs 1 <= k < N, got k = {k}, N = {n_points}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AffinityKind {
    Gaussian,
    Anisotropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub values: Array2<f64>,
    pub kind: AffinityKind,
    /// Bandwidth the Gaussian kernel was evaluated with.
    pub sigma: f64,
}

impl AffinityMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn row_sums(&self) -> Array1<f64> {
        row_sums(&self.values)
    }
}

pub(crate) fn row_sums(m: &Array2<f64>) -> Array1<f64> {
    // sequential per row so the result does not depend on the thread count
    m.axis_iter(Axis(0)).map(|row| row.iter().sum()).collect()
}

/// Squared Euclidean distances between all pairs of points.
pub fn pairwise_sq_distances(cloud: &PointCloud) -> Array2<f64> {
    let pts = cloud.points();
    let n = cloud.len();
    let mut out = Array2::<f64>::zeros((n, n));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let xi = pts.row(i);
            for (j, d) in row.iter_mut().enumerate() {
                *d = xi
                    .iter()
                    .zip(pts.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
        });
    out
}

fn knn_bandwidth(sq: &Array2<f64>, k: usize) -> f64 {
    let n = sq.nrows();
    let kth: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut others: Vec<f64> = sq
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            let (_, v, _) = others.select_nth_unstable_by(k - 1, f64::total_cmp);
            *v
        })
        .collect();
    kth.iter().sum::<f64>() / n as f64
}

/// Gaussian affinities `exp(-|x_i - x_j|^2 / sigma)`.
pub fn gaussian_affinity(cloud: &PointCloud, cfg: &KernelConfig) -> Result<AffinityMatrix> {
    cfg.validate(cloud.len())?;
    let sq = pairwise_sq_distances(cloud);
    let sigma = match cfg.bandwidth {
        BandwidthRule::Fixed(s) => s,
        BandwidthRule::AdaptiveKnn(k) => {
            let s = knn_bandwidth(&sq, k);
            if s <= 0.0 {
                return Err(Error::DegenerateCloud(format!(
                    "mean squared distance to neighbour {k} is zero"
                )));
            }
            s
        }
    };
    let truncate = cfg.truncate;
    let values = sq.mapv(|d| {
        let g = (-d / sigma).exp();
        if truncate && g < TRUNCATION_THRESHOLD {
            0.0
        } else {
            g
        }
    });
    Ok(AffinityMatrix {
        values,
        kind: AffinityKind::Gaussian,
        sigma,
    })
}

/// Density normalization `K_ij = G_ij / (d_i^alpha d_j^alpha)` with `d` the row sums of `G`.
pub fn anisotropic_normalize(g: &AffinityMatrix, alpha: f64) -> Result<AffinityMatrix> {
    if g.kind != AffinityKind::Gaussian {
        return Err(Error::InvalidConfig(
            "anisotropic normalization expects a Gaussian kernel".into(),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    if alpha == 0.0 {
        return Ok(AffinityMatrix {
            kind: AffinityKind::Anisotropic,
            ..g.clone()
        });
    }
    let scale = g.row_sums().mapv(|d| d.powf(alpha));
    let mut values = g.values.clone();
    for ((i, j), v) in values.indexed_iter_mut() {
        *v /= scale[i] * scale[j];
    }
    Ok(AffinityMatrix {
        values,
        kind: AffinityKind::Anisotropic,
        sigma: g.sigma,
    })
}

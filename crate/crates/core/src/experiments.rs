//! Seeded batch experiments on synthetic surfaces: the curvature ordering of
//! sphere, plane and saddle, and curvature-vs-Gaussian-curvature correlations.

use serde::{Deserialize, Serialize};

use crate::curvature::{
    curvature_correlation, masked_mean, pointwise_curvature, Correlation, CurvatureField,
    RadiusRule,
};
use crate::error::Result;
use crate::geometry::{build_operator, BandwidthRule, KernelConfig};
use crate::manifold::{derive_seed, sample_surface, Surface, SurfaceSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureParams {
    /// Adaptive bandwidth neighbour count; `None` uses `ceil(log2 N)`.
    pub knn: Option<usize>,
    /// Fixed bandwidth, overriding `knn`.
    pub sigma: Option<f64>,
    pub alpha: f64,
    pub truncate: bool,
    pub t: u32,
    pub radius: RadiusRule,
}

impl Default for CurvatureParams {
    fn default() -> Self {
        Self {
            knn: None,
            sigma: None,
            alpha: 1.0,
            truncate: false,
            t: crate::curvature::DEFAULT_TIME,
            radius: RadiusRule::default(),
        }
    }
}

impl CurvatureParams {
    pub fn kernel(&self, n_points: usize) -> KernelConfig {
        let mut cfg = KernelConfig::for_points(n_points);
        cfg.alpha = self.alpha;
        cfg.truncate = self.truncate;
        if let Some(sigma) = self.sigma {
            cfg.bandwidth = BandwidthRule::Fixed(sigma);
        } else if let Some(k) = self.knn {
            cfg.bandwidth = BandwidthRule::AdaptiveKnn(k);
        }
        cfg
    }
}

pub fn cloud_curvature(sample: &SurfaceSample, params: &CurvatureParams) -> Result<CurvatureField> {
    let op = build_operator(&sample.cloud, &params.kernel(sample.cloud.len()))?;
    pointwise_curvature(&op, params.t, params.radius)
}

/// Unit sphere, unit disk, and the saddle `z = x^2 - y^2` over the unit disk.
pub fn ordering_surfaces() -> [Surface; 3] {
    [
        Surface::Sphere { radius: 1.0 },
        Surface::Plane { radius: 1.0 },
        Surface::HyperbolicParaboloid {
            scale: 1.0,
            radius: 1.0,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingTrial {
    pub trial: usize,
    pub sphere: f64,
    pub plane: f64,
    pub saddle: f64,
}

impl OrderingTrial {
    pub fn ordered(&self) -> bool {
        self.sphere > self.plane && self.plane > self.saddle
    }
}

/// Mean interior curvature of the three ordering surfaces for one trial.
pub fn ordering_trial(
    seed: u64,
    trial: usize,
    n_points: usize,
    params: &CurvatureParams,
) -> Result<OrderingTrial> {
    let trial_seed = derive_seed(seed, trial as u64);
    let mut means = [0.0; 3];
    for (i, surface) in ordering_surfaces().iter().enumerate() {
        let sample = sample_surface(surface, n_points, 0.0, derive_seed(trial_seed, i as u64))?;
        means[i] = masked_mean(&cloud_curvature(&sample, params)?, &sample.interior);
    }
    Ok(OrderingTrial {
        trial,
        sphere: means[0],
        plane: means[1],
        saddle: means[2],
    })
}

/// Graphs `z = a x^2 + b y^2` over the unit disk whose curvature runs from
/// positive to negative.
pub fn correlation_surfaces() -> Vec<(String, Surface)> {
    [(1.0, 1.0), (1.0, 0.5), (1.0, -0.5), (1.0, -1.0)]
        .iter()
        .map(|&(a, b)| {
            (
                format!("quadric_{a}_{b}"),
                Surface::QuadricGraph {
                    q: [[a, 0.0], [0.0, b]],
                    radius: 1.0,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorrelationTrial {
    pub sample: SurfaceSample,
    pub field: CurvatureField,
    pub correlation: Correlation,
}

pub fn correlation_trial(
    surface: &Surface,
    n_points: usize,
    seed: u64,
    params: &CurvatureParams,
) -> Result<CorrelationTrial> {
    let sample = sample_surface(surface, n_points, 0.0, seed)?;
    let field = cloud_curvature(&sample, params)?;
    let correlation = curvature_correlation(&field, &sample.gauss_curvature, &sample.interior)?;
    Ok(CorrelationTrial {
        sample,
        field,
        correlation,
    })
}

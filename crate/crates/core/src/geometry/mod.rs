//! Kernels, diffusion operators, diffusion maps and diffusion distances.

mod kernel;
mod operator;
mod spectral;

pub use kernel::{
    anisotropic_normalize, gaussian_affinity, pairwise_sq_distances, AffinityKind, AffinityMatrix,
    BandwidthRule, KernelConfig, TRUNCATION_THRESHOLD,
};
pub use operator::{
    diffusion_distance, diffusion_distance_matrix, markov_normalize, power_operator,
    DiffusionOperator, PoweredOperator,
};
pub use spectral::{
    diffusion_coordinates, spectral_decompose, spectral_decompose_top, DiffusionMap, DENSE_LIMIT,
};

use crate::cloud::PointCloud;
use crate::error::Result;

/// Kernel, anisotropic normalization and Markov normalization in one step.
pub fn build_operator(cloud: &PointCloud, cfg: &KernelConfig) -> Result<DiffusionOperator> {
    let g = gaussian_affinity(cloud, cfg)?;
    let k = anisotropic_normalize(&g, cfg.alpha)?;
    markov_normalize(&k)
}

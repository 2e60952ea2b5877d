//! Training corpus: random quadrics, sampled as point clouds `(x, f(x))` and
//! embedded with truncated diffusion coordinates.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::EmbeddingConfig;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{
    build_operator, diffusion_coordinates, spectral_decompose_top, KernelConfig,
};
use crate::manifold::{derive_seed, random_quadric, sample_quadric, Quadric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_quadrics: usize,
    pub n_points: usize,
    /// Intrinsic dimensions, assigned to examples round-robin.
    pub dims: Vec<usize>,
    /// Side length `K` of the padded coefficient matrix.
    pub quadric_size: usize,
    pub coeff_range: f64,
    pub domain_radius: f64,
    pub embedding: EmbeddingConfig,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_quadrics: 500,
            n_points: 200,
            dims: vec![2, 5],
            quadric_size: 5,
            coeff_range: 1.0,
            domain_radius: 1.0,
            embedding: EmbeddingConfig::default(),
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_quadrics == 0 || self.dims.is_empty() {
            return Err(Error::InvalidConfig(
                "corpus needs at least one quadric and one dimension".into(),
            ));
        }
        if let Some(&k) = self.dims.iter().find(|&&k| k < 2 || k > self.quadric_size) {
            return Err(Error::InvalidConfig(format!(
                "intrinsic dimension {k} outside [2, {}]",
                self.quadric_size
            )));
        }
        if self.embedding.d_emb == 0 || self.embedding.d_emb > self.n_points {
            return Err(Error::InvalidConfig(format!(
                "embedding dimension {} must lie in [1, {}]",
                self.embedding.d_emb, self.n_points
            )));
        }
        if self.embedding.t == 0 {
            return Err(Error::InvalidConfig(
                "diffusion time must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Independent seeds for the quadric and its sample, derived from the corpus seed.
    pub fn example_seeds(&self, index: usize) -> (u64, u64) {
        let base = derive_seed(self.seed, index as u64);
        (derive_seed(base, 0), derive_seed(base, 1))
    }

    pub fn example_dim(&self, index: usize) -> usize {
        self.dims[index % self.dims.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    /// `N x d_emb` diffusion coordinates of the sampled graph points.
    pub phi: Array2<f64>,
    /// Quadric value at each sample.
    pub loss_axis: Array1<f64>,
    /// Upper-triangular coefficients of the padded `K x K` matrix.
    pub target: Vec<f64>,
    pub intrinsic_dim: usize,
}

/// Diffusion coordinates of the graph cloud `{(x_i, y_i)}`.
pub fn embed_samples(
    xs: &Array2<f64>,
    ys: &Array1<f64>,
    embedding: &EmbeddingConfig,
) -> Result<Array2<f64>> {
    let (n, k) = xs.dim();
    if ys.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} values"),
            got: ys.len().to_string(),
        });
    }
    let mut pts = Array2::zeros((n, k + 1));
    pts.slice_mut(ndarray::s![.., ..k]).assign(xs);
    pts.column_mut(k).assign(ys);
    let cloud = PointCloud::new(pts)?;
    let op = build_operator(&cloud, &KernelConfig::for_points(n))?;
    let map = spectral_decompose_top(&op, embedding.d_emb)?;
    let phi = diffusion_coordinates(&map, embedding.t, embedding.d_emb);
    if phi.ncols() != embedding.d_emb {
        return Err(Error::ShapeMismatch {
            expected: format!("{} diffusion coordinates", embedding.d_emb),
            got: phi.ncols().to_string(),
        });
    }
    Ok(phi)
}

/// Builds one example for a given quadric and sampling seed.
pub fn make_example(
    quadric: &Quadric,
    cfg: &CorpusConfig,
    sample_seed: u64,
) -> Result<TrainingExample> {
    let sample = sample_quadric(quadric, cfg.n_points, cfg.domain_radius, sample_seed)?;
    let phi = embed_samples(&sample.xs, &sample.ys, &cfg.embedding)?;
    Ok(TrainingExample {
        phi,
        loss_axis: sample.ys,
        target: quadric.upper_triangle(),
        intrinsic_dim: quadric.intrinsic_dim,
    })
}

pub fn corpus_quadric(cfg: &CorpusConfig, index: usize) -> Result<Quadric> {
    let (q_seed, _) = cfg.example_seeds(index);
    random_quadric(
        cfg.example_dim(index),
        cfg.quadric_size,
        cfg.coeff_range,
        q_seed,
    )
}

pub fn build_corpus(cfg: &CorpusConfig) -> Result<Vec<TrainingExample>> {
    cfg.validate()?;
    (0..cfg.n_quadrics)
        .into_par_iter()
        .map(|i| {
            let quadric = corpus_quadric(cfg, i)?;
            make_example(&quadric, cfg, cfg.example_seeds(i).1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CorpusConfig {
        CorpusConfig {
            n_quadrics: 1,
            n_points: 60,
            dims: vec![2],
            quadric_size: 2,
            embedding: EmbeddingConfig { d_emb: 5, t: 2 },
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn single_example_shapes() {
        let corpus = build_corpus(&tiny()).unwrap();
        assert_eq!(corpus.len(), 1);
        let ex = &corpus[0];
        assert_eq!(ex.phi.dim(), (60, 5));
        assert_eq!(ex.loss_axis.len(), 60);
        assert_eq!(ex.target.len(), 3);
        assert!(ex.phi.iter().all(|v| v.is_finite()));
        assert_eq!(build_corpus(&tiny()).unwrap(), corpus);
    }

    #[test]
    fn padding_and_round_robin() {
        let cfg = CorpusConfig {
            n_quadrics: 4,
            dims: vec![2, 3],
            quadric_size: 4,
            ..tiny()
        };
        let dims: Vec<_> = (0..4)
            .map(|i| corpus_quadric(&cfg, i).unwrap().intrinsic_dim)
            .collect();
        assert_eq!(dims, vec![2, 3, 2, 3]);
        let q = corpus_quadric(&cfg, 0).unwrap();
        assert_eq!(q.q.row(3).iter().filter(|v| **v != 0.0).count(), 0);
        assert_ne!(cfg.example_seeds(0), cfg.example_seeds(1));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(build_corpus(&CorpusConfig {
            dims: vec![6],
            ..tiny()
        })
        .is_err());
        assert!(build_corpus(&CorpusConfig {
            embedding: EmbeddingConfig { d_emb: 0, t: 1 },
            ..tiny()
        })
        .is_err());
    }
}

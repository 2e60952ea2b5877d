//! Learned quadric regressor and its least-squares oracle.

mod corpus;
mod lsfit;
mod model;
mod train;

pub use corpus::{
    build_corpus, corpus_quadric, embed_samples, make_example, CorpusConfig, TrainingExample,
};
pub use lsfit::ls_quadric_fit;
pub use model::{EmbeddingConfig, NetModel};
pub use train::{
    corpus_loss, directional_derivatives, example_loss, median_smooth, train, TrainConfig,
    TrainingLog,
};

use crate::error::{Error, Result};
use crate::manifold::Quadric;

/// Baseline predictor: every upper-triangular entry of a `size x size` matrix
/// uniform on `[-coeff_range, coeff_range]`.
pub fn random_baseline(size: usize, coeff_range: f64, seed: u64) -> Result<Quadric> {
    if !(coeff_range > 0.0 && coeff_range.is_finite()) || size == 0 {
        return Err(Error::InvalidConfig(
            "baseline needs a positive size and range".into(),
        ));
    }
    use rand::Rng;
    let mut rng = crate::manifold::rng_from_seed(seed);
    let values: Vec<f64> = (0..crate::manifold::n_coefficients(size))
        .map(|_| rng.gen_range(-coeff_range..=coeff_range))
        .collect();
    Quadric::from_upper_triangle(&values, size)
}

/// Mean squared error over all upper-triangular coefficients.
pub fn coefficient_mse(pred: &Quadric, target: &Quadric) -> Result<f64> {
    coefficient_mse_where(pred, target, |_, _| true)
}

/// Mean squared error over coefficients inside the target's active `k x k` block.
pub fn active_coefficient_mse(pred: &Quadric, target: &Quadric) -> Result<f64> {
    let k = target.intrinsic_dim;
    coefficient_mse_where(pred, target, |i, j| i < k && j < k)
}

fn coefficient_mse_where(
    pred: &Quadric,
    target: &Quadric,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<f64> {
    let size = target.size();
    if pred.size() != size {
        return Err(Error::ShapeMismatch {
            expected: format!("{size} x {size}"),
            got: format!("{:?}", pred.q.dim()),
        });
    }
    let (mut total, mut count) = (0.0, 0usize);
    for i in 0..size {
        for j in i..size {
            if keep(i, j) {
                let d = pred.q[[i, j]] - target.q[[i, j]];
                total += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidConfig("no coefficients to compare".into()));
    }
    Ok(total / count as f64)
}

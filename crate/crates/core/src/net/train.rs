//! Loss, minibatch SGD with momentum, and the finite-difference gradient check.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::TrainingExample;
use super::model::NetModel;
use crate::error::{Error, Result};
use crate::manifold::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Seeds minibatch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Mean corpus loss after each epoch.
    pub epoch_loss: Vec<f64>,
}

/// `sum_j (q_j - qhat_j)^2 + l1 * sum_j |qhat_j|`.
pub fn example_loss(pred: &Array1<f64>, target: &[f64], l1: f64) -> f64 {
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t) + l1 * p.abs())
        .sum()
}

fn loss_gradient(pred: &Array1<f64>, target: &[f64], l1: f64) -> Array1<f64> {
    pred.iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) + l1 * p.signum() * f64::from(u8::from(*p != 0.0)))
        .collect()
}

fn check_example(model: &NetModel, ex: &TrainingExample) -> Result<()> {
    if ex.target.len() != model.output_dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{} target coefficients", model.output_dim),
            got: ex.target.len().to_string(),
        });
    }
    Ok(())
}

/// Mean loss and summed gradient over `batch`, evaluated at `weights`.
pub(crate) fn batch_loss_and_grad(
    model: &NetModel,
    weights: &[f64],
    batch: &[&TrainingExample],
    inputs: &[Array2<f64>],
) -> (f64, Vec<f64>) {
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .zip(inputs.par_iter())
        .map(|(ex, x)| {
            let trace = model.forward_with(weights, x);
            let loss = example_loss(&trace.output, &ex.target, model.l1_weight);
            let d_out = loss_gradient(&trace.output, &ex.target, model.l1_weight);
            let mut grad = vec![0.0; weights.len()];
            model.backward_with(weights, &trace, &d_out, &mut grad);
            (loss, grad)
        })
        .collect();
    // sequential reduction keeps results independent of the thread count
    let n = batch.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (loss, g) in parts {
        total += loss;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (total / n, grad)
}

/// Mean loss of `model` over `corpus`.
pub fn corpus_loss(model: &NetModel, corpus: &[TrainingExample]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("empty corpus".into()));
    }
    let losses = corpus
        .par_iter()
        .map(|ex| {
            check_example(model, ex)?;
            let pred = model.predict_coefficients(&ex.phi, &ex.loss_axis)?;
            Ok(example_loss(&pred, &ex.target, model.l1_weight))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / corpus.len() as f64)
}

/// Minibatch SGD with momentum; returns the per-epoch corpus loss.
pub fn train(
    model: &mut NetModel,
    corpus: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<TrainingLog> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("empty corpus".into()));
    }
    let inputs = corpus
        .iter()
        .map(|ex| {
            check_example(model, ex)?;
            model.inputs(&ex.phi, &ex.loss_axis)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut velocity = vec![0.0; model.weights.len()];
    let mut log = TrainingLog {
        epoch_loss: Vec::with_capacity(cfg.epochs),
    };
    let mut batch_index = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainingExample> = chunk.iter().map(|&i| &corpus[i]).collect();
            let xs: Vec<Array2<f64>> = chunk.iter().map(|&i| inputs[i].clone()).collect();
            let (loss, grad) = batch_loss_and_grad(model, &model.weights, &batch, &xs);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { batch: batch_index });
            }
            for ((w, v), g) in model.weights.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *w += *v;
            }
            batch_index += 1;
        }
        log.epoch_loss.push(corpus_loss(model, corpus)?);
    }
    Ok(log)
}

/// Analytic and central-difference directional derivatives of the mean batch loss.
pub fn directional_derivatives(
    model: &NetModel,
    batch: &[TrainingExample],
    direction: &[f64],
    step: f64,
) -> Result<(f64, f64)> {
    if direction.len() != model.weights.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} direction entries", model.weights.len()),
            got: direction.len().to_string(),
        });
    }
    let refs: Vec<&TrainingExample> = batch.iter().collect();
    let xs = batch
        .iter()
        .map(|ex| {
            check_example(model, ex)?;
            model.inputs(&ex.phi, &ex.loss_axis)
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, grad) = batch_loss_and_grad(model, &model.weights, &refs, &xs);
    let analytic: f64 = grad.iter().zip(direction).map(|(g, d)| g * d).sum();
    let shifted = |sign: f64| -> Vec<f64> {
        model
            .weights
            .iter()
            .zip(direction)
            .map(|(w, d)| w + sign * step * d)
            .collect()
    };
    let (plus, _) = batch_loss_and_grad(model, &shifted(1.0), &refs, &xs);
    let (minus, _) = batch_loss_and_grad(model, &shifted(-1.0), &refs, &xs);
    Ok((analytic, (plus - minus) / (2.0 * step)))
}

/// Median filter of width `window` (shrinking at the ends).
pub fn median_smooth(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let mut w = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            w[w.len() / 2]
        })
        .collect()
}

//! Local Hessian estimation around critical points of scalar objectives.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::linalg::symmetric_eigen;
use crate::manifold::{n_coefficients, rng_from_seed};
use crate::net::{embed_samples, ls_quadric_fit, NetModel};

/// Fraction of non-local samples tolerated by the locality check.
pub const LOCALITY_FRACTION: f64 = 0.05;
pub const MAX_HALVINGS: usize = 20;
/// Degeneracy threshold relative to the largest `|eigenvalue|`.
pub const DEGENERACY_RTOL: f64 = 1e-6;

/// Scalar function on `R^k`.
pub trait Objective: Sync {
    fn value(&self, x: &[f64]) -> f64;
    /// Pure objectives may be evaluated concurrently.
    fn is_pure(&self) -> bool {
        false
    }
}

/// Closure objective declared pure.
pub struct PureFn<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for PureFn<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
    fn is_pure(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Net(Box<NetModel>),
    LeastSquares { ridge: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub n_samples: usize,
    pub dim: usize,
    pub radius_scale: f64,
    pub rel_loss_tol: f64,
    pub seed: u64,
    pub estimator: Estimator,
    /// Sample on the sphere of radius `rho` instead of the ball.
    pub shell: bool,
}

impl ProbeConfig {
    pub fn least_squares(dim: usize, seed: u64) -> Self {
        Self {
            n_samples: 1000,
            dim,
            radius_scale: 0.1,
            rel_loss_tol: 0.1,
            seed,
            estimator: Estimator::LeastSquares { ridge: 0.0 },
            shell: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n_samples < 2 {
            return Err(Error::InvalidConfig(
                "probe needs dim >= 1 and at least two samples".into(),
            ));
        }
        if !(self.radius_scale > 0.0 && self.radius_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "radius scale must be positive, got {}",
                self.radius_scale
            )));
        }
        if !(self.rel_loss_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "relative loss tolerance must be positive, got {}",
                self.rel_loss_tol
            )));
        }
        match &self.estimator {
            Estimator::LeastSquares { ridge } => {
                if self.n_samples < n_coefficients(self.dim) + 1 {
                    return Err(Error::InvalidConfig(format!(
                        "least squares needs at least {} samples in dimension {}",
                        n_coefficients(self.dim) + 1,
                        self.dim
                    )));
                }
                if !(*ridge >= 0.0) {
                    return Err(Error::InvalidConfig("ridge must be nonnegative".into()));
                }
                if self.shell && *ridge == 0.0 {
                    return Err(Error::InvalidConfig(
                        "shell sampling needs a positive ridge".into(),
                    ));
                }
            }
            Estimator::Net(model) => {
                if model.quadric_size() < self.dim {
                    return Err(Error::InvalidConfig(format!(
                        "model predicts {}x{} quadrics, probe dimension is {}",
                        model.quadric_size(),
                        model.quadric_size(),
                        self.dim
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Samples around `center`: offsets `x - center` and centered values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSample {
    pub center: Vec<f64>,
    pub center_value: f64,
    pub xs: Array2<f64>,
    pub ys: Array1<f64>,
    pub radius: f64,
    pub halvings: usize,
}

fn evaluate(f: &dyn Objective, points: &[Vec<f64>]) -> Vec<f64> {
    if f.is_pure() {
        points.par_iter().map(|p| f.value(p)).collect()
    } else {
        points.iter().map(|p| f.value(p)).collect()
    }
}

pub fn sample_around(f: &dyn Objective, center: &[f64], cfg: &ProbeConfig) -> Result<ProbeSample> {
    cfg.validate()?;
    if center.len() != cfg.dim {
        return Err(Error::ShapeMismatch {
            expected: format!("center of length {}", cfg.dim),
            got: center.len().to_string(),
        });
    }
    let center_value = f.value(center);
    if !center_value.is_finite() {
        return Err(Error::NonFiniteValue { index: 0 });
    }
    let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut radius = cfg.radius_scale * norm.max(1.0);
    let scale = center_value.abs().max(1.0);
    let mut rng = rng_from_seed(cfg.seed);
    let k = cfg.dim;
    let mut fraction = 1.0;
    for halvings in 0..=MAX_HALVINGS {
        let offsets: Vec<Vec<f64>> = (0..cfg.n_samples)
            .map(|_| {
                let mut dir: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                let len = dir
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
                    .max(f64::MIN_POSITIVE);
                // 1 - U lies in (0, 1], so radii never collapse to the center
                let r = if cfg.shell {
                    radius
                } else {
                    radius * (1.0 - rng.gen::<f64>()).powf(1.0 / k as f64)
                };
                dir.iter_mut().for_each(|v| *v *= r / len);
                dir
            })
            .collect();
        let points: Vec<Vec<f64>> = offsets
            .iter()
            .map(|o| o.iter().zip(center).map(|(a, b)| a + b).collect())
            .collect();
        let values = evaluate(f, &points);
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index: index + 1 });
        }
        let far = values
            .iter()
            .filter(|&&v| (v - center_value).abs() / scale > cfg.rel_loss_tol)
            .count();
        fraction = far as f64 / cfg.n_samples as f64;
        if fraction < LOCALITY_FRACTION {
            let xs = Array2::from_shape_fn((cfg.n_samples, k), |(i, j)| offsets[i][j]);
            let ys = values.iter().map(|v| v - center_value).collect();
            return Ok(ProbeSample {
                center: center.to_vec(),
                center_value,
                xs,
                ys,
                radius,
                halvings,
            });
        }
        radius *= 0.5;
    }
    Err(Error::LocalityFailure {
        halvings: MAX_HALVINGS,
        fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Signature {
    Minimum,
    Maximum,
    Saddle,
    Degenerate { tol: f64 },
}

impl Signature {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Minimum => "Minimum",
            Self::Maximum => "Maximum",
            Self::Saddle => "Saddle",
            Self::Degenerate { .. } => "Degenerate",
        }
    }

    /// Classifies an eigenvalue list with the scale-relative degeneracy test.
    pub fn classify(eigenvalues: &[f64]) -> Self {
        let tol = DEGENERACY_RTOL * eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if eigenvalues.iter().any(|v| v.abs() <= tol) {
            Self::Degenerate { tol }
        } else if eigenvalues.iter().all(|&v| v > tol) {
            Self::Minimum
        } else if eigenvalues.iter().all(|&v| v < -tol) {
            Self::Maximum
        } else {
            Self::Saddle
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianEstimate {
    pub h: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub signature: Signature,
    /// `|lambda|_max / |lambda|_min` over eigenvalues above the degeneracy
    /// threshold; absent when that set is empty.
    pub condition_number: Option<f64>,
}

impl HessianEstimate {
    pub fn from_matrix(h: &Array2<f64>) -> Result<Self> {
        let k = h.nrows();
        if h.ncols() != k || k == 0 {
            return Err(Error::ShapeMismatch {
                expected: "square Hessian".into(),
                got: format!("{:?}", h.dim()),
            });
        }
        if let Some(index) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        let sym = Array2::from_shape_fn((k, k), |(i, j)| 0.5 * (h[[i, j]] + h[[j, i]]));
        let (mut eigenvalues, _) = symmetric_eigen(k, |i, j| sym[[i, j]])?;
        eigenvalues.sort_by(f64::total_cmp);
        let signature = Signature::classify(&eigenvalues);
        let tol = DEGENERACY_RTOL * eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let nonzero: Vec<f64> = eigenvalues
            .iter()
            .map(|v| v.abs())
            .filter(|&v| v > tol)
            .collect();
        let condition_number = (!nonzero.is_empty()).then(|| {
            nonzero.iter().cloned().fold(0.0, f64::max)
                / nonzero.iter().cloned().fold(f64::INFINITY, f64::min)
        });
        Ok(Self {
            h: sym.outer_iter().map(|r| r.to_vec()).collect(),
            eigenvalues,
            signature,
            condition_number,
        })
    }

    pub fn negative_count(&self) -> usize {
        let tol = DEGENERACY_RTOL * self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.eigenvalues.iter().filter(|&&v| v < -tol).count()
    }
}

/// `H = 2 Q` from the least-squares or learned quadric fit of the samples.
pub fn estimate_hessian(
    xs: &Array2<f64>,
    ys: &Array1<f64>,
    cfg: &ProbeConfig,
) -> Result<HessianEstimate> {
    let k = xs.ncols();
    if k != cfg.dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", cfg.dim),
            got: k.to_string(),
        });
    }
    let q = match &cfg.estimator {
        Estimator::LeastSquares { ridge } => ls_quadric_fit(xs, ys, *ridge)?.q,
        Estimator::Net(model) => {
            // rescale to the unit ball the net was trained on; the quadratic
            // form is unchanged because y scales with the square of x
            let scale = xs
                .rows()
                .into_iter()
                .map(|r| r.dot(&r).sqrt())
                .fold(0.0, f64::max);
            if !(scale > 0.0) {
                return Err(Error::DegenerateCloud(
                    "all probe samples coincide with the center".into(),
                ));
            }
            let xs_unit = xs / scale;
            let ys_unit = ys / (scale * scale);
            let phi = embed_samples(&xs_unit, &ys_unit, &model.embedding)?;
            let pred = model.predict(&phi, &ys_unit)?;
            pred.q.slice(ndarray::s![..k, ..k]).to_owned()
        }
    };
    HessianEstimate::from_matrix(&(q * 2.0))
}

/// Samples around `center` and estimates the Hessian there.
pub fn probe(
    f: &dyn Objective,
    center: &[f64],
    cfg: &ProbeConfig,
) -> Result<(ProbeSample, HessianEstimate)> {
    let sample = sample_around(f, center, cfg)?;
    let est = estimate_hessian(&sample.xs, &sample.ys, cfg)?;
    Ok((sample, est))
}

pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    pub negative_count: usize,
    pub condition_number: Option<f64>,
    pub signature: String,
    pub histogram: Vec<usize>,
    /// `(eigenvalue, fraction of eigenvalues <= it)` at each sorted eigenvalue.
    pub ecdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// `HISTOGRAM_BINS + 1` uniform edges over the pooled eigenvalue range.
    pub bin_edges: Vec<f64>,
    pub entries: Vec<SpectrumEntry>,
}

pub fn spectrum_report(estimates: &[HessianEstimate], labels: &[String]) -> Result<SpectrumReport> {
    if estimates.is_empty() || estimates.len() != labels.len() {
        return Err(Error::InvalidConfig(
            "spectrum report needs one label per estimate and at least one estimate".into(),
        ));
    }
    let pooled = estimates.iter().flat_map(|e| e.eigenvalues.iter().copied());
    let (mut lo, mut hi) = pooled.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let bin_edges = (0..=HISTOGRAM_BINS)
        .map(|i| {
            if i == HISTOGRAM_BINS {
                hi
            } else {
                lo + i as f64 * width
            }
        })
        .collect();
    let entries = estimates
        .iter()
        .zip(labels)
        .map(|(e, label)| {
            let mut histogram = vec![0usize; HISTOGRAM_BINS];
            for &v in &e.eigenvalues {
                let bin = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
                histogram[bin] += 1;
            }
            let mut sorted = e.eigenvalues.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len() as f64;
            let ecdf = sorted
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    (
                        v,
                        sorted.iter().skip(i + 1).take_while(|&&w| w == v).count() as f64
                            + (i + 1) as f64,
                    )
                })
                .map(|(v, c)| (v, c / n))
                .collect();
            SpectrumEntry {
                label: label.clone(),
                eigenvalues: e.eigenvalues.clone(),
                negative_count: e.negative_count(),
                condition_number: e.condition_number,
                signature: e.signature.name().to_string(),
                histogram,
                ecdf,
            }
        })
        .collect();
    Ok(SpectrumReport { bin_edges, entries })
}

impl SpectrumReport {
    /// Writes `spectrum_eigenvalues.csv`, `spectrum_histogram.csv`,
    /// `spectrum_cdf.csv`, `spectrum_summary.csv` and `spectrum.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut eig = csv::Writer::from_path(dir.join("spectrum_eigenvalues.csv"))?;
        eig.write_record(["label", "index", "eigenvalue"])?;
        let mut hist = csv::Writer::from_path(dir.join("spectrum_histogram.csv"))?;
        hist.write_record(["label", "bin", "lower", "upper", "count"])?;
        let mut cdf = csv::Writer::from_path(dir.join("spectrum_cdf.csv"))?;
        cdf.write_record(["label", "eigenvalue", "cdf"])?;
        let mut summary = csv::Writer::from_path(dir.join("spectrum_summary.csv"))?;
        summary.write_record(["label", "negative_count", "condition_number", "signature"])?;
        for e in &self.entries {
            for (i, v) in e.eigenvalues.iter().enumerate() {
                eig.write_record([e.label.clone(), i.to_string(), fmt_f64(*v)])?;
            }
            for (b, count) in e.histogram.iter().enumerate() {
                hist.write_record([
                    e.label.clone(),
                    b.to_string(),
                    fmt_f64(self.bin_edges[b]),
                    fmt_f64(self.bin_edges[b + 1]),
                    count.to_string(),
                ])?;
            }
            for (v, c) in &e.ecdf {
                cdf.write_record([e.label.clone(), fmt_f64(*v), fmt_f64(*c)])?;
            }
            summary.write_record([
                e.label.clone(),
                e.negative_count.to_string(),
                e.condition_number
                    .map_or_else(|| "nan".to_string(), fmt_f64),
                e.signature.clone(),
            ])?;
        }
        for w in [&mut eig, &mut hist, &mut cdf, &mut summary] {
            w.flush()?;
        }
        std::fs::write(
            dir.join("spectrum.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

/// Named test objectives.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinObjective {
    /// `|x|^2`.
    Bowl { dim: usize },
    /// `-|x|^2`.
    Cap { dim: usize },
    /// `x_0^2 - x_1^2`.
    Saddle2d,
    /// `x^T A x` with `A = diag(1, -2, 3, -4, ...)`.
    Alternating { dim: usize },
    /// `x^T A x + 0.01 |x|^3` with `A = diag(1, 2, ..., dim)`.
    Cubic { dim: usize },
    /// Mean squared error of a linear model on a fixed synthetic data set;
    /// the critical point is the least-squares solution.
    ToyRegression(ToyRegression),
}

impl BuiltinObjective {
    pub fn from_name(name: &str, dim: usize, seed: u64) -> Result<Self> {
        Ok(match name {
            "bowl" => Self::Bowl { dim },
            "cap" => Self::Cap { dim },
            "saddle2d" => Self::Saddle2d,
            "alternating" => Self::Alternating { dim },
            "cubic" => Self::Cubic { dim },
            "toy-regression" => Self::ToyRegression(ToyRegression::new(64, dim.max(2) - 1, seed)?),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown objective {other:?}; expected bowl, cap, saddle2d, alternating, cubic or toy-regression"
                )))
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Bowl { dim }
            | Self::Cap { dim }
            | Self::Alternating { dim }
            | Self::Cubic { dim } => *dim,
            Self::Saddle2d => 2,
            Self::ToyRegression(t) => t.n_params(),
        }
    }

    /// Critical point the objective is probed at.
    pub fn critical_point(&self) -> Vec<f64> {
        match self {
            Self::ToyRegression(t) => t.fit(200).0,
            _ => vec![0.0; self.dim()],
        }
    }
}

impl Objective for BuiltinObjective {
    fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        match self {
            Self::Bowl { .. } => sq,
            Self::Cap { .. } => -sq,
            Self::Saddle2d => x[0] * x[0] - x[1] * x[1],
            Self::Alternating { .. } => x
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { 1.0 } else { -1.0 } * (i + 1) as f64 * v * v)
                .sum(),
            Self::Cubic { .. } => {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| (i + 1) as f64 * v * v)
                    .sum::<f64>()
                    + 0.01 * sq.powf(1.5)
            }
            Self::ToyRegression(t) => t.loss(x),
        }
    }

    fn is_pure(&self) -> bool {
        true
    }
}

/// Linear regression `y ~ w . a + b` on seeded Gaussian inputs with noisy targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyRegression {
    pub inputs: Array2<f64>,
    pub targets: Array1<f64>,
}

impl ToyRegression {
    pub fn new(n_rows: usize, n_features: usize, seed: u64) -> Result<Self> {
        if n_rows <= n_features + 1 || n_features == 0 {
            return Err(Error::InvalidConfig(
                "toy regression needs more rows than parameters".into(),
            ));
        }
        let mut rng = rng_from_seed(seed);
        let inputs = Array2::from_shape_fn((n_rows, n_features), |_| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let truth: Vec<f64> = (0..=n_features).map(|i| 0.5 * i as f64 - 1.0).collect();
        let targets = inputs
            .rows()
            .into_iter()
            .map(|r| {
                let noise: f64 = rng.sample(StandardNormal);
                r.iter().zip(&truth).map(|(a, w)| a * w).sum::<f64>()
                    + truth[n_features]
                    + 0.1 * noise
            })
            .collect();
        Ok(Self { inputs, targets })
    }

    /// Weights followed by the bias.
    pub fn n_params(&self) -> usize {
        self.inputs.ncols() + 1
    }

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.inputs.ncols();
        self.inputs
            .rows()
            .into_iter()
            .zip(&self.targets)
            .map(|(r, y)| r.iter().zip(theta).map(|(a, w)| a * w).sum::<f64>() + theta[p] - y)
            .collect()
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let r = self.residuals(theta);
        r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
    }

    /// Exact Hessian `(2/n) [A 1]^T [A 1]`.
    pub fn hessian(&self) -> Array2<f64> {
        let (n, p) = self.inputs.dim();
        let mut aug = Array2::ones((n, p + 1));
        aug.slice_mut(ndarray::s![.., ..p]).assign(&self.inputs);
        aug.t().dot(&aug) * (2.0 / n as f64)
    }

    /// Gradient descent from zero with step `1 / L`; returns the parameters
    /// and the final gradient norm.
    pub fn fit(&self, steps: usize) -> (Vec<f64>, f64) {
        let h = self.hessian();
        let lipschitz = HessianEstimate::from_matrix(&h)
            .map(|e| e.eigenvalues.last().copied().unwrap_or(1.0))
            .unwrap_or(1.0);
        let (n, p) = self.inputs.dim();
        let mut theta = vec![0.0; p + 1];
        let mut grad_norm = f64::INFINITY;
        for _ in 0..steps {
            let r = self.residuals(&theta);
            let mut grad = vec![0.0; p + 1];
            for (row, res) in self.inputs.rows().into_iter().zip(&r) {
                for (g, a) in grad.iter_mut().zip(row.iter()) {
                    *g += 2.0 * res * a / n as f64;
                }
                grad[p] += 2.0 * res / n as f64;
            }
            grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            theta
                .iter_mut()
                .zip(&grad)
                .for_each(|(t, g)| *t -= g / lipschitz);
        }
        (theta, grad_norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_quadratic_recovered() {
        let f = PureFn(|x: &[f64]| x[0] * x[0] + 3.0 * x[1] * x[1]);
        let cfg = ProbeConfig::least_squares(2, 0);
        let (_, est) = probe(&f, &[0.0, 0.0], &cfg).unwrap();
        assert!((est.eigenvalues[0] - 2.0).abs() < 1e-8 && (est.eigenvalues[1] - 6.0).abs() < 1e-8);
        assert_eq!(est.signature, Signature::Minimum);
        assert!((est.condition_number.unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn bowl_sample_bounds_and_determinism() {
        let f = BuiltinObjective::Bowl { dim: 3 };
        let cfg = ProbeConfig {
            rel_loss_tol: 1e6,
            ..ProbeConfig::least_squares(3, 4)
        };
        let s = sample_around(&f, &[0.0; 3], &cfg).unwrap();
        assert_eq!(s.halvings, 0);
        assert!(s
            .ys
            .iter()
            .all(|&y| y >= 0.0 && y <= s.radius * s.radius * (1.0 + 1e-12)));
        assert_eq!(sample_around(&f, &[0.0; 3], &cfg).unwrap(), s);
    }

    #[test]
    fn locality_loop_halves_radius() {
        let f = BuiltinObjective::Bowl { dim: 2 };
        let cfg = ProbeConfig {
            radius_scale: 10.0,
            ..ProbeConfig::least_squares(2, 1)
        };
        let s = sample_around(&f, &[0.0, 0.0], &cfg).unwrap();
        assert!(s.halvings > 0);
        let frac = s.ys.iter().filter(|&&y| y > 0.1).count() as f64 / s.ys.len() as f64;
        assert!(frac < LOCALITY_FRACTION);
        let steep = PureFn(|x: &[f64]| {
            if x.iter().any(|v| *v != 0.0) {
                1.0
            } else {
                0.0
            }
        });
        assert!(matches!(
            sample_around(&steep, &[0.0, 0.0], &cfg),
            Err(Error::LocalityFailure { .. })
        ));
        let bad = PureFn(|x: &[f64]| if x[0] > 0.0 { f64::NAN } else { 0.0 });
        assert!(matches!(
            sample_around(&bad, &[0.0, 0.0], &cfg),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn signatures() {
        assert_eq!(Signature::classify(&[-1.0, 2.0]), Signature::Saddle);
        assert_eq!(Signature::classify(&[-1.0, -2.0]), Signature::Maximum);
        assert!(matches!(
            Signature::classify(&[0.0, 2.0]),
            Signature::Degenerate { .. }
        ));
        let cfg = ProbeConfig::least_squares(2, 2);
        let (_, est) = probe(&BuiltinObjective::Saddle2d, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(est.signature, Signature::Saddle);
        let (_, est) = probe(&BuiltinObjective::Cap { dim: 2 }, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(est.signature, Signature::Maximum);
    }

    #[test]
    fn shell_sampling_needs_ridge() {
        let cfg = ProbeConfig {
            shell: true,
            ..ProbeConfig::least_squares(2, 0)
        };
        assert!(cfg.validate().is_err());
        let cfg = ProbeConfig {
            estimator: Estimator::LeastSquares { ridge: 1e-9 },
            ..cfg
        };
        let (s, est) = probe(&BuiltinObjective::Bowl { dim: 2 }, &[0.0, 0.0], &cfg).unwrap();
        assert!(s
            .xs
            .rows()
            .into_iter()
            .all(|r| (r.dot(&r).sqrt() - s.radius).abs() < 1e-12));
        assert_eq!(est.signature, Signature::Minimum);
    }

    #[test]
    fn report_counts_and_cdf() {
        let saddle =
            HessianEstimate::from_matrix(&Array2::from_diag(&array![-2.0, -1.0, 1.0, 3.0]))
                .unwrap();
        let min =
            HessianEstimate::from_matrix(&Array2::from_diag(&array![0.5, 1.0, 1.0, 4.0])).unwrap();
        let rep = spectrum_report(&[saddle, min], &["early".into(), "late".into()]).unwrap();
        let counts: Vec<_> = rep.entries.iter().map(|e| e.negative_count).collect();
        assert_eq!(counts, vec![2, 0]);
        assert_eq!(rep.bin_edges.len(), HISTOGRAM_BINS + 1);
        assert_eq!(rep.entries[1].ecdf.last().unwrap(), &(4.0, 1.0));
        assert_eq!(rep.entries[1].ecdf[1], (1.0, 0.75));
        assert_eq!(
            rep.entries
                .iter()
                .map(|e| e.histogram.iter().sum::<usize>())
                .sum::<usize>(),
            8
        );
        let dir = tempfile::tempdir().unwrap();
        rep.write(dir.path()).unwrap();
        assert!(dir.path().join("spectrum.json").exists());
    }

    #[test]
    fn toy_regression_converges_and_probes() {
        let t = ToyRegression::new(64, 4, 0).unwrap();
        let (theta, grad) = t.fit(200);
        assert!(grad < 1e-8, "{grad}");
        let f = BuiltinObjective::ToyRegression(t.clone());
        let cfg = ProbeConfig::least_squares(5, 0);
        let (_, est) = probe(&f, &theta, &cfg).unwrap();
        let exact = HessianEstimate::from_matrix(&t.hessian()).unwrap();
        for (a, b) in est.eigenvalues.iter().zip(&exact.eigenvalues) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "{a} vs {b}");
        }
    }
}

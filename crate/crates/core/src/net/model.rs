//! Permutation-invariant set regressor: a per-point tanh encoder, mean pooling
//! over points, and a tanh regression head with a linear output layer.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::manifold::{n_coefficients, rng_from_seed, Quadric};

/// How point clouds are turned into per-point network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Diffusion coordinates kept per point, trivial coordinate included.
    pub d_emb: usize,
    /// Diffusion time of the coordinates.
    pub t: u32,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { d_emb: 25, t: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetModel {
    pub encoder_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
    pub input_dim: usize,
    pub output_dim: usize,
    pub weights: Vec<f64>,
    /// L1 weight on predicted coefficients.
    pub l1_weight: f64,
    pub seed: u64,
    pub embedding: EmbeddingConfig,
}

#[derive(Debug, Clone, Copy)]
struct LayerShape {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl LayerShape {
    fn n_params(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

/// Per-layer activations kept for the backward pass.
pub(crate) struct Trace {
    encoder: Vec<Array2<f64>>,
    pooled: Array1<f64>,
    head: Vec<Array1<f64>>,
    pub(crate) output: Array1<f64>,
}

impl NetModel {
    /// Fresh model with weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` and zero biases.
    pub fn new(
        embedding: EmbeddingConfig,
        quadric_size: usize,
        encoder_widths: Vec<usize>,
        head_widths: Vec<usize>,
        l1_weight: f64,
        seed: u64,
    ) -> Result<Self> {
        if encoder_widths.is_empty() || encoder_widths.contains(&0) || head_widths.contains(&0) {
            return Err(Error::InvalidConfig(
                "layer widths must be positive and the encoder nonempty".into(),
            ));
        }
        if !(l1_weight >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "L1 weight must be nonnegative, got {l1_weight}"
            )));
        }
        let mut model = Self {
            encoder_widths,
            head_widths,
            input_dim: embedding.d_emb + 1,
            output_dim: n_coefficients(quadric_size),
            weights: Vec::new(),
            l1_weight,
            seed,
            embedding,
        };
        let mut rng = rng_from_seed(seed);
        let mut weights = Vec::with_capacity(model.n_params());
        for layer in model.layers() {
            let bound = 1.0 / (layer.fan_in as f64).sqrt();
            weights
                .extend((0..layer.fan_in * layer.fan_out).map(|_| rng.gen_range(-bound..=bound)));
            weights.extend(std::iter::repeat(0.0).take(layer.fan_out));
        }
        model.weights = weights;
        Ok(model)
    }

    /// Side length `K` of the predicted quadric.
    pub fn quadric_size(&self) -> usize {
        let mut k = 0;
        while n_coefficients(k) < self.output_dim {
            k += 1;
        }
        k
    }

    fn layers(&self) -> Vec<LayerShape> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.encoder_widths);
        dims.extend(&self.head_widths);
        dims.push(self.output_dim);
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let l = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset += l.n_params();
                l
            })
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(LayerShape::n_params).sum()
    }

    fn weight_view<'a>(&self, w: &'a [f64], l: &LayerShape) -> (ArrayView2<'a, f64>, &'a [f64]) {
        let wsize = l.fan_in * l.fan_out;
        let mat = ArrayView2::from_shape((l.fan_out, l.fan_in), &w[l.offset..l.offset + wsize])
            .expect("layer layout");
        (mat, &w[l.offset + wsize..l.offset + wsize + l.fan_out])
    }

    /// Stacks `[phi row, loss value]` per point.
    pub fn inputs(&self, phi: &Array2<f64>, loss_axis: &Array1<f64>) -> Result<Array2<f64>> {
        if phi.ncols() + 1 != self.input_dim || phi.nrows() != loss_axis.len() || phi.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("N x {} coordinates and N loss values", self.input_dim - 1),
                got: format!(
                    "{:?} coordinates and {} loss values",
                    phi.dim(),
                    loss_axis.len()
                ),
            });
        }
        let mut x = Array2::zeros((phi.nrows(), self.input_dim));
        x.slice_mut(ndarray::s![.., ..phi.ncols()]).assign(phi);
        x.column_mut(phi.ncols()).assign(loss_axis);
        Ok(x)
    }

    pub(crate) fn forward_with(&self, w: &[f64], x: &Array2<f64>) -> Trace {
        let layers = self.layers();
        let n_enc = self.encoder_widths.len();
        let mut encoder = Vec::with_capacity(n_enc + 1);
        encoder.push(x.clone());
        for l in &layers[..n_enc] {
            let (mat, bias) = self.weight_view(w, l);
            let mut z = encoder.last().expect("input").dot(&mat.t());
            z += &ArrayView1::from(bias);
            z.mapv_inplace(f64::tanh);
            encoder.push(z);
        }
        let last = encoder.last().expect("encoder output");
        let n = last.nrows() as f64;
        // fixed row order keeps the pooled sum deterministic
        let mut pooled = Array1::zeros(last.ncols());
        for row in last.axis_iter(Axis(0)) {
            pooled += &row;
        }
        pooled /= n;
        let mut head = Vec::with_capacity(self.head_widths.len() + 1);
        head.push(pooled.clone());
        let n_head = layers.len() - n_enc;
        for (idx, l) in layers[n_enc..].iter().enumerate() {
            let (mat, bias) = self.weight_view(w, l);
            let mut z = mat.dot(head.last().expect("head input"));
            for (v, b) in z.iter_mut().zip(bias) {
                *v += b;
                if idx + 1 < n_head {
                    *v = v.tanh();
                }
            }
            head.push(z);
        }
        let output = head.pop().expect("output layer");
        Trace {
            encoder,
            pooled,
            head,
            output,
        }
    }

    /// Accumulates `d loss / d weights` into `grad` given `d loss / d output`.
    pub(crate) fn backward_with(
        &self,
        w: &[f64],
        trace: &Trace,
        d_out: &Array1<f64>,
        grad: &mut [f64],
    ) {
        let layers = self.layers();
        let n_enc = self.encoder_widths.len();
        let head_layers = &layers[n_enc..];
        let mut delta = d_out.clone();
        for (idx, l) in head_layers.iter().enumerate().rev() {
            let input = &trace.head[idx];
            let wsize = l.fan_in * l.fan_out;
            for o in 0..l.fan_out {
                let row = &mut grad[l.offset + o * l.fan_in..l.offset + (o + 1) * l.fan_in];
                for (g, &a) in row.iter_mut().zip(input.iter()) {
                    *g += delta[o] * a;
                }
                grad[l.offset + wsize + o] += delta[o];
            }
            let (mat, _) = self.weight_view(w, l);
            let mut back = mat.t().dot(&delta);
            if idx > 0 {
                // input of this layer is a tanh activation
                back.zip_mut_with(input, |d, &a| *d *= 1.0 - a * a);
            }
            delta = back;
        }
        debug_assert_eq!(delta.len(), trace.pooled.len());
        let n = trace.encoder[n_enc].nrows() as f64;
        let out = &trace.encoder[n_enc];
        let mut d_act = Array2::from_shape_fn(out.dim(), |(_, j)| delta[j] / n);
        for (idx, l) in layers[..n_enc].iter().enumerate().rev() {
            let act = &trace.encoder[idx + 1];
            let input = &trace.encoder[idx];
            d_act.zip_mut_with(act, |d, &a| *d *= 1.0 - a * a);
            let gw = d_act.t().dot(input);
            let wsize = l.fan_in * l.fan_out;
            for (g, v) in grad[l.offset..l.offset + wsize].iter_mut().zip(gw.iter()) {
                *g += v;
            }
            for (o, col) in d_act.axis_iter(Axis(1)).enumerate() {
                grad[l.offset + wsize + o] += col.sum();
            }
            if idx > 0 {
                let (mat, _) = self.weight_view(w, l);
                d_act = d_act.dot(&mat);
            }
        }
    }

    /// Raw output vector (upper-triangular coefficients).
    pub fn predict_coefficients(
        &self,
        phi: &Array2<f64>,
        loss_axis: &Array1<f64>,
    ) -> Result<Array1<f64>> {
        let x = self.inputs(phi, loss_axis)?;
        Ok(self.forward_with(&self.weights, &x).output)
    }

    /// Predicted symmetric `K x K` quadratic form.
    pub fn predict(&self, phi: &Array2<f64>, loss_axis: &Array1<f64>) -> Result<Quadric> {
        let coeffs = self.predict_coefficients(phi, loss_axis)?;
        Quadric::from_upper_triangle(coeffs.as_slice().expect("contiguous"), self.quadric_size())
    }

    /// "DCNN" container: magic, u32 input dim, u32 output dim, u32 encoder depth,
    /// encoder widths (u32), u32 head depth, head widths (u32), u32 d_emb, u32 t,
    /// f64 L1 weight, u64 seed, u64 weight count, f64 weights.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        io::write_magic(&mut w, io::MAGIC_MODEL)?;
        io::write_u32(&mut w, self.input_dim)?;
        io::write_u32(&mut w, self.output_dim)?;
        io::write_u32(&mut w, self.encoder_widths.len())?;
        for &width in &self.encoder_widths {
            io::write_u32(&mut w, width)?;
        }
        io::write_u32(&mut w, self.head_widths.len())?;
        for &width in &self.head_widths {
            io::write_u32(&mut w, width)?;
        }
        io::write_u32(&mut w, self.embedding.d_emb)?;
        io::write_u32(&mut w, self.embedding.t as usize)?;
        io::write_f64s(&mut w, [self.l1_weight])?;
        io::write_u64(&mut w, self.seed)?;
        io::write_u64(&mut w, self.weights.len() as u64)?;
        io::write_f64s(&mut w, self.weights.iter().copied())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        io::expect_magic(&mut r, io::MAGIC_MODEL)?;
        let input_dim = io::read_u32(&mut r)? as usize;
        let output_dim = io::read_u32(&mut r)? as usize;
        let n_enc = io::read_u32(&mut r)? as usize;
        let encoder_widths = (0..n_enc)
            .map(|_| io::read_u32(&mut r).map(|v| v as usize))
            .collect::<Result<_>>()?;
        let n_head = io::read_u32(&mut r)? as usize;
        let head_widths = (0..n_head)
            .map(|_| io::read_u32(&mut r).map(|v| v as usize))
            .collect::<Result<_>>()?;
        let d_emb = io::read_u32(&mut r)? as usize;
        let t = io::read_u32(&mut r)?;
        let l1_weight = io::read_f64s(&mut r, 1)?[0];
        let seed = io::read_u64(&mut r)?;
        let count = io::read_u64(&mut r)? as usize;
        let weights = io::read_f64s(&mut r, count)?;
        let model = Self {
            encoder_widths,
            head_widths,
            input_dim,
            output_dim,
            weights,
            l1_weight,
            seed,
            embedding: EmbeddingConfig { d_emb, t },
        };
        if model.n_params() != count || input_dim != d_emb + 1 {
            return Err(Error::Format(format!(
                "checkpoint declares {count} weights, layout needs {}",
                model.n_params()
            )));
        }
        Ok(model)
    }
}

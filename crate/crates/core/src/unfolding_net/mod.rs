//! Deep-unfolded gradient network.
//!
//! Layer `i` maps the current lifted estimate `h` to
//!
//! ```text
//! t = h + δ₁ G h + δ₂ c + δ₃ h
//! z = W t + b
//! h' = relu(z)            (hidden layers)
//! h' = z                  (last layer)
//! ```
//!
//! where `G = ΨᵣᵀΨᵣ` and `c = Ψᵣᵀyᵣ` are fed to every layer. All passes work
//! on `D × B` batches, one sample per column.

mod adam;
pub mod checkpoint;
mod train;

pub use adam::{adam_step, AdamState};
pub use train::{train, EpochStats, TrainSchedule, TrainingSet};

use crate::error::dim_err;
use crate::linalg::max_eigenvalue_psd;
use crate::sounding::POWER_ITERATIONS;
use crate::{Error, RMatrix, RVector, Result};

pub const DELTA1_RANGE: (f64, f64) = (-1.0, 0.0);
pub const DELTA2_RANGE: (f64, f64) = (0.0, 1.0);
pub const DELTA3_RANGE: (f64, f64) = (-1.0, 0.0);

/// Initial value of δ₃ in every layer.
pub const DELTA3_INIT: f64 = -1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    /// `D × D`.
    pub weight: RMatrix,
    pub bias: RVector,
}

impl LayerParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            delta1: 0.0,
            delta2: 0.0,
            delta3: 0.0,
            weight: RMatrix::zeros(dim, dim),
            bias: RVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    /// Parameter tensors in a fixed order: δ₁, δ₂, δ₃, weight, bias.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            std::slice::from_ref(&self.delta1),
            std::slice::from_ref(&self.delta2),
            std::slice::from_ref(&self.delta3),
            self.weight.as_slice(),
            self.bias.as_slice(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            std::slice::from_mut(&mut self.delta1),
            std::slice::from_mut(&mut self.delta2),
            std::slice::from_mut(&mut self.delta3),
            self.weight.as_mut_slice(),
            self.bias.as_mut_slice(),
        ]
    }

    /// Clamps the step parameters onto their admissible intervals.
    pub fn project(&mut self) {
        self.delta1 = self.delta1.clamp(DELTA1_RANGE.0, DELTA1_RANGE.1);
        self.delta2 = self.delta2.clamp(DELTA2_RANGE.0, DELTA2_RANGE.1);
        self.delta3 = self.delta3.clamp(DELTA3_RANGE.0, DELTA3_RANGE.1);
    }

    pub fn deltas_in_range(&self) -> bool {
        let within = |x: f64, (lo, hi): (f64, f64)| lo <= x && x <= hi;
        within(self.delta1, DELTA1_RANGE)
            && within(self.delta2, DELTA2_RANGE)
            && within(self.delta3, DELTA3_RANGE)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldingParams {
    pub layers: Vec<LayerParams>,
}

impl UnfoldingParams {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::Config("network needs at least one layer".into()));
        };
        let dim = first.dim();
        for (i, l) in layers.iter().enumerate() {
            if l.dim() != dim || l.weight.shape() != (dim, dim) {
                return Err(dim_err(format!("layer {i} does not match dimension {dim}")));
            }
        }
        Ok(Self { layers })
    }

    pub fn dim(&self) -> usize {
        self.layers[0].dim()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| 3 + l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn project(&mut self) {
        self.layers.iter_mut().for_each(LayerParams::project);
    }
}

/// Warm start that reproduces the classic gradient step: δ₁ = −β₀, δ₂ = β₀,
/// δ₃ = −10⁻³, identity weights and zero bias, with
/// β₀ = min(0.9/λ_max(G), 1).
pub fn init_params(
    m: usize,
    n: usize,
    layers: usize,
    gram_real: &RMatrix,
) -> Result<UnfoldingParams> {
    let dim = 2 * m * n;
    if gram_real.shape() != (dim, dim) {
        return Err(dim_err(format!(
            "gram is {:?}, expected {dim}×{dim}",
            gram_real.shape()
        )));
    }
    let lambda_max = max_eigenvalue_psd(gram_real, POWER_ITERATIONS);
    let beta0 = if lambda_max > 0.0 {
        (0.9 / lambda_max).min(1.0)
    } else {
        1.0
    };
    let layer = LayerParams {
        delta1: -beta0,
        delta2: beta0,
        delta3: DELTA3_INIT,
        weight: RMatrix::identity(dim, dim),
        bias: RVector::zeros(dim),
    };
    UnfoldingParams::new(vec![layer; layers])
}

/// Activation applied after every layer except the last.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HiddenActivation {
    Relu,
    Identity,
}

#[derive(Clone, Debug)]
pub struct LayerCache {
    /// Input iterate `h⁽ⁱ⁻¹⁾`.
    pub h_in: RMatrix,
    /// `G h⁽ⁱ⁻¹⁾`.
    pub g_h: RMatrix,
    /// Combined vector `t⁽ⁱ⁾`.
    pub t: RMatrix,
    /// Pre-activation `z⁽ⁱ⁾`.
    pub z: RMatrix,
}

#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub layers: Vec<LayerCache>,
    pub output: RMatrix,
    pub activation: HiddenActivation,
}

/// `dst += alpha · src`.
fn add_scaled(dst: &mut RMatrix, alpha: f64, src: &RMatrix) {
    dst.zip_apply(src, |d, s| *d += alpha * s);
}

fn relu_in_place(m: &mut RMatrix) {
    m.apply(|x| *x = x.max(0.0));
}

fn check_inputs(params: &UnfoldingParams, g: &RMatrix, c: &RMatrix) -> Result<()> {
    let d = params.dim();
    if g.shape() != (d, d) {
        return Err(dim_err(format!(
            "gram is {:?}, network dimension is {d}",
            g.shape()
        )));
    }
    if c.nrows() != d {
        return Err(dim_err(format!(
            "statistic has {} rows, network dimension is {d}",
            c.nrows()
        )));
    }
    Ok(())
}

/// Batched forward pass; `c` and the optional `h0` are `D × B`.
pub fn forward_batch(
    params: &UnfoldingParams,
    activation: HiddenActivation,
    g: &RMatrix,
    c: &RMatrix,
    h0: Option<&RMatrix>,
) -> Result<ForwardCache> {
    check_inputs(params, g, c)?;
    let (d, b) = c.shape();
    let mut h = match h0 {
        Some(h0) if h0.shape() != (d, b) => {
            return Err(dim_err(format!(
                "h0 is {:?}, expected {:?}",
                h0.shape(),
                (d, b)
            )))
        }
        Some(h0) => h0.clone(),
        None => RMatrix::zeros(d, b),
    };
    let last = params.num_layers() - 1;
    let mut caches = Vec::with_capacity(params.num_layers());
    for (i, layer) in params.layers.iter().enumerate() {
        let g_h = g * &h;
        let mut t = &h * (1.0 + layer.delta3);
        add_scaled(&mut t, layer.delta1, &g_h);
        add_scaled(&mut t, layer.delta2, c);
        let mut z = &layer.weight * &t;
        for mut col in z.column_iter_mut() {
            col += &layer.bias;
        }
        let mut next = z.clone();
        if i < last && activation == HiddenActivation::Relu {
            relu_in_place(&mut next);
        }
        caches.push(LayerCache { h_in: h, g_h, t, z });
        h = next;
    }
    Ok(ForwardCache {
        layers: caches,
        output: h,
        activation,
    })
}

/// Single-sample forward pass with relu hidden activations.
pub fn forward(
    params: &UnfoldingParams,
    g: &RMatrix,
    c: &RVector,
    h0: &RVector,
) -> Result<(RVector, ForwardCache)> {
    let c = RMatrix::from_column_slice(c.len(), 1, c.as_slice());
    let h0 = RMatrix::from_column_slice(h0.len(), 1, h0.as_slice());
    let cache = forward_batch(params, HiddenActivation::Relu, g, &c, Some(&h0))?;
    let out = RVector::from_column_slice(cache.output.as_slice());
    Ok((out, cache))
}

/// `‖ĥ − h‖² / ‖h‖²`.
pub fn nmse_loss(estimate: &RVector, truth: &RVector) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(dim_err(format!(
            "estimate length {} != truth length {}",
            estimate.len(),
            truth.len()
        )));
    }
    let denom = truth.norm_squared();
    if denom == 0.0 {
        return Err(Error::ZeroNormTruth);
    }
    Ok((estimate - truth).norm_squared() / denom)
}

/// Per-column NMSE of a `D × B` batch.
pub fn nmse_per_sample(estimates: &RMatrix, truths: &RMatrix) -> Result<Vec<f64>> {
    if estimates.shape() != truths.shape() {
        return Err(dim_err(format!(
            "estimates {:?} vs truths {:?}",
            estimates.shape(),
            truths.shape()
        )));
    }
    estimates
        .column_iter()
        .zip(truths.column_iter())
        .map(|(e, t)| {
            let denom = t.norm_squared();
            if denom == 0.0 {
                Err(Error::ZeroNormTruth)
            } else {
                Ok((e - t).norm_squared() / denom)
            }
        })
        .collect()
}

/// Gradients with the same layout as [`UnfoldingParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl Gradients {
    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())))
    }
}

/// Exact gradients of the batch-mean NMSE with respect to every parameter.
///
/// Returns the batch loss alongside the gradients.
pub fn backward_batch(
    params: &UnfoldingParams,
    cache: &ForwardCache,
    g: &RMatrix,
    c: &RMatrix,
    truths: &RMatrix,
) -> Result<(f64, Gradients)> {
    check_inputs(params, g, c)?;
    if cache.layers.len() != params.num_layers()
        || cache.output.shape() != c.shape()
        || truths.shape() != c.shape()
    {
        return Err(dim_err("forward cache does not match parameters or batch"));
    }
    let batch = c.ncols() as f64;
    let per_sample = nmse_per_sample(&cache.output, truths)?;
    let loss = per_sample.iter().sum::<f64>() / batch;

    // dL/dĥ for each column: 2(ĥ − h) / (‖h‖² B).
    let mut grad_h = &cache.output - truths;
    for (mut col, t) in grad_h.column_iter_mut().zip(truths.column_iter()) {
        col *= 2.0 / (t.norm_squared() * batch);
    }

    let g_t = g.transpose();
    let last = params.num_layers() - 1;
    let mut layers = vec![LayerParams::zeros(0); params.num_layers()];
    for i in (0..params.num_layers()).rev() {
        let layer = &params.layers[i];
        let lc = &cache.layers[i];
        let mut grad_z = grad_h;
        if i < last && cache.activation == HiddenActivation::Relu {
            grad_z.zip_apply(&lc.z, |gz, z| {
                if z <= 0.0 {
                    *gz = 0.0
                }
            });
        }
        let weight = &grad_z * lc.t.transpose();
        let bias = grad_z.column_sum();
        let grad_t = layer.weight.transpose() * &grad_z;
        let delta1 = grad_t.dot(&lc.g_h);
        let delta2 = grad_t.dot(c);
        let delta3 = grad_t.dot(&lc.h_in);
        let mut upstream = &g_t * &grad_t;
        upstream *= layer.delta1;
        add_scaled(&mut upstream, 1.0 + layer.delta3, &grad_t);
        grad_h = upstream;
        layers[i] = LayerParams {
            delta1,
            delta2,
            delta3,
            weight,
            bias,
        };
    }
    Ok((loss, Gradients { layers }))
}

/// Single-sample backward pass.
pub fn backward(
    params: &UnfoldingParams,
    cache: &ForwardCache,
    g: &RMatrix,
    c: &RVector,
    truth: &RVector,
) -> Result<Gradients> {
    let c = RMatrix::from_column_slice(c.len(), 1, c.as_slice());
    let truth = RMatrix::from_column_slice(truth.len(), 1, truth.as_slice());
    backward_batch(params, cache, g, &c, &truth).map(|(_, grads)| grads)
}

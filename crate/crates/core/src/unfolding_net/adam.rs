use super::{Gradients, UnfoldingParams};
use crate::error::dim_err;
use crate::{Error, Result};

/// Adam moments for every parameter tensor of an [`UnfoldingParams`].
#[derive(Clone, Debug)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &UnfoldingParams, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .layers
            .iter()
            .flat_map(|l| l.tensors().map(|t| vec![0.0; t.len()]))
            .collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update followed by the δ projection.
pub fn adam_step(
    params: &mut UnfoldingParams,
    grads: &Gradients,
    state: &mut AdamState,
) -> Result<()> {
    if grads.layers.len() != params.layers.len() || state.first.len() != 5 * params.layers.len() {
        return Err(dim_err(
            "gradients or optimizer state do not match the parameters",
        ));
    }
    for (i, (p, g)) in params.layers.iter().zip(&grads.layers).enumerate() {
        for (k, (pt, gt)) in p.tensors().iter().zip(g.tensors()).enumerate() {
            if pt.len() != gt.len() || state.first[5 * i + k].len() != pt.len() {
                return Err(dim_err(format!(
                    "tensor {k} of layer {i} has mismatched shape"
                )));
            }
            if gt.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(format!("tensor {k} of layer {i}")));
            }
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.eps;

    for (i, (p, g)) in params.layers.iter_mut().zip(&grads.layers).enumerate() {
        for (k, (pt, gt)) in p.tensors_mut().into_iter().zip(g.tensors()).enumerate() {
            let m = &mut state.first[5 * i + k];
            let v = &mut state.second[5 * i + k];
            for j in 0..pt.len() {
                let grad = gt[j];
                m[j] = b1 * m[j] + (1.0 - b1) * grad;
                v[j] = b2 * v[j] + (1.0 - b2) * grad * grad;
                let m_hat = m[j] / correction1;
                let v_hat = v[j] / correction2;
                pt[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        p.project();
    }
    Ok(())
}

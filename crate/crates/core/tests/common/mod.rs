//! Random tiny networks and a central-difference gradient check.

#![allow(dead_code)]

use rand::{Rng as _, SeedableRng};
use ris_unfold::seed::Rng;
use ris_unfold::unfolding_net::{
    backward_batch, forward_batch, HiddenActivation, LayerParams, UnfoldingParams,
};
use ris_unfold::{RMatrix, RVector};

pub const STEP: f64 = 1e-6;

pub struct Problem {
    pub params: UnfoldingParams,
    pub gram: RMatrix,
    pub stats: RMatrix,
    pub truths: RMatrix,
}

pub fn random_problem(seed: u64, dim: usize, layers: usize, batch: usize) -> Problem {
    let mut rng = Rng::seed_from_u64(seed);
    let mut u = |scale: f64| scale * (rng.random::<f64>() - 0.5);
    let layers = (0..layers)
        .map(|_| LayerParams {
            delta1: -0.5 + u(0.8),
            delta2: 0.5 + u(0.8),
            delta3: -0.5 + u(0.8),
            weight: RMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 } + u(0.8)),
            bias: RVector::from_fn(dim, |_, _| u(0.5)),
        })
        .collect();
    let a = RMatrix::from_fn(dim, dim, |_, _| u(1.0));
    let gram = a.transpose() * &a;
    let truths = RMatrix::from_fn(dim, batch, |_, _| u(2.0));
    let stats = &gram * &truths + RMatrix::from_fn(dim, batch, |_, _| u(0.1));
    Problem {
        params: UnfoldingParams::new(layers).unwrap(),
        gram,
        stats,
        truths,
    }
}

pub fn loss(p: &Problem, params: &UnfoldingParams) -> f64 {
    let cache = forward_batch(params, HiddenActivation::Relu, &p.gram, &p.stats, None).unwrap();
    let b = p.stats.ncols() as f64;
    cache
        .output
        .column_iter()
        .zip(p.truths.column_iter())
        .map(|(e, t)| (e - t).norm_squared() / t.norm_squared())
        .sum::<f64>()
        / b
}

/// Worst norm-wise relative error `‖a − n‖∞ / ‖n‖∞` over the parameter
/// tensors (δ₁, δ₂, δ₃, weight, bias of every layer). Coordinates whose
/// stencil straddles a relu kink are skipped.
pub fn worst_relative_error(p: &Problem) -> (f64, usize) {
    let cache = forward_batch(&p.params, HiddenActivation::Relu, &p.gram, &p.stats, None).unwrap();
    let (_, grads) = backward_batch(&p.params, &cache, &p.gram, &p.stats, &p.truths).unwrap();
    let l0 = loss(p, &p.params);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for li in 0..p.params.num_layers() {
        for ti in 0..5 {
            let len = p.params.layers[li].tensors()[ti].len();
            let mut max_diff: f64 = 0.0;
            let mut max_numeric: f64 = 0.0;
            for j in 0..len {
                let analytic = grads.layers[li].tensors()[ti][j];
                let mut plus = p.params.clone();
                plus.layers[li].tensors_mut()[ti][j] += STEP;
                let mut minus = p.params.clone();
                minus.layers[li].tensors_mut()[ti][j] -= STEP;
                let (lp, lm) = (loss(p, &plus), loss(p, &minus));
                let numeric = (lp - lm) / (2.0 * STEP);
                // One-sided differences disagree at a kink, where the loss is
                // not differentiable.
                let right = (lp - l0) / STEP;
                let left = (l0 - lm) / STEP;
                if (right - left).abs() > 1e-3 * (1.0 + numeric.abs()) {
                    continue;
                }
                max_diff = max_diff.max((analytic - numeric).abs());
                max_numeric = max_numeric.max(numeric.abs());
                checked += 1;
            }
            if max_numeric > 0.0 {
                worst = worst.max(max_diff / max_numeric);
            } else {
                assert!(
                    max_diff <= 1e-12,
                    "layer {li} tensor {ti}: zero FD gradient but analytic differs"
                );
            }
        }
    }
    (worst, checked)
}

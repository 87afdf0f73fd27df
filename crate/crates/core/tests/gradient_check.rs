//! Central finite differences against the hand-written backward pass.

mod common;

use common::{random_problem, worst_relative_error, STEP};
use ris_unfold::unfolding_net::{backward_batch, forward_batch, HiddenActivation, UnfoldingParams};

#[test]
fn analytic_gradients_match_central_differences() {
    for seed in 0..20 {
        let p = random_problem(seed, 8, 3, 2);
        let (worst, checked) = worst_relative_error(&p);
        assert!(
            checked > 200,
            "seed {seed}: only {checked} coordinates checked"
        );
        assert!(worst <= 1e-6, "seed {seed}: worst relative error {worst:e}");
    }
}

#[test]
fn linear_network_gradients_match() {
    let p = random_problem(99, 6, 2, 3);
    let cache = forward_batch(
        &p.params,
        HiddenActivation::Identity,
        &p.gram,
        &p.stats,
        None,
    )
    .unwrap();
    let (_, grads) = backward_batch(&p.params, &cache, &p.gram, &p.stats, &p.truths).unwrap();
    let lin_loss = |params: &UnfoldingParams| {
        let c = forward_batch(params, HiddenActivation::Identity, &p.gram, &p.stats, None).unwrap();
        c.output
            .column_iter()
            .zip(p.truths.column_iter())
            .map(|(e, t)| (e - t).norm_squared() / t.norm_squared())
            .sum::<f64>()
            / 3.0
    };
    let mut plus = p.params.clone();
    plus.layers[0].delta1 += STEP;
    let mut minus = p.params.clone();
    minus.layers[0].delta1 -= STEP;
    let numeric = (lin_loss(&plus) - lin_loss(&minus)) / (2.0 * STEP);
    let analytic = grads.layers[0].delta1;
    assert!((analytic - numeric).abs() <= 1e-6 * analytic.abs().max(1e-4));
}

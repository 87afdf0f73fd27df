use rayon::prelude::*;
use std::ops::Range;

use crate::error::dim_err;
use crate::estimators::{
    lambda_reference, reg_gradient_descent, svt_nuclear_solve, GdConfig, LeastSquares, SvtConfig,
};
use crate::linalg::lift_vector;
use crate::sounding::MeasurementModel;
use crate::unfolding_net::{forward_batch, HiddenActivation, UnfoldingParams};
use crate::{RMatrix, Result};

use super::Dataset;

/// Samples per parallel evaluation chunk.
const CHUNK: usize = 256;

/// Anything that maps observations to lifted channel estimates.
pub trait Estimator: Sync {
    /// Estimates for samples `range` of `data`, one column per sample.
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix>;
}

/// Returns the ground truth; NMSE 0 by construction.
pub struct OracleEstimator;

impl Estimator for OracleEstimator {
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix> {
        Ok(data.truths.columns(range.start, range.len()).into_owned())
    }
}

/// Always returns zero; NMSE 1 by construction.
pub struct ZeroEstimator;

impl Estimator for ZeroEstimator {
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix> {
        Ok(RMatrix::zeros(data.truths.nrows(), range.len()))
    }
}

fn per_sample(
    data: &Dataset,
    range: Range<usize>,
    f: impl Fn(usize) -> Result<crate::CVector>,
) -> Result<RMatrix> {
    let mut out = RMatrix::zeros(data.truths.nrows(), range.len());
    for (j, i) in range.enumerate() {
        out.set_column(j, &lift_vector(&f(i)?));
    }
    Ok(out)
}

fn same_geometry(a: &MeasurementModel, b: &MeasurementModel) -> Result<()> {
    if a.psi.shape() != b.psi.shape() {
        return Err(dim_err(format!(
            "estimator built for Ψ {:?}, dataset uses {:?}",
            a.psi.shape(),
            b.psi.shape()
        )));
    }
    Ok(())
}

/// Minimum-norm least squares with the pseudoinverse computed once.
pub struct LsEstimator {
    solver: LeastSquares,
    model: MeasurementModel,
}

impl LsEstimator {
    pub fn new(model: &MeasurementModel) -> Self {
        Self {
            solver: LeastSquares::new(model),
            model: model.clone(),
        }
    }
}

impl Estimator for LsEstimator {
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix> {
        same_geometry(&self.model, &data.model)?;
        per_sample(data, range, |i| self.solver.estimate(&data.observations[i]))
    }
}

/// Regularisation weight for the iterative baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaChoice {
    /// Reference formula evaluated at each sample's noise variance.
    Reference,
    Fixed(f64),
}

impl LambdaChoice {
    fn resolve(&self, model: &MeasurementModel, noise_var: f64) -> f64 {
        match *self {
            LambdaChoice::Reference => {
                lambda_reference(noise_var, model.m(), model.n(), model.n_w(), model.k())
            }
            LambdaChoice::Fixed(l) => l,
        }
    }
}

pub struct GdEstimator {
    pub lambda: LambdaChoice,
    pub max_iters: usize,
    pub tol: f64,
}

impl Estimator for GdEstimator {
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix> {
        let model = &data.model;
        per_sample(data, range, |i| {
            let mut cfg = GdConfig::for_model(model, self.lambda.resolve(model, data.noise_var[i]));
            cfg.max_iters = self.max_iters;
            cfg.tol = self.tol;
            reg_gradient_descent(model, &data.observations[i], &cfg, None)
        })
    }
}

pub struct SvtEstimator {
    pub lambda: LambdaChoice,
    pub max_iters: usize,
    pub tol: f64,
}

impl Estimator for SvtEstimator {
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix> {
        let model = &data.model;
        per_sample(data, range, |i| {
            let mut cfg =
                SvtConfig::for_model(model, self.lambda.resolve(model, data.noise_var[i]));
            cfg.max_iters = self.max_iters;
            cfg.tol = self.tol;
            svt_nuclear_solve(model, &data.observations[i], &cfg)
        })
    }
}

pub struct UnfoldingEstimator<'a> {
    pub params: &'a UnfoldingParams,
}

impl Estimator for UnfoldingEstimator<'_> {
    fn estimate(&self, data: &Dataset, range: Range<usize>) -> Result<RMatrix> {
        let stats = data.stats.columns(range.start, range.len()).into_owned();
        Ok(forward_batch(
            self.params,
            HiddenActivation::Relu,
            data.gram(),
            &stats,
            None,
        )?
        .output)
    }
}

/// Mean per-sample NMSE of `estimator` over `data`.
///
/// Chunks run in parallel; the per-sample errors are summed in sample order
/// so the result does not depend on the thread count.
pub fn evaluate(estimator: &dyn Estimator, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(crate::Error::EmptyDataset);
    }
    let n = data.len();
    let chunks: Vec<Range<usize>> = (0..n)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(n))
        .collect();
    let errors: Vec<Vec<f64>> = chunks
        .into_par_iter()
        .map(|range| {
            let est = estimator.estimate(data, range.clone())?;
            let truth = data.truths.columns(range.start, range.len());
            Ok(est
                .column_iter()
                .zip(truth.column_iter())
                .map(|(e, t)| (e - t).norm_squared() / t.norm_squared())
                .collect())
        })
        .collect::<Result<_>>()?;
    let total: f64 = errors.iter().flatten().sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{ChannelConfig, SineRange};
    use crate::experiments::{gen_dataset, SnrPolicy};
    use std::sync::Arc;

    fn toy(snr: f64, n: usize) -> Dataset {
        let channel = ChannelConfig {
            m: 2,
            n: 4,
            l1: 1,
            l2: 1,
            var_los: 1.0,
            var_nlos: 0.01,
            angle_sine_range: SineRange::default(),
        };
        let model = Arc::new(MeasurementModel::dft(2, 4, 4, 2).unwrap());
        gen_dataset(&channel, model, &SnrPolicy::Fixed(snr), n, 1).unwrap()
    }

    #[test]
    fn oracle_and_zero() {
        let data = toy(10.0, 300);
        assert_eq!(evaluate(&OracleEstimator, &data).unwrap(), 0.0);
        assert!((evaluate(&ZeroEstimator, &data).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ls_exact_on_noiseless_toy() {
        let data = toy(f64::INFINITY, 50);
        let nmse = evaluate(&LsEstimator::new(&data.model), &data).unwrap();
        assert!(nmse <= 1e-20, "{nmse}");
    }

    #[test]
    fn iterative_baselines_on_noiseless_toy() {
        let data = toy(f64::INFINITY, 20);
        let gd = GdEstimator {
            lambda: LambdaChoice::Reference,
            max_iters: 5000,
            tol: 1e-12,
        };
        assert!(evaluate(&gd, &data).unwrap() <= 1e-8);
        let svt = SvtEstimator {
            lambda: LambdaChoice::Reference,
            max_iters: 5000,
            tol: 1e-12,
        };
        assert!(evaluate(&svt, &data).unwrap() <= 1e-8);
    }

    #[test]
    fn mismatched_ls_rejected() {
        let data = toy(10.0, 5);
        let other = MeasurementModel::dft(2, 4, 3, 2).unwrap();
        assert!(evaluate(&LsEstimator::new(&other), &data).is_err());
    }
}

//! Model-based baselines for recovering `h_c` from `(Ψ, y)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::dim_err;
use crate::linalg::{singular_values, unvectorize, vectorize};
use crate::sounding::MeasurementModel;
use crate::{CMatrix, CVector, Error, Result};

/// Singular values below this fraction of σ₁ are treated as zero by the
/// pseudoinverse.
pub const PINV_REL_CUTOFF: f64 = 1e-10;

/// Minimum-norm least squares `Ψ⁺ y` with a precomputed pseudoinverse.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pinv: CMatrix,
}

impl LeastSquares {
    pub fn new(model: &MeasurementModel) -> Self {
        Self {
            pinv: pseudo_inverse(&model.psi, PINV_REL_CUTOFF),
        }
    }

    pub fn pinv(&self) -> &CMatrix {
        &self.pinv
    }

    pub fn estimate(&self, y: &CVector) -> Result<CVector> {
        if y.len() != self.pinv.ncols() {
            return Err(dim_err(format!(
                "observation length {} != {}",
                y.len(),
                self.pinv.ncols()
            )));
        }
        Ok(&self.pinv * y)
    }
}

fn pseudo_inverse(a: &CMatrix, rel_cutoff: f64) -> CMatrix {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("U requested");
    let v_t = svd.v_t.expect("Vᴴ requested");
    let top = svd.singular_values.max();
    let cutoff = rel_cutoff * top;
    let mut pinv = CMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let vi = v_t.row(i).adjoint();
            let ui = u.column(i);
            pinv += (vi * ui.adjoint()) * Complex64::new(1.0 / s, 0.0);
        }
    }
    pinv
}

pub fn ls_estimate(model: &MeasurementModel, y: &CVector) -> Result<CVector> {
    LeastSquares::new(model).estimate(y)
}

/// Reference regularisation weight `4σ² √(MN(M+N) ln(M+N) / (N_W K))`.
pub fn lambda_reference(sigma2: f64, m: usize, n: usize, n_w: usize, k: usize) -> f64 {
    let (m, n, n_w, k) = (m as f64, n as f64, n_w as f64, k as f64);
    4.0 * sigma2 * (m * n * (m + n) * (m + n).ln() / (n_w * k)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    /// β ∈ (0, 1).
    pub step_size: f64,
    pub lambda: f64,
    /// Added to a zero iterate norm in the regulariser denominator.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop when `‖h⁽ⁱ⁾ − h⁽ⁱ⁻¹⁾‖ ≤ tol · ‖h⁽ⁱ⁾‖`.
    pub tol: f64,
}

impl GdConfig {
    /// β = 0.9/λ_max(ΨᵣᵀΨᵣ) (capped below 1), ε = 10⁻¹², tol = 10⁻⁸,
    /// 5000 iterations.
    pub fn for_model(model: &MeasurementModel, lambda: f64) -> Self {
        let beta = (0.9 / model.gram_norm).min(0.9);
        Self {
            step_size: beta,
            lambda,
            epsilon: 1e-12,
            max_iters: 5000,
            tol: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size < 1.0) {
            return Err(Error::Config(format!(
                "step_size = {} must lie in (0, 1)",
                self.step_size
            )));
        }
        if !(self.lambda >= 0.0)
            || !(self.epsilon > 0.0)
            || !(self.tol > 0.0)
            || self.max_iters == 0
        {
            return Err(Error::Config(format!(
                "invalid gradient-descent settings {self:?}"
            )));
        }
        Ok(())
    }
}

/// Outcome of an iterative solver.
#[derive(Clone, Debug)]
pub struct Solution {
    pub estimate: CVector,
    pub iterations: usize,
    /// Objective value at the start point followed by one entry per iteration.
    pub objective: Vec<f64>,
}

fn check_observation(model: &MeasurementModel, y: &CVector) -> Result<()> {
    if y.len() != model.psi.nrows() {
        return Err(dim_err(format!(
            "observation length {} != {}",
            y.len(),
            model.psi.nrows()
        )));
    }
    Ok(())
}

fn residual_sq(model: &MeasurementModel, y: &CVector, h: &CVector) -> f64 {
    (y - &model.psi * h).norm_squared()
}

/// `‖y − Ψh‖² + λ‖h‖₂`, the objective minimised by [`reg_gradient_descent`].
pub fn frobenius_objective(model: &MeasurementModel, y: &CVector, h: &CVector, lambda: f64) -> f64 {
    residual_sq(model, y, h) + lambda * h.norm()
}

/// `‖y − Ψh‖² + λ‖mat(h)‖_*`.
pub fn nuclear_objective(model: &MeasurementModel, y: &CVector, h: &CVector, lambda: f64) -> f64 {
    let mat = unvectorize(h, model.m(), model.n());
    residual_sq(model, y, h) + lambda * singular_values(&mat).iter().sum::<f64>()
}

pub fn reg_gradient_descent(
    model: &MeasurementModel,
    y: &CVector,
    cfg: &GdConfig,
    h0: Option<&CVector>,
) -> Result<CVector> {
    reg_gradient_descent_traced(model, y, cfg, h0).map(|s| s.estimate)
}

pub fn reg_gradient_descent_traced(
    model: &MeasurementModel,
    y: &CVector,
    cfg: &GdConfig,
    h0: Option<&CVector>,
) -> Result<Solution> {
    cfg.validate()?;
    check_observation(model, y)?;
    let dim = model.psi.ncols();
    let mut h = match h0 {
        Some(h0) if h0.len() != dim => {
            return Err(dim_err(format!("h0 length {} != {dim}", h0.len())))
        }
        Some(h0) => h0.clone(),
        None => CVector::zeros(dim),
    };
    let psi_h_y = model.psi.adjoint() * y;
    let beta = Complex64::new(cfg.step_size, 0.0);
    let mut objective = vec![frobenius_objective(model, y, &h, cfg.lambda)];
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        let norm = h.norm();
        let denom = if norm == 0.0 {
            norm + cfg.epsilon
        } else {
            norm
        };
        let mut grad = &model.gram * &h - &psi_h_y;
        grad += &h * Complex64::new(cfg.lambda / denom, 0.0);
        let next = &h - grad * beta;
        if !next.norm().is_finite() {
            return Err(Error::Divergence {
                method: "gradient descent",
                iteration: it,
            });
        }
        let change = (&next - &h).norm();
        h = next;
        iterations = it;
        objective.push(frobenius_objective(model, y, &h, cfg.lambda));
        if change <= cfg.tol * h.norm() {
            break;
        }
    }
    Ok(Solution {
        estimate: h,
        iterations,
        objective,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvtConfig {
    pub lambda: f64,
    /// η; must not exceed 1/‖ΨᴴΨ‖₂.
    pub step_size: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl SvtConfig {
    /// η = 0.99/λ_max(ΨᴴΨ), tol = 10⁻⁸, 5000 iterations.
    pub fn for_model(model: &MeasurementModel, lambda: f64) -> Self {
        Self {
            lambda,
            step_size: 0.99 / model.gram_norm,
            max_iters: 5000,
            tol: 1e-8,
        }
    }

    pub fn validate(&self, model: &MeasurementModel) -> Result<()> {
        if !(self.step_size > 0.0) || self.step_size * model.gram_norm > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "SVT step {} exceeds 1/‖ΨᴴΨ‖ = {}",
                self.step_size,
                1.0 / model.gram_norm
            )));
        }
        if !(self.lambda >= 0.0) || !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Config(format!("invalid SVT settings {self:?}")));
        }
        Ok(())
    }
}

/// Soft-thresholds the singular values of `mat` by `tau`.
pub fn singular_value_threshold(mat: CMatrix, tau: f64) -> CMatrix {
    if tau <= 0.0 {
        return mat;
    }
    let mut svd = mat.svd(true, true);
    svd.singular_values.apply(|s| *s = (*s - tau).max(0.0));
    svd.recompose().expect("U and Vᴴ were computed")
}

pub fn svt_nuclear_solve(
    model: &MeasurementModel,
    y: &CVector,
    cfg: &SvtConfig,
) -> Result<CVector> {
    svt_nuclear_solve_traced(model, y, cfg).map(|s| s.estimate)
}

/// Proximal gradient with singular-value soft-thresholding, started at 0.
pub fn svt_nuclear_solve_traced(
    model: &MeasurementModel,
    y: &CVector,
    cfg: &SvtConfig,
) -> Result<Solution> {
    cfg.validate(model)?;
    check_observation(model, y)?;
    let (m, n) = (model.m(), model.n());
    let eta = Complex64::new(cfg.step_size, 0.0);
    let tau = cfg.step_size * cfg.lambda / 2.0;
    let psi_h = model.psi.adjoint();
    let mut h = CVector::zeros(m * n);
    let mut objective = vec![nuclear_objective(model, y, &h, cfg.lambda)];
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        let step = &h - &psi_h * (&model.psi * &h - y) * eta;
        let next = vectorize(&singular_value_threshold(unvectorize(&step, m, n), tau));
        if !next.norm().is_finite() {
            return Err(Error::Divergence {
                method: "singular-value thresholding",
                iteration: it,
            });
        }
        let change = (&next - &h).norm();
        h = next;
        iterations = it;
        objective.push(nuclear_objective(model, y, &h, cfg.lambda));
        if change <= cfg.tol * h.norm() {
            break;
        }
    }
    Ok(Solution {
        estimate: h,
        iterations,
        objective,
    })
}

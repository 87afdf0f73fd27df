//! Channel sounding: phase schedule, combiner, Kronecker measurement matrix
//! and noisy observations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::dim_err;
use crate::linalg::{
    complex_gaussian, kron, lift_matrix, lift_vector, max_eigenvalue_psd, vectorize,
};
use crate::seed::Rng;
use crate::{CMatrix, CVector, Error, RMatrix, RVector, Result};

/// Power iterations used for the Gram spectral-norm estimate.
pub const POWER_ITERATIONS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundingConfig {
    /// Channel uses (RIS phase configurations).
    pub k: usize,
    /// Combiner columns at the BS.
    pub n_w: usize,
    /// SNR γ = 1/σ² in dB; `+inf` disables noise.
    pub snr_db: f64,
}

impl SoundingConfig {
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::Config(format!(
                "k = {} must lie in 1..=n ({n})",
                self.k
            )));
        }
        if self.n_w == 0 || self.n_w > m {
            return Err(Error::Config(format!(
                "n_w = {} must lie in 1..=m ({m})",
                self.n_w
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("snr_db is NaN".into()));
        }
        Ok(())
    }
}

/// `σ² = 10^(−snr_db/10)`; an infinite SNR means no noise.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

fn dft_columns(size: usize, count: usize) -> CMatrix {
    CMatrix::from_fn(size, count, |n, k| {
        // Reduce the exponent mod size first so large products stay exact.
        let e = (n * k) % size;
        Complex64::from_polar(1.0, -2.0 * PI * e as f64 / size as f64)
    })
}

/// First `k` columns of the `n × n` DFT matrix.
pub fn build_phase_schedule(n: usize, k: usize) -> Result<CMatrix> {
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "phase schedule needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    Ok(dft_columns(n, k))
}

/// First `n_w` columns of the unitary `m × m` DFT matrix.
pub fn build_combiner(m: usize, n_w: usize) -> Result<CMatrix> {
    if n_w == 0 || n_w > m {
        return Err(Error::Config(format!(
            "combiner needs 1 <= n_w <= m, got n_w = {n_w}, m = {m}"
        )));
    }
    Ok(dft_columns(m, n_w) / Complex64::new((m as f64).sqrt(), 0.0))
}

/// Fixed measurement setup shared by every observation of a run.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    /// Ω̄, `n × k`.
    pub phase_schedule: CMatrix,
    /// W, `m × n_w`.
    pub combiner: CMatrix,
    /// Ψ = Ω̄ᵀ ⊗ Wᴴ, `(n_w k) × (m n)`.
    pub psi: CMatrix,
    /// ΨᴴΨ.
    pub gram: CMatrix,
    pub psi_real: RMatrix,
    /// Ψᵣᵀ Ψᵣ.
    pub gram_real: RMatrix,
    /// Power-iteration estimate of λ_max(ΨᴴΨ).
    pub gram_norm: f64,
}

impl MeasurementModel {
    pub fn m(&self) -> usize {
        self.combiner.nrows()
    }

    pub fn n(&self) -> usize {
        self.phase_schedule.nrows()
    }

    pub fn k(&self) -> usize {
        self.phase_schedule.ncols()
    }

    pub fn n_w(&self) -> usize {
        self.combiner.ncols()
    }

    /// Length of the lifted channel vector, `2 m n`.
    pub fn lifted_dim(&self) -> usize {
        2 * self.m() * self.n()
    }

    /// DFT schedule and combiner for the given sizes.
    pub fn dft(m: usize, n: usize, k: usize, n_w: usize) -> Result<Self> {
        build_psi(&build_phase_schedule(n, k)?, &build_combiner(m, n_w)?)
    }

    /// Noiseless `Wᴴ Hc Ω̄`, the matrix form of the measurement.
    pub fn measure_matrix(&self, hc: &CMatrix) -> CMatrix {
        self.combiner.adjoint() * hc * &self.phase_schedule
    }
}

pub fn build_psi(phase_schedule: &CMatrix, combiner: &CMatrix) -> Result<MeasurementModel> {
    if phase_schedule.is_empty() || combiner.is_empty() {
        return Err(dim_err("phase schedule and combiner must be non-empty"));
    }
    let psi = kron(&phase_schedule.transpose(), &combiner.adjoint());
    let gram = psi.adjoint() * &psi;
    let psi_real = lift_matrix(&psi);
    let gram_real = psi_real.transpose() * &psi_real;
    let gram_norm = max_eigenvalue_psd(&gram_real, POWER_ITERATIONS);
    Ok(MeasurementModel {
        phase_schedule: phase_schedule.clone(),
        combiner: combiner.clone(),
        psi,
        gram,
        psi_real,
        gram_real,
        gram_norm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub y: CVector,
    pub y_real: RVector,
    /// Ψᵣᵀ yᵣ, the compressed statistic fed to the network.
    pub stat_real: RVector,
    pub noise_var: f64,
}

impl Observation {
    fn new(model: &MeasurementModel, y: CVector, noise_var: f64) -> Self {
        let y_real = lift_vector(&y);
        let stat_real = model.psi_real.tr_mul(&y_real);
        Self {
            y,
            y_real,
            stat_real,
            noise_var,
        }
    }
}

/// `y = Ψ h_c + vec(Wᴴ N)` with unit pilots and `N` columns `CN(0, σ² I_m)`.
///
/// No random numbers are consumed when the noise is disabled.
pub fn observe(
    model: &MeasurementModel,
    h_c: &CVector,
    snr_db: f64,
    rng: &mut Rng,
) -> Result<Observation> {
    if h_c.len() != model.psi.ncols() {
        return Err(dim_err(format!(
            "channel vector has length {}, measurement expects {}",
            h_c.len(),
            model.psi.ncols()
        )));
    }
    let noise_var = noise_variance(snr_db);
    let mut y = &model.psi * h_c;
    if noise_var > 0.0 {
        let raw = CMatrix::from_fn(model.m(), model.k(), |_, _| {
            complex_gaussian(rng, noise_var)
        });
        y += vectorize(&(model.combiner.adjoint() * raw));
    }
    Ok(Observation::new(model, y, noise_var))
}

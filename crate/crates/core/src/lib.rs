//! Cascaded-channel estimation for RIS-aided mmWave SIMO links.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel_model`] draws geometric RIS→BS and MS→RIS channels and forms
//!   the rank-deficient cascaded channel `H1 · diag(h2)`.
//! * [`sounding`] builds the DFT phase schedule, the orthonormal combiner,
//!   the Kronecker measurement matrix and noisy observations, together with
//!   the real-valued lifts consumed by the network.
//! * [`estimators`] holds the model-based baselines: minimum-norm least
//!   squares, regularised gradient descent and a nuclear-norm proximal
//!   gradient solver.
//! * [`unfolding_net`] is the learnable unfolded gradient network with a
//!   hand-written backward pass, Adam and the checkpoint format.
//! * [`experiments`] generates datasets, trains, evaluates NMSE and runs the
//!   four studies (training overhead, path count, training SNR, angle range).

pub mod channel_model;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod seed;
pub mod sounding;
pub mod unfolding_net;

pub use error::{Error, Result};

/// Complex dense matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Complex dense column vector.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;
/// Real dense matrix (lifted domain).
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Real dense column vector (lifted domain).
pub type RVector = nalgebra::DVector<f64>;

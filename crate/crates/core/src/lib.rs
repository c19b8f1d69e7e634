//! Sub-pixel target detection in hyperspectral data with a matrix-variate
//! t (or Gaussian) background of unknown mean and covariance.
//!
//! The crate provides the generalized Kelly, ACUTE and SPADE detectors,
//! samplers and densities for the joint pixel/training law, and a
//! Monte-Carlo harness for ROC curves and false-alarm-gain sweeps.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the
//! experiments use.

pub mod detectors;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod optimize;
pub mod rng;
pub mod scalar;

pub use detectors::{
    acute, gaussian_glr, glr_numerator, glr_objective, kelly, profile_log_glr, spade, summarize, DetectionOutcome,
    DetectorKind, Nuisance, TrainingSummary,
};
pub use distributions::{
    log_pdf, multivariate_gamma_log, profile_log_likelihood, sample_joint, BackgroundModel, Family, Hypothesis,
    JointSample, JointSampler, ModelKind, Scenario,
};
pub use error::{Error, Result};
pub use experiments::{
    empirical_quantile_threshold, pfa_gain_sweep, roc, roc_all, roc_from_samples, run_trials, ExperimentConfig,
    OperatingPoint, PfaGainPoint, RocCurve, RocPoint,
};
pub use linalg::{Matrix, SymmetricPd};
pub use scalar::Real;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type SymmetricPd64 = SymmetricPd<f64>;
pub type SymmetricPd32 = SymmetricPd<f32>;
pub type TrainingSummary64 = TrainingSummary<f64>;
pub type TrainingSummary32 = TrainingSummary<f32>;
pub type DetectionOutcome64 = DetectionOutcome<f64>;
pub type BackgroundModel64 = BackgroundModel<f64>;
pub type Scenario64 = Scenario<f64>;
pub type JointSample64 = JointSample<f64>;
pub type JointSampler64 = JointSampler<f64>;

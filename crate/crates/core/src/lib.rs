//! Distal interference in partition-based and neural regression models.
//!
//! The crate provides:
//!
//! * [`spline`]: cardinal cubic B-spline basis and z-density splines.
//! * [`models`]: lookup tables, additive spline models, ABEL-Splines and ReLU
//!   networks behind the [`Model`] trait, with sparse parameter gradients.
//! * [`training`]: mini-batch Adam training with MAE/MSE losses.
//! * [`interference`]: Monte Carlo estimates of model perturbation and
//!   distal interference, and the repeated single-update trial protocol.
//! * [`harness`]: the 2-D regression, sequential and pseudo-rehearsal
//!   experiments with CSV and PGM output.
//! * [`props`]: structural property checks shared by tests and `selftest`.

pub mod error;
pub mod harness;
pub mod interference;
pub mod models;
pub mod props;
pub mod rng;
pub mod sparse;
pub mod spline;
pub mod training;

pub use error::{Error, Result};
pub use interference::{DistalKind, DistalSpec, McConfig, TrialReport};
pub use models::{AnyModel, Architecture, InitKind, InitSpec, Model};
pub use sparse::SparseGrad;
pub use spline::{BasisWindow, ZDensitySpline};
pub use training::{AdamState, LossKind, TrainConfig};

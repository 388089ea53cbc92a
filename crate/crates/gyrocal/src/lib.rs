//! Gyroscope bias calibration toolkit.
//!
//! The crate simulates low-cost gyro error behavior, identifies stochastic
//! noise via Allan variance, solves the classical least-squares calibration
//! for scale factor, misalignment and bias, and trains a small 1D
//! convolutional regressor that estimates the constant bias from short
//! stationary windows — the averaging-vs-learning tradeoff at desk scale.
//!
//! Modules mirror the pipeline:
//!
//! * [`error_model`] — deterministic sensor model (distortion matrix, bias)
//! * [`noise`] — stochastic source generation and stationary record synthesis
//! * [`allan`] — Allan deviation curves and coefficient fitting
//! * [`calib`] — six-point least-squares calibration
//! * [`dataset`] — windowing, labeling, augmentation, train/test split
//! * [`nn`] — minimal differentiable layers (conv/pool/fc), MSE, Adam
//! * [`estimator`] — baseline averaging estimator and the trained network
//! * [`eval`] — RMSE / gamma-ratio metrics and report generation
//! * [`cli`] — subcommand implementations behind the `gyrocal` binary

pub mod allan;
pub mod calib;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod error_model;
pub mod estimator;
pub mod eval;
pub mod io;
pub mod nn;
pub mod noise;
pub mod rng;

pub use error::{Error, Result};

/// rad/s -> mrad/s, the unit reports print in.
pub const RAD_TO_MRAD: f64 = 1e3;

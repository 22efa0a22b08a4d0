//! Core engine for the contextual exponential-smoothing / dilated-attentive-RNN
//! forecaster: per-series dynamic smoothing, window preprocessing, the recurrent
//! network with its reverse-mode tape, the composite quantile loss, training and
//! rolling-origin backtesting, evaluation metrics, the conditional predictive
//! ability test, and reference baselines.
//!
//! This crate is `no_std`-compatible (it allocates, but performs no IO); file
//! formats, CSV handling and the command-line front end live in the companion
//! `cesrnn` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod cells;
pub mod error;
pub mod es;
pub mod gw;
pub mod loss;
pub mod math;
pub mod metrics;
pub mod network;
pub mod panel;
pub mod preprocess;
pub mod synthetic;
pub mod tape;
pub mod trainer;

pub use error::{DataError, ForecastError};

//! Gaussian modeling of stroke-play golf scores.
//!
//! * [`score_model`]: per-event moments, histograms and rounded-Gaussian models
//! * [`gof`]: two-sample Kolmogorov-Smirnov tests, QQ series, p-value meta-simulation
//! * [`zscore`]: z-scores, player aggregates, regressions, trends and rankings
//! * [`tournament`]: tournament, career and win-streak Monte Carlo
//! * [`streak`]: exact run-length probabilities for Bernoulli trials
//! * [`data_io`] / [`synth`]: CSV schemas and synthetic data
//! * [`cli`]: the `golfstat` command-line front end

pub mod cli;
pub mod data_io;
pub mod error;
pub mod gof;
pub mod normal;
pub mod regression;
pub mod rng;
pub mod score_model;
pub mod streak;
pub mod synth;
pub mod tournament;
pub mod zscore;

pub use error::{Error, Result};

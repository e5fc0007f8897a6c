//! Online detection of level shifts in autocorrelated time series.
//!
//! The centrepiece is a moving-window control chart built on the level-shift
//! test statistics of Tsay (1988, Journal of Forecasting): at every time step
//! the chart maintains standardized Wald statistics for a level shift at each
//! of the last `K` candidate change points, updates them recursively in O(K),
//! and raises a signal when the largest absolute statistic crosses a critical
//! value. Critical values are calibrated by Monte Carlo simulation of the
//! in-control run length so the chart attains a target in-control average run
//! length (ARL). A two-sided CUSUM chart on the same one-step prediction
//! errors (Page 1954; Montgomery, *Introduction to Statistical Quality
//! Control*) serves as the reference method.
//!
//! Module map:
//! - [`arma`]: known-parameter ARMA models, their AR(∞) representation, the
//!   level-shift response weights, one-step prediction errors, simulators.
//! - [`stats`]: numerical kernel — distribution quantiles, Cholesky,
//!   truncated multivariate normal sampling, reproducible random sources.
//! - [`detector`]: the windowed level-shift chart itself.
//! - [`cusum`]: the two-sided CUSUM baseline with restart initialization and
//!   slack/limit design helpers.
//! - [`calibrate`]: run-length simulation, chi-square ARL confidence
//!   intervals, the sequential critical-value search, and a small-window
//!   quadrature oracle for the box-probability identity.
//! - [`simlab`]: batch experiments (out-of-control ARL surfaces, signal
//!   accuracy, CUSUM comparison ratios, robustness studies) emitting tidy CSV.
//!
//! Everything that consumes randomness takes an explicit
//! [`stats::RandomSource`] so that parallel runs are bit-reproducible
//! regardless of thread count.

pub mod arma;
pub mod calibrate;
pub mod cusum;
pub mod detector;
pub mod error;
pub mod simlab;
pub mod stats;

pub use error::{Error, Result};

/// Configures the global worker pool used by the parallel simulation loops.
///
/// Must be called before any parallel work is dispatched; returns an error if
/// the pool was already initialized with different settings. `threads == 0`
/// leaves the default (one worker per logical CPU).
pub fn set_global_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

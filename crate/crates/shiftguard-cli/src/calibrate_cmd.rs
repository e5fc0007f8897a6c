//! `calibrate`: searches the critical value of the windowed chart (or the
//! CUSUM decision interval) for the configured model and target ARL₀, writes
//! the candidate table as CSV and prints the chosen value with its interval.

use std::path::{Path, PathBuf};

use shiftguard::calibrate::{
    find_critical_value_warm, load_calibration_file, model_id, save_calibration_file,
    CalibrationRow,
};
use shiftguard::cusum::cusum_calibrate_limit;
use shiftguard::stats::RandomSource;
use shiftguard::Result;

use crate::config::{ChartMethod, RunConfig};

/// Flag overrides accepted by the subcommand.
pub struct CalibrateArgs {
    /// Window size override.
    pub k: Option<usize>,
    /// Target ARL₀ override.
    pub target: Option<f64>,
    /// Significance level override.
    pub beta: Option<f64>,
    /// Repetition count override.
    pub n: Option<usize>,
    /// Interval half-width override (used when `n` is absent).
    pub margin: Option<f64>,
    /// Search step override.
    pub step: Option<f64>,
    /// Output CSV path override.
    pub output: Option<PathBuf>,
    /// Ignore an existing output CSV instead of warm-starting from it.
    pub fresh: bool,
}

/// Runs the calibration workflow. Returns the chosen value.
pub fn cmd_calibrate(mut config: RunConfig, args: &CalibrateArgs, seed: Option<u64>) -> Result<f64> {
    if let Some(k) = args.k {
        config.window_size = Some(k);
    }
    if args.target.is_some() {
        config.target_arl0 = args.target;
    }
    if args.beta.is_some() {
        config.beta = args.beta;
    }
    if args.n.is_some() {
        config.n = args.n;
    }
    if args.margin.is_some() {
        config.margin = args.margin;
    }
    if args.step.is_some() {
        config.step = args.step;
    }
    if seed.is_some() {
        config.seed = seed;
    }
    let source = RandomSource::new(config.seed());

    match config.chart_method()? {
        ChartMethod::Cusum => {
            let slack = config.slack.ok_or_else(|| {
                shiftguard::Error::InvalidParameter("cusum calibration needs `slack`".into())
            })?;
            let limit =
                cusum_calibrate_limit(slack, config.target_arl0(), config.n_reps()?, source)?;
            println!("h_c = {limit:.4} (slack {slack}, target ARL0 {})", config.target_arl0());
            Ok(limit)
        }
        ChartMethod::Tsay => {
            let model = config.model()?;
            let window = config.window_size.ok_or_else(|| {
                shiftguard::Error::InvalidParameter("calibration needs `window_size`".into())
            })?;
            let out_path = args
                .output
                .clone()
                .or_else(|| config.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("calibration.csv"));
            let warm = load_warm_rows(&out_path, args.fresh)?;
            let result = find_critical_value_warm(
                &model,
                window,
                config.target_arl0(),
                config.beta(),
                config.n_reps()?,
                config.step(),
                source,
                &warm,
            )?;
            save_calibration_file(&out_path, &model_id(&model), &result)?;
            let chosen = result
                .table
                .iter()
                .find(|c| c.chosen)
                .expect("search marks a chosen candidate");
            println!(
                "h_opt = {:.3} (ARL0 {:.1}, {:.0}% CI [{:.1}, {:.1}], N = {}, K = {})",
                result.h_opt,
                chosen.summary.mean,
                100.0 * (1.0 - result.beta),
                chosen.summary.ci_low,
                chosen.summary.ci_high,
                result.n_reps,
                window,
            );
            Ok(result.h_opt)
        }
    }
}

fn load_warm_rows(path: &Path, fresh: bool) -> Result<Vec<CalibrationRow>> {
    if fresh || !path.is_file() {
        return Ok(Vec::new());
    }
    load_calibration_file(path)
}

//! `monitor`: streams observations through the one-step predictor and the
//! configured chart, one CSV line in (`time,value`), one line out per
//! observation, plus an `ALARM` record when the chart signals.
//!
//! Output schema: `time,e,statistic,signal`. The first p* observations only
//! warm the predictor up, so their `e`/`statistic` fields are empty. Alarm
//! records are `ALARM,signal_row,change_row,tau_estimate` where rows count
//! parsed input lines from 1 (a change_row ≤ p* points into the warm-up
//! prefix or before the stream). Output is flushed line by line so a
//! downstream consumer sees alarms immediately.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use shiftguard::arma::{ar_representation, eta_weights, DEFAULT_PI_MAX_ORDER, DEFAULT_PI_TOL};
use shiftguard::calibrate::find_critical_value;
use shiftguard::cusum::{cusum_calibrate_limit, cusum_update, CusumConfig, CusumState};
use shiftguard::detector::{DetectorConfig, DetectorState, TsayDetector};
use shiftguard::stats::RandomSource;
use shiftguard::{Error, Result};

use crate::config::{ChartMethod, RunConfig};

/// Post-alarm behaviour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnSignal {
    /// Emit the alarm record and stop reading.
    Halt,
    /// Emit the alarm record, reset the chart and keep monitoring.
    Reset,
}

/// Flag overrides accepted by the subcommand.
pub struct MonitorArgs {
    /// Input path override ("-" = stdin).
    pub input: Option<PathBuf>,
    /// Output path override ("-" = stdout).
    pub output: Option<PathBuf>,
    /// Post-alarm behaviour.
    pub on_signal: OnSignal,
}

enum Chart {
    Tsay(Box<TsayDetector>, DetectorState),
    Cusum(CusumConfig, CusumState),
}

/// Runs the monitoring loop. Returns the number of skipped (malformed)
/// input lines; the caller maps a nonzero count to a nonzero exit.
pub fn cmd_monitor(config: &RunConfig, args: &MonitorArgs, seed: Option<u64>) -> Result<usize> {
    let model = config.model()?;
    let sigma_a = model.sigma_a();
    let mean = model.mean();
    let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER)?;
    let p_star = pi.p_star();
    let seed = seed.or(config.seed).unwrap_or(0);

    let mut chart = match config.chart_method()? {
        ChartMethod::Tsay => {
            let window = config.window_size.ok_or_else(|| {
                Error::InvalidParameter("monitoring needs `window_size`".into())
            })?;
            let h = match config.critical_value {
                Some(h) => h,
                None if config.auto() => {
                    let result = find_critical_value(
                        &model,
                        window,
                        config.target_arl0(),
                        config.beta(),
                        config.n_reps()?,
                        config.step(),
                        RandomSource::new(seed),
                    )?;
                    eprintln!("calibrated critical value h = {:.4}", result.h_opt);
                    result.h_opt
                }
                None => {
                    return Err(Error::Uncalibrated(
                        "no `critical_value` and `auto` is off".into(),
                    ))
                }
            };
            let detector = TsayDetector::new(&DetectorConfig {
                window_size: window,
                critical_value: h,
                eta: eta_weights(&pi, window.max(2)),
                sigma_a,
            })?;
            let state = detector.zero_state();
            Chart::Tsay(Box::new(detector), state)
        }
        ChartMethod::Cusum => {
            let slack = config
                .slack
                .ok_or_else(|| Error::InvalidParameter("monitoring needs `slack`".into()))?;
            let limit = match config.limit {
                Some(l) => l,
                None if config.auto() => {
                    let l = cusum_calibrate_limit(
                        slack,
                        config.target_arl0(),
                        config.n_reps()?,
                        RandomSource::new(seed),
                    )?;
                    eprintln!("calibrated decision interval h_c = {l:.4}");
                    l
                }
                None => {
                    return Err(Error::Uncalibrated("no `limit` and `auto` is off".into()))
                }
            };
            Chart::Cusum(CusumConfig::new(slack, limit)?, CusumState::zero())
        }
    };

    let input_path = args.input.clone().or_else(|| config.input.as_ref().map(PathBuf::from));
    let reader: Box<dyn BufRead> = match input_path.as_deref() {
        None => Box::new(BufReader::new(std::io::stdin())),
        Some(p) if p.as_os_str() == "-" => Box::new(BufReader::new(std::io::stdin())),
        Some(p) => Box::new(BufReader::new(std::fs::File::open(p)?)),
    };
    let output_path = args.output.clone().or_else(|| config.output.as_ref().map(PathBuf::from));
    let mut writer: Box<dyn Write> = match output_path.as_deref() {
        None => Box::new(std::io::stdout()),
        Some(p) if p.as_os_str() == "-" => Box::new(std::io::stdout()),
        Some(p) => Box::new(std::fs::File::create(p)?),
    };

    writeln!(writer, "time,e,statistic,signal")?;
    writer.flush()?;

    let mut history: Vec<f64> = Vec::with_capacity(p_star); // z's, newest last
    let mut errors_seen = 0u64; // global one-step-error count
    let mut skipped = 0usize;
    let mut first_line = true;

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        let value = fields.get(1).and_then(|v| v.trim().parse::<f64>().ok());
        let value = match value {
            Some(v) if v.is_finite() => v,
            _ if first_line => {
                // a non-numeric first line is a header, not data
                first_line = false;
                continue;
            }
            _ => {
                eprintln!("skipping malformed line: {trimmed}");
                skipped += 1;
                continue;
            }
        };
        first_line = false;
        let time = fields[0].trim();

        let z = value - mean;
        if history.len() < p_star {
            history.push(z);
            writeln!(writer, "{time},,,")?;
            writer.flush()?;
            continue;
        }
        let mut e = z;
        for (i, w) in pi.pi().iter().enumerate() {
            e -= w * history[history.len() - 1 - i];
        }
        if p_star > 0 {
            history.remove(0);
            history.push(z);
        }
        errors_seen += 1;

        // (statistic, alarm = (offset back to change, tau estimate))
        let (stat, alarm) = match &mut chart {
            Chart::Tsay(detector, state) => match detector.update(state, e)? {
                Some(sig) => (
                    sig.statistic,
                    Some((sig.signal_time - sig.change_point_estimate, sig.tau_estimate)),
                ),
                None => (state.max_norm(), None),
            },
            Chart::Cusum(cfg, state) => {
                let u = e / sigma_a;
                match cusum_update(cfg, state, u)? {
                    Some(sig) => {
                        let n_side = if sig.direction > 0 { state.n_plus } else { state.n_minus };
                        // classical post-signal shift estimate: ±(s + C/n)·σ_a
                        let tau = sig.direction as f64
                            * (cfg.slack + sig.statistic / n_side.max(1) as f64)
                            * sigma_a;
                        (
                            sig.statistic,
                            Some((sig.signal_time - sig.change_point_estimate, tau)),
                        )
                    }
                    None => (state.c_plus.max(state.c_minus), None),
                }
            }
        };

        let flag = u8::from(alarm.is_some());
        writeln!(writer, "{time},{e:?},{stat:?},{flag}")?;
        if let Some((offset, tau)) = alarm {
            let signal_row = p_star as u64 + errors_seen;
            let change_row = signal_row.saturating_sub(offset);
            writeln!(writer, "ALARM,{signal_row},{change_row},{tau:?}")?;
            writer.flush()?;
            match args.on_signal {
                OnSignal::Halt => break,
                OnSignal::Reset => match &mut chart {
                    Chart::Tsay(detector, state) => *state = detector.zero_state(),
                    Chart::Cusum(_, state) => *state = CusumState::zero(),
                },
            }
        }
        writer.flush()?;
    }
    writer.flush()?;
    Ok(skipped)
}

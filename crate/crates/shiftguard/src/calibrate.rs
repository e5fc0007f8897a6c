//! Critical-value calibration for the windowed chart.
//!
//! In control the window statistic Λ_T is Gaussian with a known covariance,
//! so for small windows the no-signal probability is a box integral,
//!
//! ```text
//! 1 − α = P(‖Λ_T‖_∞ < h) = ∫_{[−h,h]^K} N(x; 0, AAᵀ) dx,
//! ```
//!
//! evaluated here by tensor-product Gauss–Legendre quadrature. For realistic
//! window sizes the critical value is instead set by simulation: run lengths
//! are drawn by starting the chart from its in-control stationary law
//! conditioned on no signal, feeding iid N(0, σ_a²) errors until the first
//! signal, and reading off the count. Treating waiting times as geometric,
//! the mean of N run lengths carries the chi-square confidence interval
//!
//! ```text
//! 2N x̄ / χ²_{1−β/2}(2N)  <  ARL₀  <  2N x̄ / χ²_{β/2}(2N),
//! ```
//!
//! and the search raises a candidate h stepwise while the target ARL₀ still
//! exceeds the interval's lower bound, reusing each window size's outcome as
//! the starting point for the next — small windows are cheap to simulate and
//! bound the critical value of larger ones from below. A final
//! golden-section pass polishes the best candidate at the full window size.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arma::{ar_representation, eta_weights, ArmaModel, EtaWeights, DEFAULT_PI_MAX_ORDER, DEFAULT_PI_TOL};
use crate::detector::{DetectorConfig, TsayDetector};
use crate::error::{Error, Result};
use crate::stats::linalg::cholesky;
use crate::stats::{chi_square_quantile, normal_quantile, RandomSource};

/// Hard cap on the length of a single simulated run.
pub const DEFAULT_RUN_LENGTH_CAP: u64 = 10_000_000;
/// Maximum number of candidates evaluated at any one window size.
pub const DEFAULT_CANDIDATE_CAP: usize = 200;
/// Largest dimension accepted by the tensor-product quadrature.
pub const QUADRATURE_MAX_DIM: usize = 4;
/// Iterations of the final golden-section refinement pass.
const GOLDEN_ITERS: usize = 6;
/// 1/φ for the golden-section split.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Monte Carlo run-length estimate with its chi-square interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunLengthSummary {
    /// Number of simulated runs N.
    pub n_reps: usize,
    /// Sample mean x̄ — the ARL estimate.
    pub mean: f64,
    /// Lower confidence bound 2N x̄ / χ²_{1−β/2}(2N).
    pub ci_low: f64,
    /// Upper confidence bound 2N x̄ / χ²_{β/2}(2N).
    pub ci_high: f64,
    /// Two-sided significance level β of the interval.
    pub beta: f64,
}

/// Builds the chi-square interval around a run-length mean.
pub fn arl_confidence_interval(n_reps: usize, mean: f64, beta: f64) -> Result<RunLengthSummary> {
    if n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be at least 1".into()));
    }
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "run-length mean must be positive and finite, got {mean}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    let dof = 2.0 * n_reps as f64;
    let ci_low = dof * mean / chi_square_quantile(1.0 - beta / 2.0, dof)?;
    let ci_high = dof * mean / chi_square_quantile(beta / 2.0, dof)?;
    Ok(RunLengthSummary {
        n_reps,
        mean,
        ci_low,
        ci_high,
        beta,
    })
}

/// Summarizes raw run lengths (integer accumulation, so the result does not
/// depend on summation order).
pub fn summarize_run_lengths(lengths: &[u64], beta: f64) -> Result<RunLengthSummary> {
    if lengths.is_empty() {
        return Err(Error::EmptyInput("no run lengths to summarize".into()));
    }
    let sum: u128 = lengths.iter().map(|&v| v as u128).sum();
    let mean = sum as f64 / lengths.len() as f64;
    arl_confidence_interval(lengths.len(), mean, beta)
}

/// Smallest N whose chi-square interval around `target_arl0` has both
/// margins at most `margin`.
pub fn choose_n_for_margin(target_arl0: f64, beta: f64, margin: f64) -> Result<usize> {
    if !(target_arl0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target_arl0 must be positive, got {target_arl0}"
        )));
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let margin_at = |n: usize| -> Result<f64> {
        let s = arl_confidence_interval(n, target_arl0, beta)?;
        Ok((target_arl0 - s.ci_low).max(s.ci_high - target_arl0))
    };
    if margin_at(1)? <= margin {
        return Ok(1);
    }
    // double until the margin is met, then bisect for the first success
    let mut hi = 1usize;
    loop {
        hi = hi.saturating_mul(2);
        if hi > 1_000_000_000 {
            return Err(Error::NonConvergence(format!(
                "margin {margin} not reached by N = 10^9"
            )));
        }
        if margin_at(hi)? <= margin {
            break;
        }
    }
    let mut lo = hi / 2; // margin(lo) > margin
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if margin_at(mid)? <= margin {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One conditional run length: start the chart from its in-control law given
/// no signal, feed iid N(0, σ_a²) errors until the first signal, and return
/// the number of errors consumed (≥ 1). Runs longer than `cap` error out.
pub fn simulate_run_length<R: Rng + ?Sized>(
    detector: &TsayDetector,
    cap: u64,
    rng: &mut R,
) -> Result<u64> {
    if detector.critical_value() <= 0.0 {
        return Ok(1); // any first observation signals
    }
    let mut state = detector.initialize_state(rng)?;
    loop {
        let e: f64 = rng.sample::<f64, _>(StandardNormal) * detector.sigma_a();
        if detector.update(&mut state, e)?.is_some() {
            return Ok(state.time());
        }
        if state.time() >= cap {
            return Err(Error::RunLengthCapExceeded { cap });
        }
    }
}

/// Draws `n_reps` independent run lengths in parallel. Repetition `i` uses
/// the RNG stream `i` of `source`, so results are reproducible and
/// independent of thread scheduling.
pub fn simulate_run_lengths(
    detector: &TsayDetector,
    n_reps: usize,
    source: RandomSource,
) -> Result<Vec<u64>> {
    (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = source.with_stream(rep as u64).rng();
            simulate_run_length(detector, DEFAULT_RUN_LENGTH_CAP, &mut rng)
        })
        .collect()
}

/// Monte Carlo ARL₀ estimate with its chi-square interval.
pub fn simulate_arl(
    detector: &TsayDetector,
    n_reps: usize,
    beta: f64,
    source: RandomSource,
) -> Result<RunLengthSummary> {
    let lengths = simulate_run_lengths(detector, n_reps, source)?;
    summarize_run_lengths(&lengths, beta)
}

/// One evaluated candidate in a calibration table.
#[derive(Clone, Debug)]
pub struct CalibrationCandidate {
    /// Window size at which the candidate was simulated.
    pub window_size: usize,
    /// Candidate critical value.
    pub h: f64,
    /// Simulation outcome.
    pub summary: RunLengthSummary,
    /// Seed of the derived RNG source used for this candidate.
    pub seed: u64,
    /// Whether this candidate was selected as h_opt.
    pub chosen: bool,
}

/// Outcome of the sequential critical-value search.
#[derive(Clone, Debug)]
pub struct CalibrationResult {
    /// Final window size K.
    pub window_size: usize,
    /// Selected critical value.
    pub h_opt: f64,
    /// Target in-control average run length.
    pub target_arl0: f64,
    /// Interval significance level.
    pub beta: f64,
    /// Repetitions per candidate.
    pub n_reps: usize,
    /// Every candidate evaluated, across all intermediate window sizes.
    pub table: Vec<CalibrationCandidate>,
}

/// Stable identifier of a model's calibration inputs: a SHA-256 prefix over
/// the exact coefficient bits.
pub fn model_id(model: &ArmaModel) -> String {
    let mut hasher = Sha256::new();
    hasher.update((model.ar_coeffs().len() as u64).to_le_bytes());
    for &c in model.ar_coeffs() {
        hasher.update(c.to_bits().to_le_bytes());
    }
    hasher.update((model.ma_coeffs().len() as u64).to_le_bytes());
    for &c in model.ma_coeffs() {
        hasher.update(c.to_bits().to_le_bytes());
    }
    hasher.update(model.sigma_a().to_bits().to_le_bytes());
    hasher.update(model.mean().to_bits().to_le_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn candidate_tag(window: usize, h: f64) -> u64 {
    (window as u64).wrapping_mul(0xA076_1D64_78BD_642F)
        ^ h.to_bits().wrapping_mul(0xE703_7ED1_A0B4_28DB)
}

/// Internal evaluator: owns the growing candidate table, a cache keyed by
/// (window, h), the per-window budget, and optional warm-start rows.
struct Evaluator<'a> {
    eta: EtaWeights,
    sigma_a: f64,
    beta: f64,
    n_reps: usize,
    source: RandomSource,
    warm: HashMap<(usize, u64), &'a CalibrationRow>,
    table: Vec<CalibrationCandidate>,
    index: HashMap<(usize, u64), usize>,
    evals_at: HashMap<usize, usize>,
}

impl Evaluator<'_> {
    fn eval(&mut self, window: usize, h: f64) -> Result<usize> {
        let key = (window, h.to_bits());
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let count = self.evals_at.entry(window).or_insert(0);
        if *count >= DEFAULT_CANDIDATE_CAP {
            return Err(Error::BudgetExceeded(format!(
                "more than {DEFAULT_CANDIDATE_CAP} candidates at window size {window}; \
                 increase the step size or revisit the target"
            )));
        }
        *count += 1;
        let derived = self.source.derive(candidate_tag(window, h));
        let summary = match self.warm.get(&key) {
            Some(row) if row.seed == derived.seed => {
                arl_confidence_interval(self.n_reps, row.mean, self.beta)?
            }
            _ => {
                let detector = TsayDetector::new(&DetectorConfig {
                    window_size: window,
                    critical_value: h,
                    eta: self.eta.clone(),
                    sigma_a: self.sigma_a,
                })?;
                simulate_arl(&detector, self.n_reps, self.beta, derived)?
            }
        };
        let i = self.table.len();
        self.table.push(CalibrationCandidate {
            window_size: window,
            h,
            summary,
            seed: derived.seed,
            chosen: false,
        });
        self.index.insert(key, i);
        Ok(i)
    }
}

/// Sequential critical-value search (fresh, no warm-start table).
pub fn find_critical_value(
    model: &ArmaModel,
    window_size: usize,
    target_arl0: f64,
    beta: f64,
    n_reps: usize,
    step: f64,
    source: RandomSource,
) -> Result<CalibrationResult> {
    find_critical_value_warm(model, window_size, target_arl0, beta, n_reps, step, source, &[])
}

/// Sequential critical-value search with warm-start rows from a previous
/// calibration file. A row is reused only when its window size, candidate
/// value, repetition count and derived seed all match what this run would
/// simulate, so a warm start is a pure cache.
#[allow(clippy::too_many_arguments)]
pub fn find_critical_value_warm(
    model: &ArmaModel,
    window_size: usize,
    target_arl0: f64,
    beta: f64,
    n_reps: usize,
    step: f64,
    source: RandomSource,
    warm: &[CalibrationRow],
) -> Result<CalibrationResult> {
    if window_size == 0 {
        return Err(Error::InvalidParameter("window_size must be at least 1".into()));
    }
    if !(target_arl0 > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target_arl0 must exceed 1, got {target_arl0}"
        )));
    }
    if n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be at least 1".into()));
    }
    if window_size > 1 && !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive and finite, got {step}"
        )));
    }

    let mid = model_id(model);
    let pi = ar_representation(model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER)?;
    let mut ev = Evaluator {
        eta: eta_weights(&pi, window_size.max(2)),
        sigma_a: model.sigma_a(),
        beta,
        n_reps,
        source,
        warm: warm
            .iter()
            .filter(|r| r.model_id == mid && r.n_reps == n_reps)
            .map(|r| ((r.window_size, r.h.to_bits()), r))
            .collect(),
        table: Vec::new(),
        index: HashMap::new(),
        evals_at: HashMap::new(),
    };

    // monitoring standardized errors alone has a closed-form critical value;
    // it doubles as the lower bound seeding the sequential search
    let mut h = -normal_quantile(1.0 / (2.0 * target_arl0))?;
    if window_size == 1 {
        let i = ev.eval(1, h)?;
        ev.table[i].chosen = true;
        return Ok(CalibrationResult {
            window_size,
            h_opt: h,
            target_arl0,
            beta,
            n_reps,
            table: ev.table,
        });
    }

    for k in 2..=window_size {
        let mut tested = vec![ev.eval(k, h)?];
        // chart too hot while the target still clears the interval's floor
        while target_arl0 > ev.table[*tested.last().expect("non-empty")].summary.ci_low {
            h += step;
            tested.push(ev.eval(k, h)?);
        }
        // carry forward the largest candidate proven too small, else the
        // smallest candidate tested at this window size
        let mut proven: Option<f64> = None;
        let mut smallest = f64::INFINITY;
        for &i in &tested {
            let c = &ev.table[i];
            smallest = smallest.min(c.h);
            if c.summary.ci_high < target_arl0 {
                proven = Some(proven.map_or(c.h, |p: f64| p.max(c.h)));
            }
        }
        h = proven.unwrap_or(smallest);
    }

    let best_at_full = |table: &[CalibrationCandidate]| -> usize {
        let mut best = usize::MAX;
        let mut best_gap = f64::INFINITY;
        for (i, c) in table.iter().enumerate() {
            if c.window_size == window_size {
                let gap = (target_arl0 - c.summary.mean).abs();
                if gap < best_gap {
                    best_gap = gap;
                    best = i;
                }
            }
        }
        best
    };

    // golden-section polish around the best coarse candidate
    let center = ev.table[best_at_full(&ev.table)].h;
    let mut a = (center - step).max(1e-3);
    let mut b = center + step;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut gap_at = |h: f64| -> Result<f64> {
        let idx = ev.eval(window_size, h)?;
        Ok((target_arl0 - ev.table[idx].summary.mean).abs())
    };
    let mut f1 = gap_at(x1)?;
    let mut f2 = gap_at(x2)?;
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = gap_at(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = gap_at(x2)?;
        }
    }

    let best = best_at_full(&ev.table);
    ev.table[best].chosen = true;
    Ok(CalibrationResult {
        window_size,
        h_opt: ev.table[best].h,
        target_arl0,
        beta,
        n_reps,
        table: ev.table,
    })
}

/// One persisted calibration row.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRow {
    /// Identifier from [`model_id`].
    pub model_id: String,
    /// Window size the candidate was simulated at.
    pub window_size: usize,
    /// Candidate critical value.
    pub h: f64,
    /// Repetitions behind the estimate.
    pub n_reps: usize,
    /// ARL estimate.
    pub mean: f64,
    /// Interval bounds as simulated.
    pub ci_low: f64,
    /// Upper bound.
    pub ci_high: f64,
    /// Whether the candidate was selected.
    pub chosen: bool,
    /// Seed of the derived RNG source.
    pub seed: u64,
}

const CALIBRATION_HEADER: &str =
    "model_id,K,h_candidate,N,arl_mean,ci_low,ci_high,chosen_flag,seed";

/// Writes a calibration table as CSV (shortest-round-trip float formatting,
/// so reloading reproduces the exact bits).
pub fn save_calibration_csv<W: Write>(
    out: &mut W,
    model_id: &str,
    result: &CalibrationResult,
) -> Result<()> {
    writeln!(out, "{CALIBRATION_HEADER}")?;
    for c in &result.table {
        writeln!(
            out,
            "{},{},{:?},{},{:?},{:?},{:?},{},{}",
            model_id,
            c.window_size,
            c.h,
            c.summary.n_reps,
            c.summary.mean,
            c.summary.ci_low,
            c.summary.ci_high,
            u8::from(c.chosen),
            c.seed
        )?;
    }
    Ok(())
}

/// Writes a calibration table to a file path.
pub fn save_calibration_file(path: &Path, model_id: &str, result: &CalibrationResult) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    save_calibration_csv(&mut file, model_id, result)?;
    file.flush()?;
    Ok(())
}

/// Loads calibration rows written by [`save_calibration_csv`].
pub fn load_calibration_file(path: &Path) -> Result<Vec<CalibrationRow>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(first) => {
            if first?.trim() != CALIBRATION_HEADER {
                return Err(Error::Malformed(format!(
                    "calibration file {} has an unexpected header",
                    path.display()
                )));
            }
        }
        None => return Err(Error::Malformed(format!("calibration file {} is empty", path.display()))),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Malformed(format!(
                "calibration line {}: expected 9 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Malformed(format!("calibration line {}: bad {what} `{s}`", lineno + 2)))
        };
        let parse_u = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::Malformed(format!("calibration line {}: bad {what} `{s}`", lineno + 2)))
        };
        rows.push(CalibrationRow {
            model_id: fields[0].to_string(),
            window_size: parse_u(fields[1], "window size")? as usize,
            h: parse_f(fields[2], "critical value")?,
            n_reps: parse_u(fields[3], "repetition count")? as usize,
            mean: parse_f(fields[4], "ARL mean")?,
            ci_low: parse_f(fields[5], "CI bound")?,
            ci_high: parse_f(fields[6], "CI bound")?,
            chosen: match fields[7] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Malformed(format!(
                        "calibration line {}: chosen_flag must be 0 or 1, got `{other}`",
                        lineno + 2
                    )))
                }
            },
            seed: parse_u(fields[8], "seed")?,
        });
    }
    Ok(rows)
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton on the Legendre
/// recurrence).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = pj;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// P(‖Λ‖_∞ < h) for Λ ~ N(0, AAᵀ), by tensor-product Gauss–Legendre
/// quadrature over [−h, h]^K. Node counts are refined until two successive
/// answers agree; feasible only for K ≤ 4.
pub fn box_probability_quadrature(a: &[Vec<f64>], h: f64) -> Result<f64> {
    let dim = a.len();
    if dim == 0 {
        return Err(Error::EmptyInput("transfer matrix has no rows".into()));
    }
    if dim > QUADRATURE_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            max: QUADRATURE_MAX_DIM,
        });
    }
    for row in a {
        if row.len() != dim {
            return Err(Error::InvalidParameter(
                "transfer matrix must be square".into(),
            ));
        }
    }
    if !h.is_finite() {
        return Err(Error::InvalidParameter("h must be finite".into()));
    }
    if h <= 0.0 {
        return Ok(0.0);
    }
    let mut sigma = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for l in 0..dim {
                acc += a[i][l] * a[j][l];
            }
            sigma[i * dim + j] = acc;
        }
    }
    let factor = cholesky(&sigma, dim)?;
    let mut log_norm = -(dim as f64) * 0.5 * (2.0 * std::f64::consts::PI).ln();
    for i in 0..dim {
        log_norm -= factor.entry(i, i).ln();
    }

    let evaluate = |n: usize| -> f64 {
        let (t, w) = gauss_legendre(n);
        let nodes: Vec<f64> = t.iter().map(|v| v * h).collect();
        let weights: Vec<f64> = w.iter().map(|v| v * h).collect();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let mut total = 0.0;
        loop {
            let mut wprod = 1.0;
            for d in 0..dim {
                x[d] = nodes[idx[d]];
                wprod *= weights[idx[d]];
            }
            let y = factor.solve_lower(&x);
            let quad: f64 = y.iter().map(|v| v * v).sum();
            total += wprod * (log_norm - 0.5 * quad).exp();
            // odometer
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == dim {
                    return total;
                }
            }
        }
    };

    let mut prev = evaluate(12);
    for &n in &[18usize, 27, 40, 60, 90] {
        let cur = evaluate(n);
        let diff = (cur - prev).abs();
        if diff < 1e-10 {
            return Ok(cur.clamp(0.0, 1.0));
        }
        prev = cur;
        if n == 90 && diff < 1e-6 {
            return Ok(cur.clamp(0.0, 1.0));
        }
    }
    Err(Error::NonConvergence(
        "quadrature refinements failed to agree".into(),
    ))
}

/// Critical value implied by the box integral: solves
/// 1 − P(‖Λ‖_∞ < h) = 1/target_arl0 for h by bisection.
pub fn critical_value_from_quadrature(a: &[Vec<f64>], target_arl0: f64) -> Result<f64> {
    if !(target_arl0 > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target_arl0 must exceed 1, got {target_arl0}"
        )));
    }
    let target_p = 1.0 - 1.0 / target_arl0;
    let (mut lo, mut hi) = (0.1, 20.0);
    if box_probability_quadrature(a, lo)? > target_p {
        return Err(Error::NoBracket(format!(
            "box probability at h = {lo} already above {target_p}"
        )));
    }
    if box_probability_quadrature(a, hi)? < target_p {
        return Err(Error::NoBracket(format!(
            "box probability at h = {hi} still below {target_p}"
        )));
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if box_probability_quadrature(a, mid)? < target_p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

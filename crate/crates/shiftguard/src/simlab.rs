//! Simulation lab: out-of-control performance studies on AR(1) processes.
//!
//! Four batch studies over a (φ₁, δ, tuning) grid, each emitting a tidy CSV:
//!
//! * **arl1** — out-of-control average run length per cell, for the windowed
//!   chart across window sizes and for the CUSUM baseline across slack
//!   values (the designed slack τη₁/(2σ_a) and a mis-tuning grid).
//! * **accuracy** — an independent replication recording how often each
//!   chart signals within ±10 of the true change point, and how often its
//!   change-point estimate lands within ±10.
//! * **comparison** — per cell, the best tuning of each method and the ratio
//!   ARL₁(CUSUM)/ARL₁(windowed chart); > 1 means the windowed chart wins.
//! * **robustness** — the comparison re-run with tunings frozen for a shift
//!   of size δ while the injected shift is half or double that size.
//!
//! Simulated shifts follow the one-step-error mean profile: a level shift of
//! size τ at t* moves e_t by τ·η_{t−t*} for t ≥ t*, with
//! τ = δσ_a/√(1−φ₁²). Charts start in mid-stream condition at t̄ = 0 — the
//! windowed chart from its truncated stationary law, the CUSUM chart via a
//! 50-step in-control burn-in with resets — and the first shifted
//! observation arrives at t* = 1.
//!
//! Every repetition derives its RNG stream from (seed, study, cell,
//! repetition), so full re-runs are byte-identical regardless of thread
//! count, and calibration tables are persisted so re-runs warm-start.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arma::{ar_representation, eta_weights, ArmaModel, EtaWeights, ShiftSpec, DEFAULT_PI_MAX_ORDER, DEFAULT_PI_TOL};
use crate::calibrate::{
    find_critical_value_warm, load_calibration_file, model_id, CalibrationResult, CalibrationRow,
};
use crate::cusum::{
    cusum_calibrate_limit, cusum_restart_init, cusum_update, slack_grid_setting_2,
    slack_setting_1, CusumConfig, LIMIT_FLOOR,
};
use crate::detector::{DetectorConfig, TsayDetector};
use crate::error::{Error, Result};
use crate::stats::{normal_quantile, RandomSource};

/// File names emitted into the output directory.
pub const ARL1_CSV: &str = "arl1.csv";
/// Accuracy study output.
pub const ACCURACY_CSV: &str = "accuracy.csv";
/// Comparison study output.
pub const COMPARISON_CSV: &str = "comparison.csv";
/// Robustness study output.
pub const ROBUSTNESS_CSV: &str = "robustness.csv";
/// Persisted windowed-chart calibration table (warm-start cache).
pub const CALIBRATION_CSV: &str = "calibration.csv";
/// Persisted CUSUM decision intervals (warm-start cache).
pub const CUSUM_LIMITS_CSV: &str = "cusum_limits.csv";
/// Manifest recording the grid, seed and output hashes.
pub const MANIFEST_FILE: &str = "manifest.txt";

const STUDY_ARL1: u64 = 1;
const STUDY_ACCURACY: u64 = 2;
const STUDY_ROBUSTNESS: u64 = 3;

/// Chart identifiers used in records and CSV output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodId {
    /// The windowed level-shift chart (tuning = window size K).
    Tsay,
    /// CUSUM with the designed slack τη₁/(2σ_a) (tuning = slack).
    CusumS1,
    /// CUSUM with slack picked over a mis-tuning grid (tuning = slack).
    CusumS2,
}

impl MethodId {
    /// Stable string used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Tsay => "TSAY",
            MethodId::CusumS1 => "CUSUM_S1",
            MethodId::CusumS2 => "CUSUM_S2",
        }
    }

    fn code(self) -> u64 {
        match self {
            MethodId::Tsay => 1,
            MethodId::CusumS1 => 2,
            MethodId::CusumS2 => 3,
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The experiment grid and simulation budgets.
#[derive(Clone, Debug)]
pub struct ExperimentGrid {
    /// AR(1) coefficients, each strictly inside (−1, 1).
    pub phi_values: Vec<f64>,
    /// Standardized shift sizes δ ≥ 0.
    pub delta_values: Vec<f64>,
    /// Window sizes for the windowed chart.
    pub window_sizes: Vec<usize>,
    /// Number of slack values in the CUSUM mis-tuning grid.
    pub slack_points: usize,
    /// Repetitions per cell.
    pub n_reps: usize,
    /// Repetitions per calibration candidate.
    pub calibration_reps: usize,
    /// Additive step for the critical-value search.
    pub calibration_step: f64,
    /// Target in-control average run length.
    pub target_arl0: f64,
    /// Significance level for intervals.
    pub beta: f64,
    /// Signal times beyond this cap are recorded as censored.
    pub censor_cap: u64,
    /// Master seed.
    pub seed: u64,
}

impl ExperimentGrid {
    /// Desk-scale defaults: a grid that finishes in minutes while preserving
    /// every qualitative trend of the full-scale study.
    pub fn desk_default(seed: u64) -> Self {
        Self {
            phi_values: vec![-0.9, -0.5, 0.0, 0.5, 0.9],
            delta_values: vec![0.5, 1.0, 1.5],
            window_sizes: vec![1, 2, 5, 10, 25, 50, 100],
            slack_points: 8,
            n_reps: 2000,
            calibration_reps: 5000,
            calibration_step: 0.05,
            target_arl0: 370.4,
            beta: 0.05,
            censor_cap: 100_000,
            seed,
        }
    }

    /// Validates grid invariants.
    pub fn validate(&self) -> Result<()> {
        if self.phi_values.is_empty() || self.delta_values.is_empty() || self.window_sizes.is_empty()
        {
            return Err(Error::EmptyInput(
                "grid axes must each contain at least one value".into(),
            ));
        }
        for &phi in &self.phi_values {
            if !(phi.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "phi1 must lie strictly inside (-1, 1), got {phi}"
                )));
            }
        }
        for &delta in &self.delta_values {
            if !(delta >= 0.0) || !delta.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "delta must be non-negative and finite, got {delta}"
                )));
            }
        }
        for &k in &self.window_sizes {
            if k == 0 {
                return Err(Error::InvalidParameter("window sizes must be at least 1".into()));
            }
        }
        if self.slack_points == 0 || self.n_reps == 0 || self.calibration_reps == 0 {
            return Err(Error::InvalidParameter(
                "slack_points, n_reps and calibration_reps must be positive".into(),
            ));
        }
        if !(self.target_arl0 > 1.0) || !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(
                "target_arl0 must exceed 1 and beta must lie in (0, 1)".into(),
            ));
        }
        if !(self.calibration_step > 0.0) || self.censor_cap == 0 {
            return Err(Error::InvalidParameter(
                "calibration_step and censor_cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-cell simulation budget.
#[derive(Clone, Copy, Debug)]
pub struct CellSpec {
    /// Repetitions.
    pub n_reps: usize,
    /// Censoring cap on the signal time.
    pub censor_cap: u64,
    /// Time of the first shifted observation.
    pub t_star: u64,
    /// Significance level for the ARL₁ interval.
    pub beta: f64,
}

impl CellSpec {
    /// Default budget: 2000 repetitions, cap 10⁵, shift at t* = 1.
    pub fn new(n_reps: usize) -> Self {
        Self {
            n_reps,
            censor_cap: 100_000,
            t_star: 1,
            beta: 0.05,
        }
    }
}

/// One grid cell's outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    /// Which chart produced the record.
    pub method: MethodId,
    /// AR(1) coefficient of the monitored process.
    pub phi1: f64,
    /// Standardized shift size actually injected.
    pub delta: f64,
    /// Window size (as a real) for the windowed chart, slack for CUSUM.
    pub tuning: f64,
    /// Mean signal time, censored runs counted at the cap.
    pub arl1: f64,
    /// Normal-theory interval around arl1.
    pub arl1_ci_low: f64,
    /// Upper bound of the same interval.
    pub arl1_ci_high: f64,
    /// Fraction of repetitions signalling within t* ± 10.
    pub frac_signal_within_10: f64,
    /// Fraction of repetitions whose change-point estimate lies in t* ± 10.
    pub frac_cpe_within_10: f64,
    /// Repetitions behind the record.
    pub n_reps: usize,
    /// Number of censored repetitions.
    pub n_censored: usize,
    /// Seed of the cell's RNG source.
    pub seed: u64,
}

/// A calibrated chart ready for out-of-control cells.
#[derive(Clone, Debug)]
pub enum TunedChart {
    /// The windowed chart with its calibrated critical value.
    Tsay {
        /// Prebuilt chart machinery.
        detector: TsayDetector,
    },
    /// The CUSUM baseline with its calibrated decision interval.
    Cusum {
        /// Which slack policy produced this chart.
        method: MethodId,
        /// Slack and calibrated decision interval.
        config: CusumConfig,
    },
}

impl TunedChart {
    /// Method identifier for records.
    pub fn method(&self) -> MethodId {
        match self {
            TunedChart::Tsay { .. } => MethodId::Tsay,
            TunedChart::Cusum { method, .. } => *method,
        }
    }

    /// Tuning value for records: K for the windowed chart, slack for CUSUM.
    pub fn tuning(&self) -> f64 {
        match self {
            TunedChart::Tsay { detector } => detector.window_size() as f64,
            TunedChart::Cusum { config, .. } => config.slack,
        }
    }
}

/// Runs one out-of-control cell: chart initialized in mid-stream condition
/// at t̄ = 0, shift of standardized size `delta` injected from t* on, signal
/// time and change-point estimate recorded per repetition.
pub fn run_arl1_cell(
    chart: &TunedChart,
    model: &ArmaModel,
    delta: f64,
    spec: &CellSpec,
    source: RandomSource,
) -> Result<ExperimentRecord> {
    if spec.n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be positive".into()));
    }
    let phi1 = model.ar_coeffs().first().copied().unwrap_or(0.0);
    let sigma_a = model.sigma_a();
    let pi = ar_representation(model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER)?;
    let eta = eta_weights(&pi, pi.p_star() + 1);
    let shift = if phi1 == 0.0 {
        ShiftSpec::from_tau(delta * sigma_a, sigma_a, spec.t_star)
    } else {
        ShiftSpec::for_ar1(delta, phi1, sigma_a, spec.t_star)?
    };
    let tau = shift.tau;
    let cap = spec.censor_cap;
    let t_star = spec.t_star;
    let shift_mean = move |t: u64, eta: &EtaWeights| -> f64 {
        if t >= t_star {
            tau * eta.get((t - t_star) as usize)
        } else {
            0.0
        }
    };

    // (signal time, change-point estimate, censored)
    let outcomes: Vec<(u64, u64, bool)> = (0..spec.n_reps)
        .into_par_iter()
        .map(|rep| -> Result<(u64, u64, bool)> {
            let mut rng = source.with_stream(rep as u64).rng();
            match chart {
                TunedChart::Tsay { detector } => {
                    let mut state = detector.initialize_state(&mut rng)?;
                    loop {
                        let t = state.time() + 1;
                        let e =
                            rng.sample::<f64, _>(StandardNormal) * sigma_a + shift_mean(t, &eta);
                        if let Some(sig) = detector.update(&mut state, e)? {
                            return Ok((sig.signal_time, sig.change_point_estimate, false));
                        }
                        if state.time() >= cap {
                            return Ok((cap, u64::MAX, true));
                        }
                    }
                }
                TunedChart::Cusum { config, .. } => {
                    let mut state = cusum_restart_init(config, &mut rng);
                    loop {
                        let t = state.time + 1;
                        let u = rng.sample::<f64, _>(StandardNormal) + shift_mean(t, &eta) / sigma_a;
                        if let Some(sig) = cusum_update(config, &mut state, u)? {
                            return Ok((sig.signal_time, sig.change_point_estimate, false));
                        }
                        if state.time >= cap {
                            return Ok((cap, u64::MAX, true));
                        }
                    }
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let n = spec.n_reps;
    let mut sum = 0u128;
    let mut sumsq = 0u128;
    let mut censored = 0usize;
    let mut signal_within = 0usize;
    let mut cpe_within = 0usize;
    let lo = t_star.saturating_sub(10);
    let hi = t_star + 10;
    for &(stime, cpe, cens) in &outcomes {
        sum += stime as u128;
        sumsq += (stime as u128) * (stime as u128);
        if cens {
            censored += 1;
        } else {
            if stime >= lo && stime <= hi {
                signal_within += 1;
            }
            if cpe >= lo && cpe <= hi {
                cpe_within += 1;
            }
        }
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    let var = (sumsq as f64 / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    let half = if n > 1 {
        -normal_quantile(spec.beta / 2.0)? * (var / nf).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(ExperimentRecord {
        method: chart.method(),
        phi1,
        delta,
        tuning: chart.tuning(),
        arl1: mean,
        arl1_ci_low: mean - half,
        arl1_ci_high: mean + half,
        frac_signal_within_10: signal_within as f64 / nf,
        frac_cpe_within_10: cpe_within as f64 / nf,
        n_reps: n,
        n_censored: censored,
        seed: source.seed,
    })
}

/// Picks the record with the lowest ARL₁ among tunings of one method at one
/// (φ₁, δ) cell. Ties break toward the cheaper chart: the smaller window for
/// the windowed chart, the larger slack for CUSUM.
pub fn best_over_tuning(records: &[ExperimentRecord]) -> Result<ExperimentRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::EmptyInput("no records to choose from".into()))?;
    for r in records {
        if r.method != first.method || r.phi1 != first.phi1 || r.delta != first.delta {
            return Err(Error::MismatchedCell(format!(
                "records mix cells: ({}, {}, {}) vs ({}, {}, {})",
                first.method, first.phi1, first.delta, r.method, r.phi1, r.delta
            )));
        }
    }
    let mut best = first;
    for r in &records[1..] {
        let better = r.arl1 < best.arl1
            || (r.arl1 == best.arl1
                && match r.method {
                    MethodId::Tsay => r.tuning < best.tuning,
                    MethodId::CusumS1 | MethodId::CusumS2 => r.tuning > best.tuning,
                });
        if better {
            best = r;
        }
    }
    Ok(best.clone())
}

/// ARL₁(CUSUM)/ARL₁(windowed chart) for one cell; > 1 means the windowed
/// chart detected the shift faster.
pub fn comparison_ratio(cusum: &ExperimentRecord, tsay: &ExperimentRecord) -> Result<f64> {
    if tsay.method != MethodId::Tsay
        || !matches!(cusum.method, MethodId::CusumS1 | MethodId::CusumS2)
    {
        return Err(Error::MismatchedCell(format!(
            "expected a CUSUM and a TSAY record, got {} and {}",
            cusum.method, tsay.method
        )));
    }
    if cusum.phi1 != tsay.phi1 || cusum.delta != tsay.delta {
        return Err(Error::MismatchedCell(format!(
            "records describe different cells: ({}, {}) vs ({}, {})",
            cusum.phi1, cusum.delta, tsay.phi1, tsay.delta
        )));
    }
    Ok(cusum.arl1 / tsay.arl1)
}

/// Low / median / high of a set of comparison ratios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioSummary {
    /// Smallest ratio.
    pub low: f64,
    /// Median (mean of the central pair for even counts).
    pub median: f64,
    /// Largest ratio.
    pub high: f64,
}

/// Summarizes comparison ratios as the quantities reported in comparison
/// tables: the smallest, median and largest ratio over the grid.
pub fn summarize_ratios(ratios: &[f64]) -> Result<RatioSummary> {
    if ratios.is_empty() {
        return Err(Error::EmptyInput("no ratios to summarize".into()));
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("ratios must be comparable"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(RatioSummary {
        low: sorted[0],
        median,
        high: sorted[n - 1],
    })
}

/// One row of the comparison/robustness CSVs: a (φ₁, δ) cell with both
/// methods at their chosen tunings.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    /// CUSUM slack policy being compared.
    pub setting: MethodId,
    /// AR(1) coefficient.
    pub phi1: f64,
    /// Shift size δ the tunings were chosen for.
    pub delta: f64,
    /// Injected-shift multiplier (1 for the tuned-size case).
    pub factor: f64,
    /// Best window size of the windowed chart.
    pub tsay_window: usize,
    /// Its ARL₁ under the injected shift.
    pub tsay_arl1: f64,
    /// CUSUM slack in play.
    pub cusum_slack: f64,
    /// Its ARL₁ under the injected shift.
    pub cusum_arl1: f64,
    /// cusum_arl1 / tsay_arl1.
    pub ratio: f64,
    /// Repetitions per cell.
    pub n_reps: usize,
    /// Master seed of the study.
    pub seed: u64,
}

fn fold_tag(parts: &[u64]) -> u64 {
    let mut acc = 0xcbf2_9ce4_8422_2325u64;
    for &p in parts {
        acc = (acc ^ p).wrapping_mul(0x1000_0000_01b3);
        acc ^= acc >> 29;
    }
    acc
}

/// Orchestrates the four studies over one grid, caching calibrations in
/// memory and on disk (warm start on re-runs).
pub struct SimLab {
    grid: ExperimentGrid,
    out_dir: PathBuf,
    source: RandomSource,
    /// (φ bits, K) → calibrated h.
    tsay_h: HashMap<(u64, usize), f64>,
    /// Persisted calibration rows backing `tsay_h`.
    tsay_rows: Vec<CalibrationRow>,
    /// slack bits → calibrated h_c (slack alone determines the in-control
    /// chart on standardized errors).
    cusum_h: HashMap<u64, f64>,
    /// Memoized cell records keyed by (study, method, φ, δ, tuning) bits.
    cells: HashMap<(u64, u64, u64, u64, u64), ExperimentRecord>,
    /// Memoized comparison rows (the robustness study reuses the tunings).
    comparison: Option<Vec<ComparisonRow>>,
}

impl SimLab {
    /// Creates a lab writing into `out_dir` (created if absent). With
    /// `fresh` set, existing calibration caches on disk are ignored.
    pub fn new(grid: ExperimentGrid, out_dir: &Path, fresh: bool) -> Result<Self> {
        grid.validate()?;
        std::fs::create_dir_all(out_dir)?;
        let source = RandomSource::new(grid.seed);
        let mut lab = Self {
            grid,
            out_dir: out_dir.to_path_buf(),
            source,
            tsay_h: HashMap::new(),
            tsay_rows: Vec::new(),
            cusum_h: HashMap::new(),
            cells: HashMap::new(),
            comparison: None,
        };
        if !fresh {
            lab.load_caches()?;
        }
        Ok(lab)
    }

    /// The grid the lab runs on.
    pub fn grid(&self) -> &ExperimentGrid {
        &self.grid
    }

    fn load_caches(&mut self) -> Result<()> {
        let cal = self.out_dir.join(CALIBRATION_CSV);
        if cal.is_file() {
            self.tsay_rows = load_calibration_file(&cal)?;
            for &phi in &self.grid.phi_values.clone() {
                let mid = model_id(&self.ar1_model(phi)?);
                for row in &self.tsay_rows {
                    if row.model_id == mid
                        && row.chosen
                        && row.n_reps == self.grid.calibration_reps
                    {
                        self.tsay_h.insert((phi.to_bits(), row.window_size), row.h);
                    }
                }
            }
        }
        let limits = self.out_dir.join(CUSUM_LIMITS_CSV);
        if limits.is_file() {
            for row in load_cusum_limits(&limits)? {
                if row.n_reps == self.grid.calibration_reps
                    && row.target_arl0 == self.grid.target_arl0
                {
                    self.cusum_h.insert(row.slack.to_bits(), row.limit);
                }
            }
        }
        Ok(())
    }

    fn ar1_model(&self, phi: f64) -> Result<ArmaModel> {
        if phi == 0.0 {
            ArmaModel::new(vec![], vec![], 1.0, 0.0)
        } else {
            ArmaModel::ar1(phi, 1.0)
        }
    }

    fn eta1_for(&self, phi: f64) -> Result<f64> {
        let model = self.ar1_model(phi)?;
        let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER)?;
        Ok(eta_weights(&pi, 2).eta1())
    }

    fn tau_for(&self, phi: f64, delta: f64) -> f64 {
        delta / (1.0 - phi * phi).sqrt()
    }

    /// Calibrated critical value for the windowed chart at (φ, K); runs the
    /// sequential search on a cache miss and persists the candidate table.
    pub fn ensure_tsay_h(&mut self, phi: f64, window: usize) -> Result<f64> {
        if let Some(&h) = self.tsay_h.get(&(phi.to_bits(), window)) {
            return Ok(h);
        }
        let model = self.ar1_model(phi)?;
        let tag = fold_tag(&[0xCA11, phi.to_bits(), window as u64]);
        let result: CalibrationResult = find_critical_value_warm(
            &model,
            window,
            self.grid.target_arl0,
            self.grid.beta,
            self.grid.calibration_reps,
            self.grid.calibration_step,
            self.source.derive(tag),
            &self.tsay_rows,
        )?;
        let mid = model_id(&model);
        // merge this run's table into the persisted rows (drop duplicates of
        // the same (model, window, h) key so files stay bounded)
        for c in &result.table {
            let exists = self.tsay_rows.iter().any(|r| {
                r.model_id == mid
                    && r.window_size == c.window_size
                    && r.h.to_bits() == c.h.to_bits()
                    && r.n_reps == self.grid.calibration_reps
                    && r.chosen == c.chosen
            });
            if !exists {
                self.tsay_rows.push(CalibrationRow {
                    model_id: mid.clone(),
                    window_size: c.window_size,
                    h: c.h,
                    n_reps: c.summary.n_reps,
                    mean: c.summary.mean,
                    ci_low: c.summary.ci_low,
                    ci_high: c.summary.ci_high,
                    chosen: c.chosen,
                    seed: c.seed,
                });
            }
        }
        self.persist_tsay_rows()?;
        self.tsay_h.insert((phi.to_bits(), window), result.h_opt);
        Ok(result.h_opt)
    }

    fn persist_tsay_rows(&self) -> Result<()> {
        let path = self.out_dir.join(CALIBRATION_CSV);
        let mut buf = Vec::new();
        // reuse the calibration CSV writer by staging rows through a result
        writeln!(
            buf,
            "model_id,K,h_candidate,N,arl_mean,ci_low,ci_high,chosen_flag,seed"
        )?;
        for r in &self.tsay_rows {
            writeln!(
                buf,
                "{},{},{:?},{},{:?},{:?},{:?},{},{}",
                r.model_id,
                r.window_size,
                r.h,
                r.n_reps,
                r.mean,
                r.ci_low,
                r.ci_high,
                u8::from(r.chosen),
                r.seed
            )?;
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Calibrated CUSUM decision interval for a slack value (cached; the
    /// in-control chart depends on the slack alone).
    pub fn ensure_cusum_limit(&mut self, slack: f64) -> Result<f64> {
        if let Some(&h) = self.cusum_h.get(&slack.to_bits()) {
            return Ok(h);
        }
        let tag = fold_tag(&[0xC5, slack.to_bits()]);
        let limit = match cusum_calibrate_limit(
            slack,
            self.grid.target_arl0,
            self.grid.calibration_reps,
            self.source.derive(tag),
        ) {
            Ok(h) => h,
            // A design slack above roughly Φ⁻¹(1 − 1/(2·ARL₀)) ≈ 3 makes the
            // nominal in-control target unreachable: even an immediate-signal
            // limit leaves the in-control run longer than the target. Keep
            // the cell with the floor limit — the chart is conservative in
            // control and the closest realizable version of the design.
            Err(Error::NoBracket(_)) => LIMIT_FLOOR,
            Err(e) => return Err(e),
        };
        self.cusum_h.insert(slack.to_bits(), limit);
        self.persist_cusum_limits()?;
        Ok(limit)
    }

    fn persist_cusum_limits(&self) -> Result<()> {
        let path = self.out_dir.join(CUSUM_LIMITS_CSV);
        let mut rows: Vec<(u64, f64)> = self.cusum_h.iter().map(|(&k, &v)| (k, v)).collect();
        rows.sort_by(|a, b| {
            f64::from_bits(a.0)
                .partial_cmp(&f64::from_bits(b.0))
                .expect("slack values are finite")
        });
        let mut buf = Vec::new();
        writeln!(buf, "slack,limit,target_arl0,N,seed")?;
        for (bits, limit) in rows {
            writeln!(
                buf,
                "{:?},{:?},{:?},{},{}",
                f64::from_bits(bits),
                limit,
                self.grid.target_arl0,
                self.grid.calibration_reps,
                self.grid.seed
            )?;
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    fn cell_spec(&self) -> CellSpec {
        CellSpec {
            n_reps: self.grid.n_reps,
            censor_cap: self.grid.censor_cap,
            t_star: 1,
            beta: self.grid.beta,
        }
    }

    /// Memoized cell run: the RNG source is derived from (study, method, φ,
    /// effective δ, tuning), so every cell is reproducible in isolation.
    fn cell(
        &mut self,
        study: u64,
        chart: &TunedChart,
        phi: f64,
        delta: f64,
    ) -> Result<ExperimentRecord> {
        let key = (
            study,
            chart.method().code(),
            phi.to_bits(),
            delta.to_bits(),
            chart.tuning().to_bits(),
        );
        if let Some(rec) = self.cells.get(&key) {
            return Ok(rec.clone());
        }
        let model = self.ar1_model(phi)?;
        let tag = fold_tag(&[study, key.1, key.2, key.3, key.4]);
        let record = run_arl1_cell(chart, &model, delta, &self.cell_spec(), self.source.derive(tag))?;
        self.cells.insert(key, record.clone());
        Ok(record)
    }

    fn tsay_chart(&mut self, phi: f64, window: usize) -> Result<TunedChart> {
        let h = self.ensure_tsay_h(phi, window)?;
        let model = self.ar1_model(phi)?;
        let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER)?;
        let detector = TsayDetector::new(&DetectorConfig {
            window_size: window,
            critical_value: h,
            eta: eta_weights(&pi, window.max(2)),
            sigma_a: model.sigma_a(),
        })?;
        Ok(TunedChart::Tsay { detector })
    }

    fn cusum_chart(&mut self, method: MethodId, slack: f64) -> Result<TunedChart> {
        let limit = self.ensure_cusum_limit(slack)?;
        Ok(TunedChart::Cusum {
            method,
            config: CusumConfig::new(slack, limit)?,
        })
    }

    /// All per-cell records for one study tag, in deterministic grid order:
    /// windowed chart over windows, then CUSUM setting 1, then the setting-2
    /// slack grid.
    fn study_records(&mut self, study: u64) -> Result<Vec<ExperimentRecord>> {
        let phis = self.grid.phi_values.clone();
        let deltas = self.grid.delta_values.clone();
        let windows = self.grid.window_sizes.clone();
        let slack_points = self.grid.slack_points;
        let mut records = Vec::new();
        for &phi in &phis {
            for &delta in &deltas {
                for &k in &windows {
                    let chart = self.tsay_chart(phi, k)?;
                    records.push(self.cell(study, &chart, phi, delta)?);
                }
                let eta1 = self.eta1_for(phi)?;
                let tau = self.tau_for(phi, delta);
                let s1 = slack_setting_1(tau, eta1, 1.0);
                let chart = self.cusum_chart(MethodId::CusumS1, s1)?;
                records.push(self.cell(study, &chart, phi, delta)?);
                for s in slack_grid_setting_2(tau, eta1, 1.0, slack_points) {
                    let chart = self.cusum_chart(MethodId::CusumS2, s)?;
                    records.push(self.cell(study, &chart, phi, delta)?);
                }
            }
        }
        Ok(records)
    }

    /// ARL₁ study: every cell of the grid; writes `arl1.csv`.
    pub fn arl1_study(&mut self) -> Result<Vec<ExperimentRecord>> {
        let records = self.study_records(STUDY_ARL1)?;
        write_records(&self.out_dir.join(ARL1_CSV), &records)?;
        Ok(records)
    }

    /// Accuracy study: an independent replication of the grid (fresh
    /// streams) focused on the ±10 fractions; writes `accuracy.csv`.
    pub fn accuracy_study(&mut self) -> Result<Vec<ExperimentRecord>> {
        let records = self.study_records(STUDY_ACCURACY)?;
        write_records(&self.out_dir.join(ACCURACY_CSV), &records)?;
        Ok(records)
    }

    /// Comparison study: per (φ, δ), the best tuning of each method from the
    /// ARL₁ surfaces and their ratio; writes `comparison.csv`.
    pub fn comparison_study(&mut self) -> Result<Vec<ComparisonRow>> {
        if let Some(rows) = &self.comparison {
            return Ok(rows.clone());
        }
        let records = self.study_records(STUDY_ARL1)?;
        let phis = self.grid.phi_values.clone();
        let deltas = self.grid.delta_values.clone();
        let mut rows = Vec::new();
        for &phi in &phis {
            for &delta in &deltas {
                let take = |method: MethodId, records: &[ExperimentRecord]| -> Vec<ExperimentRecord> {
                    records
                        .iter()
                        .filter(|r| r.method == method && r.phi1 == phi && r.delta == delta)
                        .cloned()
                        .collect()
                };
                let tsay_best = best_over_tuning(&take(MethodId::Tsay, &records))?;
                let s1 = best_over_tuning(&take(MethodId::CusumS1, &records))?;
                let s2_best = best_over_tuning(&take(MethodId::CusumS2, &records))?;
                for cusum in [&s1, &s2_best] {
                    rows.push(ComparisonRow {
                        setting: cusum.method,
                        phi1: phi,
                        delta,
                        factor: 1.0,
                        tsay_window: tsay_best.tuning as usize,
                        tsay_arl1: tsay_best.arl1,
                        cusum_slack: cusum.tuning,
                        cusum_arl1: cusum.arl1,
                        ratio: comparison_ratio(cusum, &tsay_best)?,
                        n_reps: self.grid.n_reps,
                        seed: self.grid.seed,
                    });
                }
            }
        }
        write_comparison(&self.out_dir.join(COMPARISON_CSV), &rows)?;
        self.comparison = Some(rows.clone());
        Ok(rows)
    }

    /// Robustness study: tunings frozen from the comparison study, injected
    /// shift scaled by 0.5 and 2.0; writes `robustness.csv`.
    pub fn robustness_study(&mut self) -> Result<Vec<ComparisonRow>> {
        let tuned = self.comparison_study()?;
        let mut rows = Vec::new();
        for &factor in &[0.5, 2.0] {
            for base in &tuned {
                let delta_eff = base.delta * factor;
                let tsay = {
                    let chart = self.tsay_chart(base.phi1, base.tsay_window)?;
                    self.cell(STUDY_ROBUSTNESS, &chart, base.phi1, delta_eff)?
                };
                let cusum = {
                    let chart = self.cusum_chart(base.setting, base.cusum_slack)?;
                    self.cell(STUDY_ROBUSTNESS, &chart, base.phi1, delta_eff)?
                };
                rows.push(ComparisonRow {
                    setting: base.setting,
                    phi1: base.phi1,
                    delta: base.delta,
                    factor,
                    tsay_window: base.tsay_window,
                    tsay_arl1: tsay.arl1,
                    cusum_slack: base.cusum_slack,
                    cusum_arl1: cusum.arl1,
                    ratio: cusum.arl1 / tsay.arl1,
                    n_reps: self.grid.n_reps,
                    seed: self.grid.seed,
                });
            }
        }
        write_comparison(&self.out_dir.join(ROBUSTNESS_CSV), &rows)?;
        Ok(rows)
    }

    /// Writes the manifest: grid parameters, seed and SHA-256 of every
    /// output file present. Contains no timestamps, so a deterministic run
    /// reproduces it byte for byte.
    pub fn write_manifest(&self) -> Result<()> {
        let g = &self.grid;
        let mut buf = String::new();
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(";")
        };
        buf.push_str(&format!("phi_values={}\n", join(&g.phi_values)));
        buf.push_str(&format!("delta_values={}\n", join(&g.delta_values)));
        buf.push_str(&format!(
            "window_sizes={}\n",
            g.window_sizes
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(";")
        ));
        buf.push_str(&format!("slack_points={}\n", g.slack_points));
        buf.push_str(&format!("n_reps={}\n", g.n_reps));
        buf.push_str(&format!("calibration_reps={}\n", g.calibration_reps));
        buf.push_str(&format!("calibration_step={:?}\n", g.calibration_step));
        buf.push_str(&format!("target_arl0={:?}\n", g.target_arl0));
        buf.push_str(&format!("beta={:?}\n", g.beta));
        buf.push_str(&format!("censor_cap={}\n", g.censor_cap));
        buf.push_str(&format!("seed={}\n", g.seed));
        for name in [
            ARL1_CSV,
            ACCURACY_CSV,
            COMPARISON_CSV,
            ROBUSTNESS_CSV,
            CALIBRATION_CSV,
            CUSUM_LIMITS_CSV,
        ] {
            let path = self.out_dir.join(name);
            if path.is_file() {
                let bytes = std::fs::read(&path)?;
                let digest = Sha256::digest(&bytes);
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                buf.push_str(&format!("sha256 {name}={hex}\n"));
            }
        }
        std::fs::write(self.out_dir.join(MANIFEST_FILE), buf)?;
        Ok(())
    }

    /// Runs all four studies and the manifest.
    pub fn run_all(&mut self) -> Result<()> {
        self.arl1_study()?;
        self.accuracy_study()?;
        self.comparison_study()?;
        self.robustness_study()?;
        self.write_manifest()
    }
}

const RECORD_HEADER: &str = "method,phi1,delta,tuning,arl1,arl1_ci_low,arl1_ci_high,frac_signal_within_10,frac_cpe_within_10,n_reps,n_censored,seed";

/// Writes experiment records as CSV (shortest-round-trip float formatting).
pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            buf,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{}",
            r.method,
            r.phi1,
            r.delta,
            r.tuning,
            r.arl1,
            r.arl1_ci_low,
            r.arl1_ci_high,
            r.frac_signal_within_10,
            r.frac_cpe_within_10,
            r.n_reps,
            r.n_censored,
            r.seed
        )?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

const COMPARISON_HEADER: &str =
    "setting,phi1,delta,factor,tsay_window,tsay_arl1,cusum_slack,cusum_arl1,ratio,n_reps,seed";

/// Writes comparison/robustness rows as CSV.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{COMPARISON_HEADER}")?;
    for r in rows {
        writeln!(
            buf,
            "{},{:?},{:?},{:?},{},{:?},{:?},{:?},{:?},{},{}",
            r.setting,
            r.phi1,
            r.delta,
            r.factor,
            r.tsay_window,
            r.tsay_arl1,
            r.cusum_slack,
            r.cusum_arl1,
            r.ratio,
            r.n_reps,
            r.seed
        )?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// One persisted CUSUM limit row.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumLimitRow {
    /// Slack value.
    pub slack: f64,
    /// Calibrated decision interval.
    pub limit: f64,
    /// Target the limit was calibrated for.
    pub target_arl0: f64,
    /// Repetitions per calibration probe.
    pub n_reps: usize,
    /// Master seed of the study that produced the row.
    pub seed: u64,
}

/// Loads rows written by the lab's CUSUM limit cache.
pub fn load_cusum_limits(path: &Path) -> Result<Vec<CusumLimitRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("slack,limit,target_arl0,N,seed") => {}
        _ => {
            return Err(Error::Malformed(format!(
                "CUSUM limit file {} has an unexpected header",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Malformed(format!(
                "CUSUM limit line {}: expected 5 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Malformed(format!("CUSUM limit line {}: bad number `{s}`", lineno + 2)))
        };
        rows.push(CusumLimitRow {
            slack: parse(fields[0])?,
            limit: parse(fields[1])?,
            target_arl0: parse(fields[2])?,
            n_reps: parse(fields[3])? as usize,
            seed: parse(fields[4])? as u64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn record(method: MethodId, tuning: f64, arl1: f64) -> ExperimentRecord {
        ExperimentRecord {
            method,
            phi1: 0.5,
            delta: 1.0,
            tuning,
            arl1,
            arl1_ci_low: arl1 - 1.0,
            arl1_ci_high: arl1 + 1.0,
            frac_signal_within_10: 0.5,
            frac_cpe_within_10: 0.5,
            n_reps: 100,
            n_censored: 0,
            seed: 1,
        }
    }

    fn white_noise_tsay(h: f64, k: usize) -> TunedChart {
        let model = ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap();
        let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER).unwrap();
        TunedChart::Tsay {
            detector: TsayDetector::new(&DetectorConfig {
                window_size: k,
                critical_value: h,
                eta: eta_weights(&pi, k.max(2)),
                sigma_a: 1.0,
            })
            .unwrap(),
        }
    }

    #[test]
    fn best_over_tuning_picks_minimum_and_breaks_ties() {
        let records = vec![
            record(MethodId::Tsay, 5.0, 12.0),
            record(MethodId::Tsay, 10.0, 9.0),
            record(MethodId::Tsay, 25.0, 15.0),
        ];
        assert_eq!(best_over_tuning(&records).unwrap().tuning, 10.0);
        // tie: smaller window wins for the windowed chart
        let tie = vec![record(MethodId::Tsay, 25.0, 9.0), record(MethodId::Tsay, 5.0, 9.0)];
        assert_eq!(best_over_tuning(&tie).unwrap().tuning, 5.0);
        // tie: larger slack wins for CUSUM
        let tie = vec![
            record(MethodId::CusumS2, 0.2, 9.0),
            record(MethodId::CusumS2, 0.7, 9.0),
        ];
        assert_eq!(best_over_tuning(&tie).unwrap().tuning, 0.7);
        // single record is the identity
        let one = vec![record(MethodId::CusumS1, 0.5, 3.0)];
        assert_eq!(best_over_tuning(&one).unwrap(), one[0]);
        assert!(matches!(best_over_tuning(&[]), Err(Error::EmptyInput(_))));
        // mixed cells are rejected
        let mut other = record(MethodId::Tsay, 5.0, 2.0);
        other.delta = 2.0;
        assert!(matches!(
            best_over_tuning(&[record(MethodId::Tsay, 5.0, 1.0), other]),
            Err(Error::MismatchedCell(_))
        ));
    }

    #[test]
    fn comparison_ratio_basics() {
        let tsay = record(MethodId::Tsay, 10.0, 5.0);
        let cusum = record(MethodId::CusumS1, 0.5, 5.0);
        assert_relative_eq!(comparison_ratio(&cusum, &tsay).unwrap(), 1.0, epsilon = 1e-15);
        let faster_tsay = record(MethodId::Tsay, 10.0, 2.5);
        assert_relative_eq!(
            comparison_ratio(&cusum, &faster_tsay).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        let mut off_cell = record(MethodId::CusumS1, 0.5, 5.0);
        off_cell.phi1 = -0.5;
        assert!(comparison_ratio(&off_cell, &tsay).is_err());
        assert!(comparison_ratio(&tsay, &cusum).is_err()); // swapped roles
    }

    #[test]
    fn ratio_summary_quantiles() {
        let s = summarize_ratios(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.low, s.median, s.high), (1.0, 2.0, 3.0));
        let s = summarize_ratios(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_relative_eq!(s.median, 2.5, epsilon = 1e-15);
        assert!(summarize_ratios(&[]).is_err());
    }

    #[test]
    fn large_shift_cell_signals_immediately() {
        let chart = white_noise_tsay(3.0, 10);
        let model = ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap();
        let spec = CellSpec {
            n_reps: 300,
            censor_cap: 1000,
            t_star: 1,
            beta: 0.05,
        };
        let rec = run_arl1_cell(&chart, &model, 5.0, &spec, RandomSource::new(17)).unwrap();
        assert!(rec.arl1 < 2.0, "ARL1 {} for a 5σ shift", rec.arl1);
        assert!(rec.frac_signal_within_10 > 0.95);
        assert!(rec.frac_cpe_within_10 > 0.95);
        assert_eq!(rec.n_censored, 0);
        assert_eq!(rec.method, MethodId::Tsay);
        assert_eq!(rec.tuning, 10.0);
        assert!(rec.arl1_ci_low <= rec.arl1 && rec.arl1 <= rec.arl1_ci_high);
    }

    #[test]
    fn cusum_cell_detects_large_shift() {
        let chart = TunedChart::Cusum {
            method: MethodId::CusumS1,
            config: CusumConfig::new(0.5, 4.77).unwrap(),
        };
        let model = ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap();
        let spec = CellSpec {
            n_reps: 300,
            censor_cap: 1000,
            t_star: 1,
            beta: 0.05,
        };
        let rec = run_arl1_cell(&chart, &model, 5.0, &spec, RandomSource::new(18)).unwrap();
        assert!(rec.arl1 < 4.0, "CUSUM ARL1 {} for a 5σ shift", rec.arl1);
        assert!(rec.frac_signal_within_10 > 0.95);
        assert_eq!(rec.method, MethodId::CusumS1);
        assert_relative_eq!(rec.tuning, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn no_shift_cell_reproduces_in_control_behaviour() {
        // δ = 0 ⇒ the cell measures ARL₀; K = 1 at the analytic h
        let chart = white_noise_tsay(3.000_001_359_027_318_7, 1);
        let model = ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap();
        let spec = CellSpec {
            n_reps: 800,
            censor_cap: 100_000,
            t_star: 1,
            beta: 0.05,
        };
        let rec = run_arl1_cell(&chart, &model, 0.0, &spec, RandomSource::new(19)).unwrap();
        assert!(
            (rec.arl1 - 370.4).abs() < 5.0 * 370.4 / (800.0f64).sqrt(),
            "in-control ARL via cell runner: {}",
            rec.arl1
        );
    }

    #[test]
    fn cell_runs_are_deterministic() {
        let chart = white_noise_tsay(3.0, 5);
        let model = ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap();
        let spec = CellSpec {
            n_reps: 200,
            censor_cap: 1000,
            t_star: 1,
            beta: 0.05,
        };
        let a = run_arl1_cell(&chart, &model, 1.0, &spec, RandomSource::new(7)).unwrap();
        let b = run_arl1_cell(&chart, &model, 1.0, &spec, RandomSource::new(7)).unwrap();
        assert_eq!(a, b);
        let c = run_arl1_cell(&chart, &model, 1.0, &spec, RandomSource::new(8)).unwrap();
        assert_ne!(a.arl1.to_bits(), c.arl1.to_bits());
    }

    #[test]
    fn record_csv_write_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records = vec![record(MethodId::Tsay, 5.0, 12.5), record(MethodId::CusumS2, 0.25, 9.0)];
        write_records(&path, &records).unwrap();
        let first = std::fs::read(&path).unwrap();
        write_records(&path, &records).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        let text = String::from_utf8(first).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RECORD_HEADER);
        assert!(lines.next().unwrap().starts_with("TSAY,0.5,1.0,5.0,12.5,"));
    }

    #[test]
    fn cusum_limits_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = ExperimentGrid {
            phi_values: vec![0.0],
            delta_values: vec![1.0],
            window_sizes: vec![1],
            slack_points: 2,
            n_reps: 50,
            calibration_reps: 400,
            calibration_step: 0.1,
            target_arl0: 30.0,
            beta: 0.05,
            censor_cap: 10_000,
            seed: 5,
        };
        let mut lab = SimLab::new(grid.clone(), dir.path(), true).unwrap();
        let limit = lab.ensure_cusum_limit(0.5).unwrap();
        let rows = load_cusum_limits(&dir.path().join(CUSUM_LIMITS_CSV)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_relative_eq!(rows[0].slack, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rows[0].limit, limit, epsilon = 1e-15);
        // a second lab warm-starts from the file without recalibrating
        let mut lab2 = SimLab::new(grid, dir.path(), false).unwrap();
        assert_relative_eq!(lab2.ensure_cusum_limit(0.5).unwrap(), limit, epsilon = 1e-15);
    }

    #[test]
    fn grid_validation_rejects_bad_axes() {
        let mut g = ExperimentGrid::desk_default(1);
        g.phi_values = vec![1.0];
        assert!(g.validate().is_err());
        let mut g = ExperimentGrid::desk_default(1);
        g.delta_values = vec![-0.5];
        assert!(g.validate().is_err());
        let mut g = ExperimentGrid::desk_default(1);
        g.window_sizes = vec![0];
        assert!(g.validate().is_err());
        assert!(ExperimentGrid::desk_default(1).validate().is_ok());
    }

    #[test]
    fn tiny_lab_end_to_end() {
        // a miniature grid exercises the full pipeline quickly
        let dir = tempfile::tempdir().unwrap();
        let grid = ExperimentGrid {
            phi_values: vec![0.0, 0.5],
            delta_values: vec![1.5],
            window_sizes: vec![1, 2],
            slack_points: 2,
            n_reps: 150,
            calibration_reps: 500,
            calibration_step: 0.2,
            target_arl0: 50.0,
            beta: 0.05,
            censor_cap: 20_000,
            seed: 99,
        };
        let mut lab = SimLab::new(grid, dir.path(), true).unwrap();
        lab.run_all().unwrap();
        for name in [
            ARL1_CSV,
            ACCURACY_CSV,
            COMPARISON_CSV,
            ROBUSTNESS_CSV,
            CALIBRATION_CSV,
            CUSUM_LIMITS_CSV,
            MANIFEST_FILE,
        ] {
            assert!(dir.path().join(name).is_file(), "{name} missing");
        }
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(manifest.contains("seed=99"));
        assert!(manifest.contains(&format!("sha256 {ARL1_CSV}=")));
        // comparison rows: 2 φ × 1 δ × 2 settings
        let comparison = std::fs::read_to_string(dir.path().join(COMPARISON_CSV)).unwrap();
        assert_eq!(comparison.lines().count(), 1 + 4);
        // robustness doubles that (two factors)
        let robustness = std::fs::read_to_string(dir.path().join(ROBUSTNESS_CSV)).unwrap();
        assert_eq!(robustness.lines().count(), 1 + 8);

        // deterministic re-run from scratch reproduces every byte
        let manifest_a = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let grid2 = ExperimentGrid {
            phi_values: vec![0.0, 0.5],
            delta_values: vec![1.5],
            window_sizes: vec![1, 2],
            slack_points: 2,
            n_reps: 150,
            calibration_reps: 500,
            calibration_step: 0.2,
            target_arl0: 50.0,
            beta: 0.05,
            censor_cap: 20_000,
            seed: 99,
        };
        let mut lab2 = SimLab::new(grid2, dir2.path(), true).unwrap();
        lab2.run_all().unwrap();
        assert_eq!(
            manifest_a,
            std::fs::read(dir2.path().join(MANIFEST_FILE)).unwrap()
        );
    }
}

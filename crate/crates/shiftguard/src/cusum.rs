//! Two-sided tabular CUSUM on standardized one-step errors — the baseline
//! chart the level-shift window is measured against.
//!
//! With standardized errors u_t = e_t/σ_a, reference value (slack) s and
//! decision interval h_c, the classic recursions (Page, 1954; see also
//! Montgomery, *Introduction to Statistical Quality Control*):
//!
//! ```text
//! C⁺_t = max(0, u_t − s + C⁺_{t−1}),
//! C⁻_t = max(0, −s − u_t + C⁻_{t−1}),
//! ```
//!
//! signal when either side reaches h_c (inclusive). Each side carries a
//! counter of consecutive periods since it last sat at zero; at a signal on
//! that side the change point is estimated as T − n + 1.
//!
//! The slack is tuned to the one-step-ahead mean shift the monitored
//! level shift induces: a shift of size τ moves e_{t*+1} by τη₁, so the
//! textbook "half the shift to detect" rule gives s = τη₁/(2σ_a).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::RandomSource;

/// Default number of in-control warm-up updates for the restart
/// initialization.
pub const DEFAULT_RESTART_BURNIN: usize = 50;

/// Hard caps on the h_c bracket explored by [`cusum_calibrate_limit`]. A
/// target in-control ARL below the ARL at `LIMIT_FLOOR` is unreachable for
/// the given slack (roughly slack > Φ⁻¹(1 − 1/(2·ARL₀))) and reported as
/// [`crate::Error::NoBracket`].
pub const LIMIT_FLOOR: f64 = 0.1;
const LIMIT_LO: f64 = LIMIT_FLOOR;
const LIMIT_HI: f64 = 50.0;

/// Static configuration of the two-sided chart.
#[derive(Clone, Copy, Debug)]
pub struct CusumConfig {
    /// Reference value s ≥ 0 (standardized units).
    pub slack: f64,
    /// Decision interval h_c > 0 (standardized units).
    pub limit: f64,
    /// In-control updates performed by the restart initialization.
    pub restart_burnin: usize,
}

impl CusumConfig {
    /// Builds a configuration with the default restart burn-in.
    pub fn new(slack: f64, limit: f64) -> Result<Self> {
        if !slack.is_finite() || slack < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "slack must be finite and non-negative, got {slack}"
            )));
        }
        if !limit.is_finite() || limit <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "limit must be finite and positive, got {limit}"
            )));
        }
        Ok(Self {
            slack,
            limit,
            restart_burnin: DEFAULT_RESTART_BURNIN,
        })
    }
}

/// Mutable chart state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CusumState {
    /// Upper cumulative sum C⁺.
    pub c_plus: f64,
    /// Lower cumulative sum C⁻.
    pub c_minus: f64,
    /// Consecutive periods with C⁺ > 0.
    pub n_plus: u64,
    /// Consecutive periods with C⁻ > 0.
    pub n_minus: u64,
    /// Monitoring time T (updates consumed since the state was started).
    pub time: u64,
    /// Frozen flag set at a signal.
    pub signalled: bool,
}

impl CusumState {
    /// Fresh zero state.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Resets sums and counters to zero without touching the clock.
    fn reset_sums(&mut self) {
        self.c_plus = 0.0;
        self.c_minus = 0.0;
        self.n_plus = 0;
        self.n_minus = 0;
    }
}

/// An alarm raised by the CUSUM chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CusumSignal {
    /// Monitoring time T at which a side reached h_c.
    pub signal_time: u64,
    /// The crossing side's cumulative sum at the signal.
    pub statistic: f64,
    /// Estimated change point T − n + 1 from the crossing side's counter.
    pub change_point_estimate: u64,
    /// +1 for an upper-side signal, −1 for a lower-side signal.
    pub direction: i8,
}

/// Feeds one standardized error into the chart. Signals when either side
/// reaches the decision interval (inclusive); the state is then frozen.
/// When both sides cross at once the larger sum wins, upper side on a tie.
pub fn cusum_update(
    config: &CusumConfig,
    state: &mut CusumState,
    u: f64,
) -> Result<Option<CusumSignal>> {
    if !u.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if state.signalled {
        return Err(Error::SignalledStateFrozen);
    }
    state.c_plus = (u - config.slack + state.c_plus).max(0.0);
    state.c_minus = (-config.slack - u + state.c_minus).max(0.0);
    state.n_plus = if state.c_plus > 0.0 { state.n_plus + 1 } else { 0 };
    state.n_minus = if state.c_minus > 0.0 { state.n_minus + 1 } else { 0 };
    state.time += 1;

    let up = state.c_plus >= config.limit;
    let down = state.c_minus >= config.limit;
    if !up && !down {
        return Ok(None);
    }
    state.signalled = true;
    let (stat, n, dir) = if up && (!down || state.c_plus >= state.c_minus) {
        (state.c_plus, state.n_plus, 1i8)
    } else {
        (state.c_minus, state.n_minus, -1i8)
    };
    Ok(Some(CusumSignal {
        signal_time: state.time,
        statistic: stat,
        change_point_estimate: state.time + 1 - n.min(state.time),
        direction: dir,
    }))
}

/// Applies a fixed sequence of standardized errors starting from zero,
/// resetting both sides (and counters) whenever a side crosses h_c. Used by
/// the restart initialization; exposed for direct testing.
pub fn run_with_resets(config: &CusumConfig, errors: &[f64]) -> CusumState {
    let mut state = CusumState::zero();
    for &u in errors {
        state.c_plus = (u - config.slack + state.c_plus).max(0.0);
        state.c_minus = (-config.slack - u + state.c_minus).max(0.0);
        state.n_plus = if state.c_plus > 0.0 { state.n_plus + 1 } else { 0 };
        state.n_minus = if state.c_minus > 0.0 { state.n_minus + 1 } else { 0 };
        state.time += 1;
        if state.c_plus >= config.limit || state.c_minus >= config.limit {
            state.reset_sums();
        }
    }
    state
}

/// Restart initialization: run `restart_burnin` in-control standardized
/// errors through the chart, resetting both sides at any crossing, and hand
/// back the resulting state with its clock rewound to zero. This places the
/// chart in a typical mid-stream (steady-state) condition rather than the
/// optimistic all-zero start.
pub fn cusum_restart_init<R: Rng + ?Sized>(config: &CusumConfig, rng: &mut R) -> CusumState {
    let errors: Vec<f64> = (0..config.restart_burnin)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut state = run_with_resets(config, &errors);
    state.time = 0;
    state
}

/// Slack tuned to the known shift: s = τη₁/(2σ_a).
pub fn slack_setting_1(tau: f64, eta1: f64, sigma_a: f64) -> f64 {
    tau * eta1 / (2.0 * sigma_a)
}

/// Grid of slack values spanning mis-tuned charts: multipliers linearly
/// spaced over [0.05, 1.5] applied to the tuned slack τη₁/(2σ_a).
pub fn slack_grid_setting_2(tau: f64, eta1: f64, sigma_a: f64, n_points: usize) -> Vec<f64> {
    let base = slack_setting_1(tau, eta1, sigma_a);
    let (lo, hi) = (0.05, 1.5);
    if n_points <= 1 {
        return vec![base * (lo + hi) / 2.0];
    }
    (0..n_points)
        .map(|i| base * (lo + (hi - lo) * i as f64 / (n_points - 1) as f64))
        .collect()
}

/// Zero-start run length of the two-sided chart under in-control
/// standardized N(0,1) errors, censored at `cap` (censored runs count as
/// `cap`).
fn run_length_censored<R: Rng + ?Sized>(config: &CusumConfig, cap: u64, rng: &mut R) -> (u64, bool) {
    let mut state = CusumState::zero();
    loop {
        let u: f64 = rng.sample(StandardNormal);
        if cusum_update(config, &mut state, u)
            .expect("in-control update cannot fail")
            .is_some()
        {
            return (state.time, false);
        }
        if state.time >= cap {
            return (cap, true);
        }
    }
}

/// Monte Carlo in-control ARL of the chart at (slack, limit); returns
/// (mean, half-width of a 95% normal-theory CI, number censored).
/// Repetition `i` uses RNG stream `i` of `source`, so the estimate is
/// reproducible and independent of thread scheduling.
pub fn cusum_arl0(
    slack: f64,
    limit: f64,
    n_reps: usize,
    cap: u64,
    source: RandomSource,
) -> Result<(f64, f64, usize)> {
    if n_reps == 0 {
        return Err(Error::EmptyInput("n_reps must be positive".into()));
    }
    let config = CusumConfig::new(slack, limit)?;
    let runs: Vec<(u64, bool)> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = source.with_stream(rep as u64).rng();
            run_length_censored(&config, cap, &mut rng)
        })
        .collect();
    let mut sum = 0u128;
    let mut sumsq = 0u128;
    let mut censored = 0usize;
    for &(rl, cens) in &runs {
        sum += rl as u128;
        sumsq += (rl as u128) * (rl as u128);
        censored += cens as usize;
    }
    let n = n_reps as f64;
    let mean = sum as f64 / n;
    let var = (sumsq as f64 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let half = 1.959_963_984_540_054 * (var / n).sqrt();
    Ok((mean, half, censored))
}

/// Calibrates the decision interval h_c so the in-control ARL matches
/// `target_arl0`, by bisection on the monotone map h_c ↦ ARL₀(h_c).
///
/// Each probe estimates the ARL with `n_reps` zero-start run lengths
/// (censored at 30× the target); the bracket moves only when the target
/// falls outside the probe's 95% CI, and the midpoint is accepted as soon as
/// the target falls inside it or the bracket closes below 10⁻³.
pub fn cusum_calibrate_limit(
    slack: f64,
    target_arl0: f64,
    n_reps: usize,
    source: RandomSource,
) -> Result<f64> {
    if !(target_arl0 > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target_arl0 must exceed 1, got {target_arl0}"
        )));
    }
    let cap = (30.0 * target_arl0).ceil() as u64;
    let arl_at = |h: f64, probe: u64| -> Result<(f64, f64)> {
        let (mean, half, _) = cusum_arl0(slack, h, n_reps, cap, source.derive(probe))?;
        Ok((mean, half))
    };
    let (mut lo, mut hi) = (LIMIT_LO, LIMIT_HI);
    let (arl_lo, _) = arl_at(lo, 0)?;
    if arl_lo > target_arl0 {
        return Err(Error::NoBracket(format!(
            "ARL at minimum limit {LIMIT_LO} already exceeds target ({arl_lo:.1} > {target_arl0})"
        )));
    }
    let (arl_hi, _) = arl_at(hi, 1)?;
    if arl_hi < target_arl0 {
        return Err(Error::NoBracket(format!(
            "ARL at maximum limit {LIMIT_HI} still below target ({arl_hi:.1} < {target_arl0})"
        )));
    }
    let mut probe = 2u64;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        let (mean, half) = arl_at(mid, probe)?;
        probe += 1;
        if mean + half < target_arl0 {
            lo = mid;
        } else if mean - half > target_arl0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn update_follows_the_recursions() {
        let config = CusumConfig::new(0.5, 4.0).unwrap();
        let mut state = CusumState::zero();
        assert!(cusum_update(&config, &mut state, 1.2).unwrap().is_none());
        assert_relative_eq!(state.c_plus, 0.7, epsilon = 1e-15);
        assert_relative_eq!(state.c_minus, 0.0, epsilon = 1e-15);
        assert_eq!((state.n_plus, state.n_minus), (1, 0));

        assert!(cusum_update(&config, &mut state, -0.3).unwrap().is_none());
        assert_relative_eq!(state.c_plus, 0.0, epsilon = 1e-15); // 0.7 − 0.8
        assert_relative_eq!(state.c_minus, 0.0, epsilon = 1e-15); // −0.5 + 0.3
        assert_eq!((state.n_plus, state.n_minus), (0, 0));

        assert!(cusum_update(&config, &mut state, -2.0).unwrap().is_none());
        assert_relative_eq!(state.c_minus, 1.5, epsilon = 1e-15);
        assert_eq!(state.n_minus, 1);
    }

    #[test]
    fn signal_reports_side_counter_change_point() {
        let config = CusumConfig::new(0.5, 4.0).unwrap();
        let mut state = CusumState::zero();
        // three quiet steps, then a run of +2.0 shifts starting at time 4
        for _ in 0..3 {
            assert!(cusum_update(&config, &mut state, 0.0).unwrap().is_none());
        }
        let mut signal = None;
        for _ in 0..10 {
            if let Some(sig) = cusum_update(&config, &mut state, 2.0).unwrap() {
                signal = Some(sig);
                break;
            }
        }
        let sig = signal.expect("run of shifts must trigger");
        // C⁺ gains 1.5 per step: crosses 4.0 at the third shifted step
        assert_eq!(sig.signal_time, 6);
        assert_relative_eq!(sig.statistic, 4.5, epsilon = 1e-12);
        assert_eq!(sig.direction, 1);
        assert_eq!(sig.change_point_estimate, 4);
        assert!(state.signalled);
        assert!(matches!(
            cusum_update(&config, &mut state, 0.0).unwrap_err(),
            Error::SignalledStateFrozen
        ));
    }

    #[test]
    fn crossing_is_inclusive() {
        let config = CusumConfig::new(0.0, 2.0).unwrap();
        let mut state = CusumState::zero();
        let sig = cusum_update(&config, &mut state, -2.0).unwrap();
        assert!(sig.is_some(), "hitting h_c exactly must signal");
        assert_eq!(sig.unwrap().direction, -1);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let config = CusumConfig::new(0.5, 4.0).unwrap();
        let mut state = CusumState::zero();
        assert!(matches!(
            cusum_update(&config, &mut state, f64::NAN).unwrap_err(),
            Error::NonFiniteInput
        ));
    }

    #[test]
    fn restart_resets_both_sides_at_a_crossing() {
        let config = CusumConfig::new(0.5, 4.0).unwrap();
        // the 9.0 sends C⁺ over h_c → full reset; only the tail remains
        let with_spike = run_with_resets(&config, &[0.4, -1.2, 9.0, 0.9]);
        let tail_only = run_with_resets(&config, &[0.9]);
        assert_relative_eq!(with_spike.c_plus, tail_only.c_plus, epsilon = 1e-15);
        assert_relative_eq!(with_spike.c_minus, tail_only.c_minus, epsilon = 1e-15);
        assert_eq!(with_spike.n_plus, tail_only.n_plus);
        assert_eq!(with_spike.n_minus, tail_only.n_minus);
    }

    #[test]
    fn restart_init_is_deterministic_and_clock_rewound() {
        let config = CusumConfig::new(0.25, 5.0).unwrap();
        let a = cusum_restart_init(&config, &mut RandomSource::new(9).rng());
        let b = cusum_restart_init(&config, &mut RandomSource::new(9).rng());
        assert_eq!(a, b);
        assert_eq!(a.time, 0);
        assert!(!a.signalled);
        assert!(a.c_plus < 5.0 && a.c_minus < 5.0);
    }

    #[test]
    fn slack_settings_match_hand_values() {
        // AR(1) φ=0.5, δ=1, σ_a=1: τ = 1/√0.75, η₁ = 0.5 → s = τ/4
        let tau = 1.154_700_538_379_251_5;
        assert_relative_eq!(
            slack_setting_1(tau, 0.5, 1.0),
            0.288_675_134_594_812_9,
            epsilon = 1e-12
        );
        // white noise δ=1: τ = 1, η₁ = 1 → the textbook s = 1/2
        assert_relative_eq!(slack_setting_1(1.0, 1.0, 1.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(slack_setting_1(0.0, 0.5, 1.0), 0.0, epsilon = 1e-15);

        let grid = slack_grid_setting_2(1.0, 1.0, 1.0, 8);
        assert_eq!(grid.len(), 8);
        assert_relative_eq!(grid[0], 0.025, epsilon = 1e-12); // 0.05 · 0.5
        assert_relative_eq!(grid[7], 0.75, epsilon = 1e-12); // 1.5 · 0.5
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn calibrated_limit_hits_a_modest_target() {
        let source = RandomSource::new(4242);
        let h = cusum_calibrate_limit(0.5, 50.0, 4000, source).unwrap();
        // independent check with a fresh derived source
        let (mean, half, _) = cusum_arl0(0.5, h, 4000, 5000, source.derive(0xC0FFEE)).unwrap();
        assert!(
            (mean - 50.0).abs() < 3.0 * half.max(1.0),
            "calibrated h {h}: ARL {mean} ± {half}"
        );
    }

    #[test]
    fn no_bracket_when_target_is_absurd() {
        let source = RandomSource::new(7);
        assert!(matches!(
            cusum_calibrate_limit(0.5, 1.0001, 200, source),
            Err(Error::InvalidParameter(_)) | Err(Error::NoBracket(_))
        ));
    }
}

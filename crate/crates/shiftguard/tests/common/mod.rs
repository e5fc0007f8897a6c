//! Shared statistical helpers for the integration tests: goodness-of-fit
//! machinery with fixed 1% critical values so seeded tests stay stable.
//
// Each integration test binary compiles this module separately and uses
// only a subset of the helpers, so per-binary dead-code lints are noise.
#![allow(dead_code)]

/// One-sample Kolmogorov–Smirnov statistic against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at the 1% level:
/// D > c(α)/√n rejects, with c(0.01) = 1.628.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Pearson chi-square statistic for observed counts against expected counts.
pub fn chi_square_statistic(observed: &[usize], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            assert!(e > 0.0, "expected counts must be positive");
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum()
}

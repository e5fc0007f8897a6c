//! Distributional properties of the windowed chart that cut across modules:
//! stationary box coverage against the quadrature oracle, and shift-size
//! recovery through the τ̂ read-out.

mod common;

use rand::Rng;
use rand_distr::StandardNormal;
use shiftguard::arma::{ar_representation, eta_weights, ArmaModel, DEFAULT_PI_MAX_ORDER, DEFAULT_PI_TOL};
use shiftguard::calibrate::box_probability_quadrature;
use shiftguard::detector::{build_transfer_matrix, DetectorConfig, TsayDetector};
use shiftguard::stats::RandomSource;

fn detector_for(phi: f64, k: usize, h: f64) -> TsayDetector {
    let model = if phi == 0.0 {
        ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap()
    } else {
        ArmaModel::ar1(phi, 1.0).unwrap()
    };
    let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER).unwrap();
    TsayDetector::new(&DetectorConfig {
        window_size: k,
        critical_value: h,
        eta: eta_weights(&pi, k.max(2)),
        sigma_a: 1.0,
    })
    .unwrap()
}

#[test]
fn stationary_box_coverage_matches_quadrature() {
    // the marginal law of Λ is N(0, AAᵀ); the long-run fraction of steps
    // with ‖Λ‖∞ < h must match the quadrature box probability
    for (phi, k, h) in [(0.5, 2usize, 3.0), (-0.7, 3, 2.8)] {
        let det = detector_for(phi, k, 1e300);
        let model = if phi == 0.0 {
            ArmaModel::new(vec![], vec![], 1.0, 0.0).unwrap()
        } else {
            ArmaModel::ar1(phi, 1.0).unwrap()
        };
        let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER).unwrap();
        let a = build_transfer_matrix(&eta_weights(&pi, k.max(2)), k, 1.0);
        let p_box = box_probability_quadrature(&a, h).unwrap();

        let mut rng = RandomSource::new(808).rng();
        let mut state = det.zero_state();
        let steps = 400_000u64;
        let warmup = 200u64;
        let mut inside = 0u64;
        for t in 0..steps + warmup {
            let e: f64 = rng.sample(StandardNormal);
            det.update(&mut state, e).unwrap();
            if t >= warmup && state.max_norm() < h {
                inside += 1;
            }
        }
        let frac = inside as f64 / steps as f64;
        // dependent draws: allow a few multiples of the iid standard error
        let se = (p_box * (1.0 - p_box) / steps as f64).sqrt();
        assert!(
            (frac - p_box).abs() < 8.0 * se + 5e-4,
            "phi {phi} K {k}: coverage {frac} vs quadrature {p_box}"
        );
    }
}

#[test]
fn tau_estimate_recovers_the_injected_shift_size() {
    // inject a known τ and read back τ̂ at the signal
    let phi = 0.5f64;
    let k = 25;
    let det = detector_for(phi, k, 3.3);
    let model = ArmaModel::ar1(phi, 1.0).unwrap();
    let pi = ar_representation(&model, DEFAULT_PI_TOL, DEFAULT_PI_MAX_ORDER).unwrap();
    let eta = eta_weights(&pi, k);
    let delta = 2.0;
    let tau = delta / (1.0f64 - phi * phi).sqrt();
    let source = RandomSource::new(2121);
    let mut estimates = Vec::new();
    for rep in 0..400u64 {
        let mut rng = source.with_stream(rep).rng();
        let mut state = det.initialize_state(&mut rng).unwrap();
        loop {
            let t = state.time() + 1;
            let mean = if t >= 1 { tau * eta.get((t - 1) as usize) } else { 0.0 };
            let e: f64 = rng.sample::<f64, _>(StandardNormal) + mean;
            if let Some(sig) = det.update(&mut state, e).unwrap() {
                estimates.push(sig.tau_estimate);
                break;
            }
            assert!(state.time() < 20_000, "no signal under a 2σ shift");
        }
    }
    estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = estimates[estimates.len() / 2];
    assert!(
        median > 0.6 * tau && median < 1.6 * tau,
        "median τ̂ {median} vs injected τ {tau}"
    );
    // essentially every signalling window should point the right way
    let positive = estimates.iter().filter(|&&t| t > 0.0).count();
    assert!(positive as f64 > 0.97 * estimates.len() as f64);
}

#[test]
fn reset_from_restores_independent_monitoring() {
    let det = detector_for(0.0, 5, 3.5);
    let mut rng = RandomSource::new(99).rng();
    let mut state = det.zero_state();
    for _ in 0..100 {
        let e: f64 = rng.sample(StandardNormal);
        det.update(&mut state, e).unwrap();
    }
    // jam a fresh state over the old one and replay a fixed tail: the
    // outcome must match a chart that only ever saw the tail
    let mut replay = det.zero_state();
    state.reset_from(det.zero_state());
    let tail: Vec<f64> = (0..50).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for &e in &tail {
        let a = det.update(&mut state, e).unwrap();
        let b = det.update(&mut replay, e).unwrap();
        assert_eq!(a.is_some(), b.is_some());
        assert_eq!(state.lambdas(), replay.lambdas());
    }
}

use proptest::prelude::*;
use ruinlab::inspection::{self, grid_steps_to_horizon, DEFAULT_CAP};
use ruinlab::rng::{self, Lane};
use ruinlab::stats::mean_stderr;
use ruinlab::{Error, JumpLaw};

fn laws() -> Vec<JumpLaw> {
    ["det:0.7", "exp:2.0", "gamma:2.0:0.5", "unif:0.1:0.9", "pareto:1.0:3.0", "pareto:0.5:0.8"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn deterministic_epochs_are_the_grid() {
    let t = inspection::sample_inspection(&JumpLaw::deterministic(0.5).unwrap(), 2.0, DEFAULT_CAP, 1).unwrap();
    assert_eq!(t.partial_sums, vec![0.5, 1.0, 1.5, 2.0]);
    assert!(t.includes_origin);
    assert_eq!(t.evaluation_points().times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    let t = inspection::sample_inspection(&JumpLaw::deterministic(0.1).unwrap(), 7.3, DEFAULT_CAP, 1).unwrap();
    for (k, s) in t.partial_sums.iter().enumerate() {
        assert_eq!(*s, (k + 1) as f64 * 0.1);
    }
    assert_eq!(t.partial_sums.len(), grid_steps_to_horizon(0.1, 7.3, DEFAULT_CAP).unwrap());
}

#[test]
fn moments_examples() {
    assert_eq!(JumpLaw::exponential(2.0).unwrap().moments(), (0.5, 0.25));
    assert_eq!(JumpLaw::deterministic(0.7).unwrap().moments(), (0.7, 0.0));
    let (m, v) = JumpLaw::pareto(1.0, 3.0).unwrap().moments();
    approx::assert_relative_eq!(m, 1.5, max_relative = 1e-15);
    approx::assert_relative_eq!(v, 0.75, max_relative = 1e-15);
    assert!(!JumpLaw::pareto(1.0, 0.8).unwrap().satisfies_condition_a());
    assert!(!JumpLaw::pareto(1.0, 2.0).unwrap().satisfies_condition_a());
    assert!(JumpLaw::gamma(2.0, 0.5).unwrap().satisfies_condition_a());
    assert!(JumpLaw::uniform(0.0, 1.0).is_err());
}

#[test]
fn exponential_count_matches_renewal_rate() {
    let law = JumpLaw::exponential(2.0).unwrap();
    let counts: Vec<f64> = (0..1000)
        .map(|seed| {
            // Points strictly inside the horizon: the renewal count N(50).
            let t = inspection::sample_inspection(&law, 50.0, DEFAULT_CAP, seed).unwrap();
            (t.len() - 1) as f64
        })
        .collect();
    let (m, se) = mean_stderr(&counts);
    assert!((m - 100.0).abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn elementary_renewal_property() {
    for law in laws().into_iter().filter(|l| l.mean().is_finite()) {
        for horizon in [100.0, 1000.0] {
            let ratios: Vec<f64> = (0..400)
                .map(|seed| {
                    let t = inspection::sample_inspection(&law, horizon, DEFAULT_CAP, seed).unwrap();
                    t.len() as f64 * law.mean() / horizon
                })
                .collect();
            let (m, se) = mean_stderr(&ratios);
            // E[N(T)+1]·μ = T + E[overshoot]; the overshoot is at most one jump.
            let overshoot = law.mean() + law.variance() / law.mean();
            let allowance = overshoot / horizon;
            assert!((m - 1.0).abs() <= 4.0 * se + allowance, "{law} T={horizon}: {m} ± {se}");
        }
    }
}

#[test]
fn partial_sums_strictly_increase() {
    for law in laws() {
        for seed in 0..10_000 / 6 {
            let t = inspection::sample_inspection(&law, 5.0, DEFAULT_CAP, seed).unwrap();
            assert!(t.partial_sums.windows(2).all(|w| w[1] > w[0]), "{law} seed {seed}");
            assert!(t.partial_sums[0] > 0.0);
            assert!(*t.partial_sums.last().unwrap() >= 5.0);
        }
    }
}

#[test]
fn cap_is_an_error() {
    let law = JumpLaw::exponential(1.0).unwrap();
    let e = inspection::sample_inspection(&law, 1000.0, 10, 3);
    assert!(matches!(e, Err(Error::CapExceeded { cap: 10, .. })));
}

#[test]
fn chebyshev_envelope() {
    let reps = 1000u64;
    for law in laws().into_iter().filter(JumpLaw::satisfies_condition_a) {
        let (mu, var) = law.moments();
        let eps = 0.05 * mu + 0.01;
        for n in [100usize, 1000, 10_000] {
            let exceed = (0..reps)
                .filter(|&r| {
                    let mut g = rng::stream(21, r, Lane::Jumps);
                    let s: f64 = (0..n).map(|_| law.sample_jump(&mut g)).sum();
                    s > (mu + eps) * n as f64
                })
                .count() as f64;
            let freq = exceed / reps as f64;
            let se = (freq * (1.0 - freq) / reps as f64).sqrt();
            let bound = var / (eps * eps * n as f64);
            assert!(freq <= bound + 4.0 * se, "{law} n={n}: {freq} vs {bound}");
        }
    }
}

proptest! {
    #[test]
    fn law_strings_round_trip(idx in 0usize..6) {
        let law = laws()[idx];
        let back: JumpLaw = law.to_string().parse().unwrap();
        prop_assert_eq!(back, law);
    }

    #[test]
    fn scaling_multiplies_moments(idx in 0usize..5, k in 0.1f64..10.0) {
        let law = laws()[idx];
        let scaled = law.scaled(k).unwrap();
        let (m, v) = law.moments();
        let (sm, sv) = scaled.moments();
        prop_assert!((sm - k * m).abs() <= 1e-12 * k * m);
        prop_assert!((sv - k * k * v).abs() <= 1e-12 * (k * k * v).max(1e-300));
    }

    #[test]
    fn sampling_is_deterministic(idx in 0usize..6, seed: u64, horizon in 0.1f64..20.0) {
        let law = laws()[idx];
        let a = inspection::sample_inspection(&law, horizon, DEFAULT_CAP, seed).unwrap();
        let b = inspection::sample_inspection(&law, horizon, DEFAULT_CAP, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

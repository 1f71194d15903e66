// Oracle literals keep every digit of the reference computation.
#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use ruinlab::asymptotics::{
    asympt_pi, asympt_psi, c_h, log_mills_bounds, log_psi_survival, mills_bounds, prop2_envelopes, psi_survival, Branch,
};
use ruinlab::{AsymptoticInputs, Error, Hurst, RuinModel};

fn model(h: f64, c: f64, u: f64) -> RuinModel {
    RuinModel::new(h, c, u).unwrap()
}

fn with_constants(delta: f64) -> AsymptoticInputs {
    AsymptoticInputs {
        pickands_classical: Some(1.3),
        pickands_discrete: Some(0.7),
        pickands_subordinated: Some(0.4),
        mu: Some(0.8),
        delta,
    }
}

#[test]
fn survival_examples() {
    assert_eq!(psi_survival(0.0), 0.5);
    approx::assert_relative_eq!(psi_survival(2.0), 0.022_750_131_948_179_207_2, max_relative = 1e-13);
    assert_eq!(c_h(1.0, Hurst::new(0.5).unwrap()), 2.0);
    approx::assert_relative_eq!(c_h(4.0, Hurst::new(0.5).unwrap()), 4.0, max_relative = 1e-15);
}

#[test]
fn mills_bounds_on_quasi_random_points() {
    // Weyl sequence with the golden-ratio increment, mapped into (0, 40].
    let step = 0.5 * (5f64.sqrt() - 1.0);
    let mut frac = 0.0f64;
    for _ in 0..10_000 {
        frac = (frac + step).fract();
        let x = 40.0 * (1.0 - frac);
        let (lo, hi) = log_mills_bounds(x);
        let log_psi = log_psi_survival(x);
        let slack = 4.0 * f64::EPSILON * log_psi.abs().max(1.0);
        assert!(log_psi <= hi + slack, "upper bound fails at {x}");
        if x > 1.0 {
            assert!(log_psi >= lo - slack, "lower bound fails at {x}");
        }
        if x < 30.0 {
            let (lo, hi) = mills_bounds(x);
            let v = psi_survival(x);
            assert!(v <= hi * (1.0 + 4.0 * f64::EPSILON));
            assert!(v >= lo * (1.0 - 4.0 * f64::EPSILON));
        }
    }
}

#[test]
fn brownian_branches_are_products() {
    let v = asympt_psi(&model(0.5, 1.0, 2.0), &with_constants(0.25)).unwrap();
    assert_eq!(v.branch, Branch::Brownian);
    approx::assert_relative_eq!(v.value, 0.7 * (-4.0f64).exp(), max_relative = 1e-14);
    let mut inputs = with_constants(0.0);
    inputs.pickands_subordinated = Some(1.0);
    let v = asympt_pi(&model(0.5, 1.0, 1.0), &inputs).unwrap();
    approx::assert_relative_eq!(v.value, 0.135_335_283_236_612_69, max_relative = 1e-14);
}

#[test]
fn missing_constants_are_reported() {
    let none = AsymptoticInputs { delta: 0.25, ..Default::default() };
    assert!(matches!(asympt_psi(&model(0.5, 1.0, 1.0), &none), Err(Error::MissingConstant { .. })));
    assert!(matches!(asympt_pi(&model(0.5, 1.0, 1.0), &none), Err(Error::MissingConstant { .. })));
    assert!(matches!(asympt_pi(&model(0.3, 1.0, 1.0), &none), Err(Error::MissingConstant { .. })));
    assert!(matches!(asympt_psi(&model(0.7, 1.0, 1.0), &none), Err(Error::MissingConstant { .. })));
    let bad = AsymptoticInputs { pickands_subordinated: Some(1.5), ..Default::default() };
    assert!(asympt_pi(&model(0.5, 1.0, 1.0), &bad).is_err());
}

#[test]
fn envelope_examples() {
    let m = model(0.25, 1.0, 16.0);
    let e = prop2_envelopes(&m).unwrap();
    let x = c_h(1.0, Hurst::new(0.25).unwrap()) * 8.0;
    approx::assert_relative_eq!(e.lower, psi_survival(x), max_relative = 1e-12);
    approx::assert_relative_eq!(e.upper_rate, 2.0 * psi_survival(x), max_relative = 1e-12);
    assert!(matches!(prop2_envelopes(&model(0.5, 1.0, 1.0)), Err(Error::WrongBranch { .. })));
}

fn strategy_model(h_range: std::ops::Range<f64>) -> impl Strategy<Value = (f64, f64, f64)> {
    (h_range, 0.2f64..5.0, 0.5f64..200.0)
}

proptest! {
    #[test]
    fn branch_identities_hold((h, c, u) in strategy_model(0.05..0.95), mu in 0.01f64..5.0) {
        let m = model(h, c, u);
        if h < 0.5 {
            let pi = asympt_pi(&m, &AsymptoticInputs { mu: Some(mu), ..Default::default() }).unwrap();
            let psi = asympt_psi(&m, &AsymptoticInputs { delta: mu, ..Default::default() }).unwrap();
            prop_assert_eq!(pi.branch, Branch::ShortRange);
            prop_assert!((pi.log_value - psi.log_value).abs() <= 1e-12 * psi.log_value.abs());
        } else if h > 0.5 {
            let inputs = AsymptoticInputs { pickands_classical: Some(1.7), delta: 0.3, ..Default::default() };
            let pi = asympt_pi(&m, &inputs).unwrap();
            let psi = asympt_psi(&m, &inputs).unwrap();
            prop_assert_eq!(pi.branch, Branch::Continuous);
            prop_assert!((pi.log_value - psi.log_value).abs() <= 1e-12 * psi.log_value.abs());
        }
    }

    #[test]
    fn envelope_ratio_is_u_to_the_h((h, c, u) in strategy_model(0.05..0.5)) {
        let m = model(h, c, u);
        let e = prop2_envelopes(&m).unwrap();
        prop_assert!((e.log_upper_rate - e.log_lower - h * u.ln()).abs() <= 1e-12 * e.log_lower.abs().max(1.0));
    }

    /// Monotone decrease in `u` and `c` once the Ψ argument exceeds 3.
    #[test]
    fn formulas_decrease_in_u_and_c((h, c, u) in strategy_model(0.05..0.95), bump in 1.01f64..2.0) {
        let m = model(h, c, u);
        prop_assume!(m.psi_argument() >= 3.0);
        let inputs = with_constants(if h == 0.5 { 0.25 } else { 0.5 });
        for f in [asympt_psi::<f64>, asympt_pi::<f64>] {
            let base = f(&m, &inputs).unwrap().log_value;
            prop_assert!(f(&model(h, c, u * bump), &inputs).unwrap().log_value < base);
            prop_assert!(f(&model(h, c * bump, u), &inputs).unwrap().log_value < base);
        }
    }

    #[test]
    fn log_values_match_linear(x in 0.0f64..37.0) {
        let lin = psi_survival(x).ln();
        prop_assert!((log_psi_survival(x) - lin).abs() <= 1e-12 * lin.abs().max(1e-3));
    }
}

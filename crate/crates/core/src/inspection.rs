//! Inspection epochs: partial sums of i.i.d. positive jumps.
//!
//! The ruin event only looks at the clock through the set of its jump
//! epochs, so the Lévy clock itself is never simulated; only the jump law.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_paths::{PointSet, TimeGrid};
use crate::rng::{self, Lane};

/// Default cap on the number of inspection epochs per trajectory.
pub const DEFAULT_CAP: usize = 1_000_000;

/// Jump distribution of the inspection clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum JumpLaw {
    Deterministic {
        delta: f64,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Survival `(scale/x)^index` on `x ≥ scale`.
    Pareto {
        scale: f64,
        index: f64,
    },
}

fn positive(name: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
    }
}

impl JumpLaw {
    pub fn deterministic(delta: f64) -> Result<Self> {
        Ok(JumpLaw::Deterministic { delta: positive("delta", delta)? })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(JumpLaw::Exponential { rate: positive("rate", rate)? })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(JumpLaw::Gamma { shape: positive("shape", shape)?, scale: positive("scale", scale)? })
    }

    /// Jumps must be positive, so `a = 0` is rejected.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let a = positive("a", a)?;
        if !(b > a) || !b.is_finite() {
            return Err(Error::invalid("b", format!("need b > a, got a={a}, b={b}")));
        }
        Ok(JumpLaw::Uniform { a, b })
    }

    pub fn pareto(scale: f64, index: f64) -> Result<Self> {
        Ok(JumpLaw::Pareto { scale: positive("scale", scale)?, index: positive("index", index)? })
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            JumpLaw::Deterministic { delta } => Self::deterministic(delta),
            JumpLaw::Exponential { rate } => Self::exponential(rate),
            JumpLaw::Gamma { shape, scale } => Self::gamma(shape, scale),
            JumpLaw::Uniform { a, b } => Self::uniform(a, b),
            JumpLaw::Pareto { scale, index } => Self::pareto(scale, index),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        self.moments().1
    }

    /// `(mean, variance)`, either of which may be `+∞`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            JumpLaw::Deterministic { delta } => (delta, 0.0),
            JumpLaw::Exponential { rate } => (1.0 / rate, 1.0 / (rate * rate)),
            JumpLaw::Gamma { shape, scale } => (shape * scale, shape * scale * scale),
            JumpLaw::Uniform { a, b } => (0.5 * (a + b), (b - a) * (b - a) / 12.0),
            JumpLaw::Pareto { scale, index } => {
                let mean = if index > 1.0 { index * scale / (index - 1.0) } else { f64::INFINITY };
                let var = if index > 2.0 {
                    index * scale * scale / ((index - 1.0) * (index - 1.0) * (index - 2.0))
                } else {
                    f64::INFINITY
                };
                (mean, var)
            }
        }
    }

    /// Finite mean and finite variance.
    pub fn satisfies_condition_a(&self) -> bool {
        let (m, v) = self.moments();
        m.is_finite() && v.is_finite()
    }

    /// Law of `factor · Z`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let k = positive("factor", factor)?;
        match *self {
            JumpLaw::Deterministic { delta } => Self::deterministic(k * delta),
            JumpLaw::Exponential { rate } => Self::exponential(rate / k),
            JumpLaw::Gamma { shape, scale } => Self::gamma(shape, k * scale),
            JumpLaw::Uniform { a, b } => Self::uniform(k * a, k * b),
            JumpLaw::Pareto { scale, index } => Self::pareto(k * scale, index),
        }
    }

    /// One jump. Exponential, uniform and Pareto use inverse transforms of
    /// an open uniform; gamma uses Marsaglia–Tsang.
    pub fn sample_jump<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Deterministic { delta } => delta,
            JumpLaw::Exponential { rate } => -rng::open_uniform(rng).ln() / rate,
            JumpLaw::Gamma { shape, scale } => {
                let g = Gamma::new(shape, scale).expect("validated gamma parameters");
                let mut adapter = RngAdapter(rng);
                g.sample(&mut adapter)
            }
            JumpLaw::Uniform { a, b } => a + (b - a) * rng::open_uniform(rng),
            JumpLaw::Pareto { scale, index } => scale * rng::open_uniform(rng).powf(-1.0 / index),
        }
    }
}

/// Lets `?Sized` generators drive `rand_distr` samplers.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

impl fmt::Display for JumpLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpLaw::Deterministic { delta } => write!(f, "det:{delta:?}"),
            JumpLaw::Exponential { rate } => write!(f, "exp:{rate:?}"),
            JumpLaw::Gamma { shape, scale } => write!(f, "gamma:{shape:?}:{scale:?}"),
            JumpLaw::Uniform { a, b } => write!(f, "unif:{a:?}:{b:?}"),
            JumpLaw::Pareto { scale, index } => write!(f, "pareto:{scale:?}:{index:?}"),
        }
    }
}

impl FromStr for JumpLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let family = parts.next().unwrap_or_default();
        let params: Vec<f64> = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid("law", format!("cannot parse parameter `{p}` in `{s}`")))
            })
            .collect::<Result<_>>()?;
        let arity = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::invalid("law", format!("`{family}` takes {n} parameter(s), got {} in `{s}`", params.len())))
            }
        };
        match family {
            "det" => arity(1).and_then(|_| Self::deterministic(params[0])),
            "exp" => arity(1).and_then(|_| Self::exponential(params[0])),
            "gamma" => arity(2).and_then(|_| Self::gamma(params[0], params[1])),
            "unif" => arity(2).and_then(|_| Self::uniform(params[0], params[1])),
            "pareto" => arity(2).and_then(|_| Self::pareto(params[0], params[1])),
            other => Err(Error::invalid("law", format!("unknown jump law family `{other}`"))),
        }
    }
}

impl TryFrom<String> for JumpLaw {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<JumpLaw> for String {
    fn from(law: JumpLaw) -> String {
        law.to_string()
    }
}

/// Partial sums `S_1 < S_2 < …` of the jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectionTimes {
    pub partial_sums: Vec<f64>,
    /// Whether `t = 0` belongs to the evaluation set.
    pub includes_origin: bool,
    /// Set for deterministic jumps: the sums are exactly `k·δ`, k = 1..=n.
    pub regular_step: Option<f64>,
}

impl InspectionTimes {
    pub fn len(&self) -> usize {
        self.partial_sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial_sums.is_empty()
    }

    /// Evaluation set, prefixed with the origin when `includes_origin`.
    pub fn evaluation_points(&self) -> PointSet<f64> {
        let mut times = Vec::with_capacity(self.partial_sums.len() + 1);
        if self.includes_origin {
            times.push(0.0);
        }
        times.extend_from_slice(&self.partial_sums);
        PointSet::new(times).expect("partial sums are strictly increasing and positive")
    }

    /// The regular grid `{0, δ, …, n·δ}` for deterministic jumps.
    pub fn as_grid(&self) -> Option<TimeGrid<f64>> {
        self.regular_step.and_then(|d| TimeGrid::new(self.partial_sums.len(), d).ok())
    }
}

/// Number of grid steps `n` such that `n·δ` is the first multiple of `δ`
/// reaching `horizon`.
pub fn grid_steps_to_horizon(delta: f64, horizon: f64, cap: usize) -> Result<usize> {
    let mut k = (horizon / delta).floor().max(1.0) as usize;
    while k > 1 && (k - 1) as f64 * delta >= horizon {
        k -= 1;
    }
    while (k as f64) * delta < horizon {
        k += 1;
    }
    if k > cap {
        return Err(Error::CapExceeded { cap, reached: cap as f64 * delta, horizon });
    }
    Ok(k)
}

/// Draws partial sums up to and including the first one `≥ horizon`.
pub fn sample_inspection_with<R: RngCore + ?Sized>(
    law: &JumpLaw,
    horizon: f64,
    cap: usize,
    rng: &mut R,
) -> Result<InspectionTimes> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    if cap == 0 {
        return Err(Error::invalid("cap", "must be at least 1"));
    }
    if let JumpLaw::Deterministic { delta } = *law {
        let n = grid_steps_to_horizon(delta, horizon, cap)?;
        let partial_sums = (1..=n).map(|k| k as f64 * delta).collect();
        return Ok(InspectionTimes { partial_sums, includes_origin: true, regular_step: Some(delta) });
    }
    let mut sums = Vec::new();
    let mut acc = 0.0_f64;
    while acc < horizon {
        if sums.len() == cap {
            return Err(Error::CapExceeded { cap, reached: acc, horizon });
        }
        let next = acc + law.sample_jump(rng);
        // A jump too small to move the sum in floating point adds no new
        // evaluation time.
        if next > acc {
            sums.push(next);
            acc = next;
        }
    }
    Ok(InspectionTimes { partial_sums: sums, includes_origin: true, regular_step: None })
}

pub fn sample_inspection(law: &JumpLaw, horizon: f64, cap: usize, seed: u64) -> Result<InspectionTimes> {
    sample_inspection_with(law, horizon, cap, &mut rng::stream(seed, 0, Lane::Jumps))
}

/// Renewal epochs in `[0, s]`, origin first.
pub(crate) fn renewal_points_within<R: RngCore + ?Sized>(
    law: &JumpLaw,
    s: f64,
    cap: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    out.push(0.0);
    if let JumpLaw::Deterministic { delta } = *law {
        let mut k = 1usize;
        while (k as f64) * delta <= s {
            if k > cap {
                return Err(Error::CapExceeded { cap, reached: (k - 1) as f64 * delta, horizon: s });
            }
            out.push(k as f64 * delta);
            k += 1;
        }
        return Ok(());
    }
    let mut acc = 0.0_f64;
    loop {
        let next = acc + law.sample_jump(rng);
        if next > s {
            return Ok(());
        }
        if next > acc {
            if out.len() > cap {
                return Err(Error::CapExceeded { cap, reached: acc, horizon: s });
            }
            out.push(next);
            acc = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_arithmetic_progression() {
        let law = JumpLaw::deterministic(0.5).unwrap();
        let t = sample_inspection(&law, 2.0, 100, 1).unwrap();
        assert_eq!(t.partial_sums, vec![0.5, 1.0, 1.5, 2.0]);
        assert!(t.includes_origin);
        assert_eq!(t.evaluation_points().times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn deterministic_grid_matches_g_delta() {
        for &(d, hz) in &[(0.1, 1.0), (0.3, 0.9), (0.7, 5.0), (1e-3, 6.0)] {
            let law = JumpLaw::deterministic(d).unwrap();
            let t = sample_inspection(&law, hz, DEFAULT_CAP, 9).unwrap();
            let n = t.len();
            for (k, s) in t.partial_sums.iter().enumerate() {
                assert_eq!(*s, (k + 1) as f64 * d);
            }
            assert!(t.partial_sums[n - 1] >= hz);
            assert!(n == 1 || t.partial_sums[n - 2] < hz);
        }
    }

    #[test]
    fn moments_closed_forms() {
        assert_eq!(JumpLaw::exponential(2.0).unwrap().moments(), (0.5, 0.25));
        assert_eq!(JumpLaw::deterministic(0.7).unwrap().moments(), (0.7, 0.0));
        let (m, v) = JumpLaw::pareto(1.0, 3.0).unwrap().moments();
        assert!((m - 1.5).abs() < 1e-15 && (v - 0.75).abs() < 1e-15);
        let (m, v) = JumpLaw::pareto(1.0, 0.8).unwrap().moments();
        assert!(m.is_infinite() && v.is_infinite());
        assert!(!JumpLaw::pareto(1.0, 0.8).unwrap().satisfies_condition_a());
        assert!(!JumpLaw::pareto(1.0, 1.5).unwrap().satisfies_condition_a());
        assert!(JumpLaw::pareto(1.0, 2.5).unwrap().satisfies_condition_a());
        assert!(JumpLaw::gamma(2.0, 0.5).unwrap().satisfies_condition_a());
    }

    #[test]
    fn construction_rejects_non_positive_support() {
        assert!(JumpLaw::uniform(0.0, 1.0).is_err());
        assert!(JumpLaw::uniform(0.5, 0.5).is_err());
        assert!(JumpLaw::exponential(-1.0).is_err());
        assert!(JumpLaw::deterministic(0.0).is_err());
    }

    #[test]
    fn canonical_strings() {
        for s in ["det:0.5", "exp:2.0", "gamma:2.0:0.5", "unif:0.1:0.9", "pareto:1.0:0.8"] {
            let law: JumpLaw = s.parse().unwrap();
            assert_eq!(law.to_string(), s);
        }
        assert!("weird:1".parse::<JumpLaw>().is_err());
        assert!("exp".parse::<JumpLaw>().is_err());
        assert!("exp:1:2".parse::<JumpLaw>().is_err());
        assert!("unif:0:1".parse::<JumpLaw>().is_err());
    }

    #[test]
    fn cap_exceeded_is_an_error() {
        let law = JumpLaw::exponential(1.0).unwrap();
        assert!(matches!(sample_inspection(&law, 1000.0, 10, 3), Err(Error::CapExceeded { cap: 10, .. })));
        let det = JumpLaw::deterministic(0.1).unwrap();
        assert!(matches!(sample_inspection(&det, 100.0, 10, 3), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn scaling_multiplies_mean() {
        for s in ["det:0.5", "exp:2.0", "gamma:2.0:0.5", "unif:0.1:0.9", "pareto:1.0:3.0"] {
            let law: JumpLaw = s.parse().unwrap();
            let scaled = law.scaled(2.0).unwrap();
            assert!((scaled.mean() - 2.0 * law.mean()).abs() < 1e-14);
            assert!((scaled.variance() - 4.0 * law.variance()).abs() < 1e-14);
        }
    }

    #[test]
    fn renewal_points_within_window() {
        let mut out = Vec::new();
        let law = JumpLaw::deterministic(0.5).unwrap();
        renewal_points_within(&law, 2.0, 100, &mut rng::stream(0, 0, Lane::Jumps), &mut out).unwrap();
        assert_eq!(out, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let law = JumpLaw::exponential(1.0).unwrap();
        renewal_points_within(&law, 5.0, 1000, &mut rng::stream(0, 0, Lane::Jumps), &mut out).unwrap();
        assert_eq!(out[0], 0.0);
        assert!(out.iter().all(|t| *t <= 5.0));
        assert!(out.windows(2).all(|w| w[1] > w[0]));
    }
}

//! Closed-form tail asymptotics.
//!
//! All formulas are evaluated in log space and exponentiated once; the
//! linear value underflows long before the log value loses meaning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_paths::Hurst;
use crate::scalar::Scalar;

/// Beyond this point `ln Ψ` switches from `erfc` to the Mills-ratio
/// continued fraction.
const LOG_PSI_SWITCH: f64 = 5.0;
const MILLS_CF_TERMS: usize = 120;

/// Standard normal density.
pub fn normal_density<T: Scalar>(x: T) -> T {
    (-(x * x) * T::lit(0.5)).exp() / (T::TAU()).sqrt()
}

/// `Ψ(x) = P(N > x)` via the complementary error function.
pub fn psi_survival<T: Scalar>(x: T) -> T {
    T::lit(0.5) * (x / T::SQRT_2()).erfc()
}

/// Mills ratio `Ψ(x)/φ(x)` for `x > 0` by backward evaluation of the
/// continued fraction `1/(x+1/(x+2/(x+3/(x+…))))`.
pub fn mills_ratio<T: Scalar>(x: T) -> T {
    let mut tail = x;
    for k in (1..=MILLS_CF_TERMS).rev() {
        tail = x + T::from_usize(k).expect("term") / tail;
    }
    T::one() / tail
}

/// `ln Ψ(x)`, finite for every finite `x`.
pub fn log_psi_survival<T: Scalar>(x: T) -> T {
    if x < T::lit(LOG_PSI_SWITCH) {
        psi_survival(x).ln()
    } else {
        -(x * x) * T::lit(0.5) - T::TAU().sqrt().ln() + mills_ratio(x).ln()
    }
}

/// `((1 − 1/x²)·φ(x)/x, φ(x)/x)`, the classical Mills bounds on `Ψ(x)` for `x > 0`.
pub fn mills_bounds<T: Scalar>(x: T) -> (T, T) {
    let upper = normal_density(x) / x;
    (upper * (T::one() - T::one() / (x * x)), upper)
}

/// Log of [`mills_bounds`]; the lower entry is `-∞` for `x ≤ 1`.
pub fn log_mills_bounds<T: Scalar>(x: T) -> (T, T) {
    let log_upper = -(x * x) * T::lit(0.5) - T::TAU().sqrt().ln() - x.ln();
    let factor = T::one() - T::one() / (x * x);
    let log_lower = if factor > T::zero() { log_upper + factor.ln() } else { T::neg_infinity() };
    (log_lower, log_upper)
}

/// `C_H = c^H / (H^H (1−H)^{1−H})`.
pub fn c_h<T: Scalar>(c: T, h: Hurst<T>) -> T {
    log_c_h(c, h).exp()
}

fn log_c_h<T: Scalar>(c: T, h: Hurst<T>) -> T {
    let h = h.value();
    let one_m = T::one() - h;
    h * c.ln() - h * h.ln() - one_m * one_m.ln()
}

/// `t₀ = H / (c(1−H))`: ruin, when it happens, happens near `u·t₀`.
pub fn t_star<T: Scalar>(c: T, h: Hurst<T>) -> T {
    h.value() / (c * (T::one() - h.value()))
}

/// The triple `(H, c, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RuinModel<T> {
    pub h: Hurst<T>,
    pub c: T,
    pub u: T,
}

impl<T: Scalar> RuinModel<T> {
    pub fn new(h: T, c: T, u: T) -> Result<Self> {
        let h = Hurst::new(h)?;
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::invalid("c", format!("drift must be positive, got {c}")));
        }
        if !(u > T::zero()) || !u.is_finite() {
            return Err(Error::invalid("u", format!("threshold must be positive, got {u}")));
        }
        Ok(RuinModel { h, c, u })
    }

    pub fn with_u(&self, u: T) -> Result<Self> {
        Self::new(self.h.value(), self.c, u)
    }

    pub fn t_star(&self) -> T {
        t_star(self.c, self.h)
    }

    pub fn c_h(&self) -> T {
        c_h(self.c, self.h)
    }

    /// `C_H · u^{1−H}`, the argument of `Ψ` in every Gaussian branch.
    pub fn psi_argument(&self) -> T {
        self.c_h() * self.u.powf(T::one() - self.h.value())
    }
}

/// Pickands-type constants and jump parameters entering the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AsymptoticInputs<T> {
    /// `ℍ_{2H}`; taken as 1 when `H = 1/2` and not supplied.
    pub pickands_classical: Option<T>,
    /// `ℍ_1^{2c²δ}` for the Brownian discrete branch.
    pub pickands_discrete: Option<T>,
    /// `ℋ_{2c²𝒵}` for the Brownian inspected branch.
    pub pickands_subordinated: Option<T>,
    /// Mean jump `μ`.
    pub mu: Option<T>,
    /// Grid step `δ ≥ 0`.
    pub delta: T,
}

impl<T: Scalar> AsymptoticInputs<T> {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: Option<T>| match v {
            Some(x) if !(x > T::zero()) || !x.is_finite() => {
                Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
            }
            _ => Ok(()),
        };
        check("pickands_classical", self.pickands_classical)?;
        check("pickands_discrete", self.pickands_discrete)?;
        check("pickands_subordinated", self.pickands_subordinated)?;
        check("mu", self.mu)?;
        if let Some(x) = self.pickands_subordinated {
            if x > T::one() {
                return Err(Error::invalid("pickands_subordinated", format!("must not exceed 1, got {x}")));
            }
        }
        if !(self.delta >= T::zero()) || !self.delta.is_finite() {
            return Err(Error::invalid("delta", format!("must be non-negative, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Classical Pickands / continuous-time branch.
    Continuous,
    /// `H = 1/2` with a discrete or inspected clock: constant times `e^{−2cu}`.
    Brownian,
    /// `H < 1/2` with a discrete or inspected clock.
    ShortRange,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Continuous => "continuous",
            Branch::Brownian => "brownian",
            Branch::ShortRange => "short_range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticValue<T> {
    pub value: T,
    pub log_value: T,
    pub branch: Branch,
}

impl<T: Scalar> AsymptoticValue<T> {
    fn from_log(log_value: T, branch: Branch) -> Self {
        AsymptoticValue { value: log_value.exp(), log_value, branch }
    }
}

fn log_continuous<T: Scalar>(model: &RuinModel<T>, pickands: T) -> T {
    let h = model.h.value();
    let half = T::lit(0.5);
    let one_m = T::one() - h;
    let x = model.psi_argument();
    pickands.ln() + (half - half / h) * T::LN_2() + half * T::PI().ln() - half * h.ln() - half * one_m.ln()
        + (T::one() / h - T::one()) * x.ln()
        + log_psi_survival(x)
}

/// `√(2π) H^{H+½} u^H / (step · c^{H+1} (1−H)^{H+½}) · Ψ(C_H u^{1−H})`, in log space.
fn log_short_range<T: Scalar>(model: &RuinModel<T>, step: T) -> T {
    let h = model.h.value();
    let half = T::lit(0.5);
    let one_m = T::one() - h;
    half * T::TAU().ln() + (h + half) * h.ln() + h * model.u.ln()
        - step.ln()
        - (h + T::one()) * model.c.ln()
        - (h + half) * one_m.ln()
        + log_psi_survival(model.psi_argument())
}

fn classical_constant<T: Scalar>(model: &RuinModel<T>, inputs: &AsymptoticInputs<T>) -> Result<T> {
    match inputs.pickands_classical {
        Some(v) => Ok(v),
        None if model.h.is_brownian() => Ok(T::one()),
        None => Err(Error::MissingConstant { branch: "continuous", constant: "pickands_classical" }),
    }
}

/// Tail asymptotics of the ruin probability on the grid `G(δ)`
/// (`δ = 0` is continuous time).
pub fn asympt_psi<T: Scalar>(model: &RuinModel<T>, inputs: &AsymptoticInputs<T>) -> Result<AsymptoticValue<T>> {
    inputs.validate()?;
    let h = model.h.value();
    let half = T::lit(0.5);
    if inputs.delta == T::zero() || h > half {
        let k = classical_constant(model, inputs)?;
        return Ok(AsymptoticValue::from_log(log_continuous(model, k), Branch::Continuous));
    }
    if h == half {
        let k = inputs
            .pickands_discrete
            .ok_or(Error::MissingConstant { branch: "brownian", constant: "pickands_discrete" })?;
        let log = k.ln() - T::lit(2.0) * model.c * model.u;
        return Ok(AsymptoticValue::from_log(log, Branch::Brownian));
    }
    Ok(AsymptoticValue::from_log(log_short_range(model, inputs.delta), Branch::ShortRange))
}

/// Tail asymptotics of the inspected ruin probability.
pub fn asympt_pi<T: Scalar>(model: &RuinModel<T>, inputs: &AsymptoticInputs<T>) -> Result<AsymptoticValue<T>> {
    inputs.validate()?;
    let h = model.h.value();
    let half = T::lit(0.5);
    if h > half {
        let k = classical_constant(model, inputs)?;
        return Ok(AsymptoticValue::from_log(log_continuous(model, k), Branch::Continuous));
    }
    if h == half {
        let k = inputs
            .pickands_subordinated
            .ok_or(Error::MissingConstant { branch: "brownian", constant: "pickands_subordinated" })?;
        let log = k.ln() - T::lit(2.0) * model.c * model.u;
        return Ok(AsymptoticValue::from_log(log, Branch::Brownian));
    }
    let mu = inputs.mu.ok_or(Error::MissingConstant { branch: "short_range", constant: "mu" })?;
    Ok(AsymptoticValue::from_log(log_short_range(model, mu), Branch::ShortRange))
}

/// Envelopes for infinite-mean jumps when `H < 1/2`: the inspected ruin
/// probability is `o(u^H Ψ(C_H u^{1−H}))` and dominates `Ψ(C_H u^{1−H})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Envelopes<T> {
    pub lower: T,
    pub upper_rate: T,
    pub log_lower: T,
    pub log_upper_rate: T,
}

pub fn prop2_envelopes<T: Scalar>(model: &RuinModel<T>) -> Result<Prop2Envelopes<T>> {
    if !(model.h.value() < T::lit(0.5)) {
        return Err(Error::WrongBranch { what: "infinite-mean envelopes", requirement: "H < 1/2" });
    }
    let log_lower = log_psi_survival(model.psi_argument());
    let log_upper_rate = log_lower + model.h.value() * model.u.ln();
    Ok(Prop2Envelopes { lower: log_lower.exp(), upper_rate: log_upper_rate.exp(), log_lower, log_upper_rate })
}

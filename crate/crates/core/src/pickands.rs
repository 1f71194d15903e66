//! Monte Carlo estimators of Pickands-type constants.
//!
//! All three constants are limits of `(1/S)·E[max_k e^{Y_k}]` where `Y` is a
//! Gaussian vector with `E[e^{Y_k}] = 1`:
//!
//! * discrete / classical: `Y_k = √2·B_H(t_k) − t_k^{2H}` on `δℤ ∩ [0, S]`
//!   (or an inner `eta`-grid when `δ = 0`);
//! * subordinated: `Y_k = √2·B(T_k) − T_k` at the renewal epochs
//!   `T_0 = 0 < T_1 < … ≤ S` of a jump law.
//!
//! The subordinated form uses `∫ 1{max W > x}·e^x dx = e^{max W}`, so the
//! defining integral becomes a plain expectation;
//! [`integral_form_check`] keeps the integral as an oracle.
//!
//! `e^{max Y}` is too heavy-tailed for plain averaging: its sample mean over
//! `N` paths behaves like `ln N / S`. [`PickandsMethod::Mixture`] samples
//! instead from the equal mixture of the tilted laws `e^{Y_j}·P`, under
//! which `Y` is shifted by `Cov(Y, Y_j)` for a uniform index `j`, and
//! reweights by `(m + 1) / Σ_j e^{Y_j}`. Each contribution lies in
//! `[1, m + 1]` and its mean is the same `E[max e^Y]`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_paths::{CirculantFbm, CirculantWorkspace, Hurst, TimeGrid};
use crate::inspection::{self, JumpLaw, DEFAULT_CAP};
use crate::rng::{self, Lane};
use crate::stats::{mean_stderr, pairwise_sum};

/// Default truncation horizon `S`.
pub const DEFAULT_TRUNCATION: f64 = 100.0;
/// Largest empirical `e^{x_hi}·P̂(max > x_hi)` accepted by [`integral_form_check`].
pub const TAIL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PickandsMethod {
    /// Plain average of `e^{max Y}`.
    Crude,
    /// Mixture change of measure (bounded contributions).
    #[default]
    Mixture,
}

impl fmt::Display for PickandsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PickandsMethod::Crude => "crude",
            PickandsMethod::Mixture => "mixture",
        })
    }
}

impl FromStr for PickandsMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crude" => Ok(PickandsMethod::Crude),
            "mixture" => Ok(PickandsMethod::Mixture),
            other => Err(Error::invalid("method", format!("expected crude or mixture, got {other:?}"))),
        }
    }
}

/// Constant estimate at a fixed truncation `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PickandsEstimate {
    pub value: f64,
    pub stderr: f64,
    pub truncation_s: f64,
    pub replications: u64,
    /// Inner grid step when `delta = 0`; zero otherwise.
    pub grid_eta: f64,
    pub delta: f64,
    pub method: PickandsMethod,
}

impl PickandsEstimate {
    fn from_contributions(contributions: &[f64], s: f64, grid_eta: f64, delta: f64, method: PickandsMethod) -> Self {
        let (mean, se) = mean_stderr(contributions);
        PickandsEstimate {
            value: mean / s,
            stderr: se / s,
            truncation_s: s,
            replications: contributions.len() as u64,
            grid_eta,
            delta,
            method,
        }
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
    }
}

fn check_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        Err(Error::invalid("reps", "need at least one replication"))
    } else {
        Ok(())
    }
}

/// `ln Σ e^{y}` without overflow.
fn log_sum_exp(ys: &[f64]) -> f64 {
    let top = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail: Vec<f64> = ys.iter().map(|y| (y - top).exp()).collect();
    top + pairwise_sum(&tail).ln()
}

/// Uniform index in `0..len`.
fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> usize {
    ((rng::open_uniform(rng) * len as f64) as usize).min(len - 1)
}

/// Turns the exponents `Y` into one replication's contribution. `shift(i, j)`
/// returns `Cov(Y_i, Y_j)`.
fn contribution<R, F>(method: PickandsMethod, ys: &mut [f64], rng: &mut R, shift: F) -> f64
where
    R: RngCore + ?Sized,
    F: Fn(usize, usize) -> f64,
{
    match method {
        PickandsMethod::Crude => ys.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp(),
        PickandsMethod::Mixture => {
            let j = uniform_index(rng, ys.len());
            for (i, y) in ys.iter_mut().enumerate() {
                *y += shift(i, j);
            }
            let top = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ys.len() as f64 * (top - log_sum_exp(ys)).exp()
        }
    }
}

/// Evaluation grid of the classical/discrete constant.
/// Returns `(steps, step, grid_eta)`.
fn classical_grid(delta: f64, s: f64, eta: f64) -> Result<(usize, f64, f64)> {
    check_positive("s", s)?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta", format!("must be non-negative, got {delta}")));
    }
    let step = if delta > 0.0 {
        delta
    } else {
        check_positive("eta", eta)?;
        eta
    };
    let n = (s / step + 1e-9).floor() as usize;
    Ok((n, step, if delta > 0.0 { 0.0 } else { eta }))
}

/// Per-replication contributions whose mean over `S` estimates `ℍ_{2H}^δ`.
pub fn classical_contributions(
    h: Hurst<f64>,
    delta: f64,
    s: f64,
    reps: u64,
    eta: f64,
    seed: u64,
    method: PickandsMethod,
) -> Result<Vec<f64>> {
    check_reps(reps)?;
    let (n, step, _) = classical_grid(delta, s, eta)?;
    if n == 0 {
        // Only the origin, where e^{Y_0} = 1.
        return Ok(vec![1.0; reps as usize]);
    }
    let grid = TimeGrid::new(n, step)?;
    let sampler = CirculantFbm::new(grid, h)?;
    // variance[k] = (k·step)^{2H}; Cov(Y_i, Y_j) = v_i + v_j − v_{|i−j|}.
    let variance: Vec<f64> = (0..=grid.steps()).map(|k| grid.time(k).powf(2.0 * h.value())).collect();
    let contributions = (0..reps)
        .into_par_iter()
        .map_init(
            || (CirculantWorkspace::default(), Vec::new()),
            |(ws, path), rep| {
                let mut g = rng::stream(seed, rep, Lane::Gaussian);
                sampler.sample_into(&mut g, ws, path);
                for (k, b) in path.iter_mut().enumerate() {
                    *b = std::f64::consts::SQRT_2 * *b - variance[k];
                }
                let mut mix = rng::stream(seed, rep, Lane::Mixture);
                contribution(method, path, &mut mix, |i, j| variance[i] + variance[j] - variance[i.abs_diff(j)])
            },
        )
        .collect();
    Ok(contributions)
}

/// `ℍ_{2H}^δ` at truncation `s`, with `Mixture` sampling. For `delta = 0`
/// the supremum runs over the `eta`-grid, which biases the classical
/// constant low by roughly `O(eta^H)`.
pub fn estimate_classical(
    h: Hurst<f64>,
    delta: f64,
    s: f64,
    reps: u64,
    eta: f64,
    seed: u64,
) -> Result<PickandsEstimate> {
    estimate_classical_with(h, delta, s, reps, eta, seed, PickandsMethod::Mixture)
}

pub fn estimate_classical_with(
    h: Hurst<f64>,
    delta: f64,
    s: f64,
    reps: u64,
    eta: f64,
    seed: u64,
    method: PickandsMethod,
) -> Result<PickandsEstimate> {
    let (_, _, grid_eta) = classical_grid(delta, s, eta)?;
    let contributions = classical_contributions(h, delta, s, reps, eta, seed, method)?;
    Ok(PickandsEstimate::from_contributions(&contributions, s, grid_eta, delta, method))
}

/// Estimates at `(S, eta)`, `(S/2, eta)` and, for `delta = 0`, `(S, eta/2)`.
/// No extrapolation is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub at_s: PickandsEstimate,
    pub at_half_s: PickandsEstimate,
    pub at_half_eta: Option<PickandsEstimate>,
}

pub fn classical_convergence(
    h: Hurst<f64>,
    delta: f64,
    s: f64,
    reps: u64,
    eta: f64,
    seed: u64,
) -> Result<ConvergenceReport> {
    let at_s = estimate_classical(h, delta, s, reps, eta, seed)?;
    let at_half_s = estimate_classical(h, delta, s / 2.0, reps, eta, rng::derive_seed(seed, 1))?;
    let at_half_eta = if delta == 0.0 {
        Some(estimate_classical(h, delta, s, reps, eta / 2.0, rng::derive_seed(seed, 2))?)
    } else {
        None
    };
    Ok(ConvergenceReport { at_s, at_half_s, at_half_eta })
}

/// Crude statistics for several grids and truncations computed on one path
/// per replication, so they are pathwise ordered: coarser grids and shorter
/// truncations never produce a larger maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCrude {
    /// Grid steps; `0` denotes the inner `eta`-grid.
    pub deltas: Vec<f64>,
    pub truncations: Vec<f64>,
    pub eta: f64,
    /// `max Y` per replication, stored as `[rep][delta][truncation]`.
    log_maxima: Vec<f64>,
    reps: u64,
}

impl NestedCrude {
    pub fn replications(&self) -> u64 {
        self.reps
    }

    /// `max Y` of replication `rep` on grid `deltas[d]` over `[0, truncations[s]]`.
    pub fn log_max(&self, rep: usize, d: usize, s: usize) -> f64 {
        let (nd, ns) = (self.deltas.len(), self.truncations.len());
        self.log_maxima[(rep * nd + d) * ns + s]
    }

    pub fn estimate(&self, d: usize, s: usize) -> PickandsEstimate {
        let contributions: Vec<f64> = (0..self.reps as usize).map(|r| self.log_max(r, d, s).exp()).collect();
        let delta = self.deltas[d];
        let grid_eta = if delta == 0.0 { self.eta } else { 0.0 };
        PickandsEstimate::from_contributions(
            &contributions,
            self.truncations[s],
            grid_eta,
            delta,
            PickandsMethod::Crude,
        )
    }
}

/// Samples each path once on the `eta`-grid up to `max(truncations)` and
/// evaluates every `(delta, truncation)` pair on it. Each positive `delta`
/// must be an integer multiple of `eta`.
pub fn nested_crude(
    h: Hurst<f64>,
    deltas: &[f64],
    truncations: &[f64],
    reps: u64,
    eta: f64,
    seed: u64,
) -> Result<NestedCrude> {
    check_reps(reps)?;
    check_positive("eta", eta)?;
    if deltas.is_empty() || truncations.is_empty() {
        return Err(Error::invalid("deltas", "need at least one grid and one truncation"));
    }
    let mut strides = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if d == 0.0 {
            strides.push(1usize);
            continue;
        }
        check_positive("delta", d)?;
        let ratio = d / eta;
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
            return Err(Error::invalid("delta", format!("{d} is not a multiple of eta = {eta}")));
        }
        strides.push(stride as usize);
    }
    let mut last_index = Vec::with_capacity(truncations.len());
    for &s in truncations {
        check_positive("s", s)?;
        last_index.push((s / eta + 1e-9).floor() as usize);
    }
    let n = *last_index.iter().max().expect("non-empty");
    let grid = TimeGrid::new(n, eta)?;
    let sampler = CirculantFbm::new(grid, h)?;
    let two_h = 2.0 * h.value();
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map_init(
            || (CirculantWorkspace::default(), Vec::new()),
            |(ws, path), rep| {
                let mut g = rng::stream(seed, rep, Lane::Gaussian);
                sampler.sample_into(&mut g, ws, path);
                let mut row = Vec::with_capacity(strides.len() * last_index.len());
                for &stride in &strides {
                    for &last in &last_index {
                        let top = (0..=last)
                            .step_by(stride)
                            .map(|k| std::f64::consts::SQRT_2 * path[k] - grid.time(k).powf(two_h))
                            .fold(f64::NEG_INFINITY, f64::max);
                        row.push(top);
                    }
                }
                row
            },
        )
        .collect();
    Ok(NestedCrude {
        deltas: deltas.to_vec(),
        truncations: truncations.to_vec(),
        eta,
        log_maxima: rows.into_iter().flatten().collect(),
        reps,
    })
}

/// Fills `ys` with `√2·B(T_k) − T_k` at the renewal epochs `T_k ≤ s`.
fn subordinated_exponents<R: RngCore + ?Sized>(
    law: &JumpLaw,
    s: f64,
    cap: usize,
    jumps: &mut R,
    gauss: &mut R,
    epochs: &mut Vec<f64>,
    ys: &mut Vec<f64>,
) -> Result<()> {
    inspection::renewal_points_within(law, s, cap, jumps, epochs)?;
    ys.clear();
    let mut b = 0.0;
    let mut prev = 0.0;
    for &t in epochs.iter() {
        if t > prev {
            b += (t - prev).sqrt() * rng::standard_normal(gauss);
            prev = t;
        }
        ys.push(std::f64::consts::SQRT_2 * b - t);
    }
    Ok(())
}

/// Per-replication contributions whose mean over `S` estimates `ℋ_law`.
pub fn subordinated_contributions(
    law: &JumpLaw,
    s: f64,
    reps: u64,
    seed: u64,
    method: PickandsMethod,
    cap: usize,
) -> Result<Vec<f64>> {
    check_reps(reps)?;
    check_positive("s", s)?;
    let law = law.validate()?;
    (0..reps)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(epochs, ys), rep| {
                let mut jumps = rng::stream(seed, rep, Lane::Jumps);
                let mut gauss = rng::stream(seed, rep, Lane::Gaussian);
                subordinated_exponents(&law, s, cap, &mut jumps, &mut gauss, epochs, ys)?;
                let mut mix = rng::stream(seed, rep, Lane::Mixture);
                let epochs: &[f64] = epochs;
                Ok(contribution(method, ys, &mut mix, |i, j| 2.0 * epochs[i].min(epochs[j])))
            },
        )
        .collect()
}

/// `ℋ_law` at truncation `s`, with `Mixture` sampling.
pub fn estimate_subordinated(law: &JumpLaw, s: f64, reps: u64, seed: u64) -> Result<PickandsEstimate> {
    estimate_subordinated_with(law, s, reps, seed, PickandsMethod::Mixture, DEFAULT_CAP)
}

pub fn estimate_subordinated_with(
    law: &JumpLaw,
    s: f64,
    reps: u64,
    seed: u64,
    method: PickandsMethod,
    cap: usize,
) -> Result<PickandsEstimate> {
    let contributions = subordinated_contributions(law, s, reps, seed, method, cap)?;
    Ok(PickandsEstimate::from_contributions(&contributions, s, 0.0, 0.0, method))
}

/// The law of `2c²·Z`, whose constant enters the Brownian inspected-ruin
/// asymptotics for drift `c`.
pub fn drift_scaled_law(law: &JumpLaw, c: f64) -> Result<JumpLaw> {
    check_positive("c", c)?;
    law.scaled(2.0 * c * c)
}

/// Both sides of the `e^{max}` reduction on shared paths.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralForm {
    /// `(1/S)·∫ P̂(max W > x)·e^x dx`: trapezoid over the grid plus the exact
    /// left tail `e^{x_0}` (where `P̂ = 1`).
    pub direct: f64,
    /// `(1/S)·mean(e^{max W})` (crude).
    pub reduced: f64,
    pub reduced_stderr: f64,
    /// `P̂(max W > x)` at each grid point.
    pub survival: Vec<f64>,
}

/// Integral form of the subordinated constant against its reduction. The
/// grid must be strictly increasing with `x_0 ≤ 0`.
pub fn integral_form_check(law: &JumpLaw, s: f64, reps: u64, x_grid: &[f64], seed: u64) -> Result<IntegralForm> {
    check_reps(reps)?;
    check_positive("s", s)?;
    if x_grid.len() < 2 || x_grid.windows(2).any(|w| !(w[1] > w[0])) || !x_grid.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("x_grid", "need at least two strictly increasing finite points"));
    }
    if x_grid[0] > 0.0 {
        return Err(Error::invalid("x_grid", format!("must start at or below 0, got {}", x_grid[0])));
    }
    let law = law.validate()?;
    let maxima: Vec<f64> = (0..reps)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(epochs, ys), rep| {
                let mut jumps = rng::stream(seed, rep, Lane::Jumps);
                let mut gauss = rng::stream(seed, rep, Lane::Gaussian);
                subordinated_exponents(&law, s, DEFAULT_CAP, &mut jumps, &mut gauss, epochs, ys)?;
                Ok(ys.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            },
        )
        .collect::<Result<_>>()?;

    let mut sorted = maxima.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let survival: Vec<f64> =
        x_grid.iter().map(|&x| (sorted.len() - sorted.partition_point(|&m| m <= x)) as f64 / n).collect();
    let x_hi = *x_grid.last().expect("non-empty");
    let tail_mass = x_hi.exp() * survival.last().copied().unwrap_or(0.0);
    if tail_mass > TAIL_TOLERANCE {
        return Err(Error::GridTooShort { x_hi, tail_mass });
    }

    let pieces: Vec<f64> = x_grid
        .windows(2)
        .zip(survival.windows(2))
        .map(|(x, p)| 0.5 * (x[1] - x[0]) * (p[0] * x[0].exp() + p[1] * x[1].exp()))
        .collect();
    let direct = (x_grid[0].exp() + pairwise_sum(&pieces)) / s;
    let exps: Vec<f64> = maxima.iter().map(|m| m.exp()).collect();
    let (mean, se) = mean_stderr(&exps);
    Ok(IntegralForm { direct, reduced: mean / s, reduced_stderr: se / s, survival })
}

/// Sample mean and standard error of `e^{B(K) − K/2}` for `K ~ law`; the
/// exact mean is 1.
pub fn martingale_check(law: &JumpLaw, reps: u64, seed: u64) -> Result<(f64, f64)> {
    check_reps(reps)?;
    let law = law.validate()?;
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let k = law.sample_jump(&mut rng::stream(seed, rep, Lane::Jumps));
            let b = k.sqrt() * rng::standard_normal(&mut rng::stream(seed, rep, Lane::Gaussian));
            (b - 0.5 * k).exp()
        })
        .collect();
    Ok(mean_stderr(&values))
}

//! Crude Monte Carlo for the inspected, discrete and continuous-proxy ruin
//! probabilities.
//!
//! Every estimator truncates time at `T(u) = horizon_factor · u · t₀` and
//! evaluates `max (B_H(t) − c·t) > u` over its evaluation set, origin
//! included. Replication `i` draws its Gaussian path from lane
//! [`Lane::Gaussian`] and its inspection epochs from lane [`Lane::Jumps`] of
//! stream `i`, so coupled estimators share paths and results do not depend
//! on the number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{log_psi_survival, psi_survival, RuinModel};
use crate::error::{Error, Result};
use crate::gaussian_paths::{fbm_cov, CirculantFbm, CirculantWorkspace, DenseFbm, Hurst, TimeGrid, N_MAX};
use crate::inspection::{self, JumpLaw, DEFAULT_CAP};
use crate::rng::{self, Lane};
use crate::stats::{mean_stderr, pairwise_sum, wilson95};

pub const DEFAULT_HORIZON_FACTOR: f64 = 6.0;
/// A replication whose running maximum sits in this final fraction of the
/// horizon counts as "late".
pub const LATE_FRACTION: f64 = 0.1;
/// More than this share of late maxima raises `horizon_too_small`.
pub const LATE_ALARM: f64 = 1e-3;
const EMBEDDING_RETRIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: u64,
    pub horizon_factor: f64,
    pub seed: u64,
    /// Inspection-epoch cap per trajectory.
    pub cap: usize,
    /// Point cap of the dense sampler.
    pub n_max: usize,
}

impl McConfig {
    pub fn new(reps: u64, seed: u64) -> Self {
        McConfig { reps, horizon_factor: DEFAULT_HORIZON_FACTOR, seed, cap: DEFAULT_CAP, n_max: N_MAX }
    }

    pub fn horizon_factor(mut self, factor: f64) -> Self {
        self.horizon_factor = factor;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps", "need at least one replication"));
        }
        if !(self.horizon_factor >= 1.0) || !self.horizon_factor.is_finite() {
            return Err(Error::invalid("horizon_factor", format!("must be >= 1, got {}", self.horizon_factor)));
        }
        Ok(())
    }
}

/// Crude Monte Carlo probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub replications: u64,
    pub hits: u64,
    /// 95% Wilson score interval.
    pub ci95: (f64, f64),
    pub horizon: f64,
    pub seed: u64,
    /// Share of replications whose running maximum fell in the last 10% of the horizon.
    pub late_maximum_share: f64,
    pub horizon_too_small: bool,
    /// Grid proxy for a continuous-time probability (biased low).
    pub proxy: bool,
}

impl MCEstimate {
    fn from_outcomes(outcomes: &[RepOutcome], horizon: f64, seed: u64, proxy: bool) -> Self {
        let n = outcomes.len() as u64;
        let hits = outcomes.iter().filter(|o| o.ruined).count() as u64;
        let late = outcomes.iter().filter(|o| o.late).count() as f64 / n as f64;
        let p = hits as f64 / n as f64;
        MCEstimate {
            p_hat: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            replications: n,
            hits,
            ci95: wilson95(hits, n),
            horizon,
            seed,
            late_maximum_share: late,
            horizon_too_small: late > LATE_ALARM,
            proxy,
        }
    }

    /// `stderr / p_hat` (infinite when there are no hits).
    pub fn relative_stderr(&self) -> f64 {
        if self.hits == 0 {
            f64::INFINITY
        } else {
            self.stderr / self.p_hat
        }
    }
}

/// Estimate together with the per-replication ruin indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinRun {
    pub estimate: MCEstimate,
    pub indicators: Vec<bool>,
}

impl RuinRun {
    fn new(outcomes: Vec<RepOutcome>, horizon: f64, seed: u64, proxy: bool) -> Self {
        let estimate = MCEstimate::from_outcomes(&outcomes, horizon, seed, proxy);
        RuinRun { estimate, indicators: outcomes.into_iter().map(|o| o.ruined).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RepOutcome {
    ruined: bool,
    late: bool,
}

/// Scans `value_k − c·t_k` for an exceedance of `u` and for a late maximum.
fn scan<I>(pairs: I, c: f64, u: f64, horizon: f64) -> RepOutcome
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut best = f64::NEG_INFINITY;
    let mut best_t = 0.0;
    for (t, b) in pairs {
        let v = b - c * t;
        if v > best {
            best = v;
            best_t = t;
        }
    }
    RepOutcome { ruined: best > u, late: best_t > (1.0 - LATE_FRACTION) * horizon }
}

/// `T(u) = horizon_factor · u · t₀`.
pub fn horizon(model: &RuinModel<f64>, horizon_factor: f64) -> f64 {
    horizon_factor * model.u * model.t_star()
}

fn circulant_with_retry(grid: TimeGrid<f64>, h: Hurst<f64>) -> Result<CirculantFbm<f64>> {
    let mut size = 2 * grid.steps().next_power_of_two();
    let mut attempt = CirculantFbm::with_embedding(grid, h, size);
    for _ in 0..EMBEDDING_RETRIES {
        if !matches!(attempt, Err(Error::EmbeddingNotPsd { .. })) {
            break;
        }
        size *= 2;
        attempt = CirculantFbm::with_embedding(grid, h, size);
    }
    attempt
}

fn run_on_grid(model: &RuinModel<f64>, delta: f64, cfg: &McConfig, proxy: bool) -> Result<RuinRun> {
    cfg.validate()?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta", format!("grid step must be positive, got {delta}")));
    }
    let t_max = horizon(model, cfg.horizon_factor);
    let n = inspection::grid_steps_to_horizon(delta, t_max, cfg.cap)?;
    let grid = TimeGrid::new(n, delta)?;
    let sampler = circulant_with_retry(grid, model.h)?;
    let (c, u) = (model.c, model.u);
    let outcomes: Vec<RepOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map_init(
            || (CirculantWorkspace::default(), Vec::new()),
            |(ws, path), rep| {
                let mut g = rng::stream(cfg.seed, rep, Lane::Gaussian);
                sampler.sample_into(&mut g, ws, path);
                scan(path.iter().enumerate().map(|(k, b)| (grid.time(k), *b)), c, u, t_max)
            },
        )
        .collect();
    Ok(RuinRun::new(outcomes, t_max, cfg.seed, proxy))
}

/// Inspected ruin probability with full per-replication detail.
pub fn simulate_pi(model: &RuinModel<f64>, law: &JumpLaw, cfg: &McConfig) -> Result<RuinRun> {
    let law = law.validate()?;
    if let JumpLaw::Deterministic { delta } = law {
        // Constant jumps inspect exactly the grid G(δ).
        return run_on_grid(model, delta, cfg, false);
    }
    cfg.validate()?;
    let t_max = horizon(model, cfg.horizon_factor);
    let (c, u, h) = (model.c, model.u, model.h);
    let outcomes = (0..cfg.reps)
        .into_par_iter()
        .map_init(Vec::new, |path, rep| {
            let mut jumps = rng::stream(cfg.seed, rep, Lane::Jumps);
            let epochs = inspection::sample_inspection_with(&law, t_max, cfg.cap, &mut jumps)?;
            let points = epochs.evaluation_points();
            let sampler = DenseFbm::with_cap(&points, h, cfg.n_max)?;
            let mut g = rng::stream(cfg.seed, rep, Lane::Gaussian);
            sampler.sample_into(&mut g, path);
            Ok(scan(points.times().iter().copied().zip(path.iter().copied()), c, u, t_max))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RuinRun::new(outcomes, t_max, cfg.seed, false))
}

pub fn estimate_pi(model: &RuinModel<f64>, law: &JumpLaw, cfg: &McConfig) -> Result<MCEstimate> {
    simulate_pi(model, law, cfg).map(|r| r.estimate)
}

/// Ruin probability on `G(δ) ∩ [0, T(u)]`.
pub fn simulate_psi_discrete(model: &RuinModel<f64>, delta: f64, cfg: &McConfig) -> Result<RuinRun> {
    run_on_grid(model, delta, cfg, false)
}

pub fn estimate_psi_discrete(model: &RuinModel<f64>, delta: f64, cfg: &McConfig) -> Result<MCEstimate> {
    simulate_psi_discrete(model, delta, cfg).map(|r| r.estimate)
}

/// Grid proxy of the continuous-time ruin probability at fineness `eta`;
/// biased low by the discretization gap.
pub fn simulate_psi_continuous(model: &RuinModel<f64>, eta: f64, cfg: &McConfig) -> Result<RuinRun> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", format!("proxy fineness must be positive, got {eta}")));
    }
    run_on_grid(model, eta, cfg, true)
}

pub fn estimate_psi_continuous(model: &RuinModel<f64>, eta: f64, cfg: &McConfig) -> Result<MCEstimate> {
    simulate_psi_continuous(model, eta, cfg).map(|r| r.estimate)
}

/// Standard normal conditioned on exceeding `z0`.
fn normal_tail<R: rand::RngCore + ?Sized>(z0: f64, rng: &mut R) -> f64 {
    if z0 < 5.0 {
        let p = psi_survival(z0);
        return -rng::inverse_normal_cdf(p * rng::open_uniform(rng));
    }
    // Exponential proposal with the optimal rate; exact rejection.
    let rate = 0.5 * (z0 + (z0 * z0 + 4.0).sqrt());
    loop {
        let z = z0 - rng::open_uniform(rng).ln() / rate;
        if rng::open_uniform(rng).ln() <= -0.5 * (z - rate) * (z - rate) {
            return z;
        }
    }
}

/// Inspected ruin probability by importance sampling over the union of the
/// exceedance events `A_k = {B_H(t_k) − c·t_k > u}`.
///
/// Given the inspection epochs, an index `j` is drawn with probability
/// `P(A_j)/Σ P(A_k)`, `B_H(t_j)` is drawn conditioned on `A_j`, and the rest
/// of the vector from its Gaussian conditional law. The contribution
/// `Σ_k P(A_k) / #{k : A_k holds}` is unbiased for the conditional ruin
/// probability and never exceeds the union bound, so the relative error
/// stays bounded as `u` grows. `hits` counts replications with a non-zero
/// contribution, `ci95` is the normal interval and `late_maximum_share` is
/// the share of the ruin probability whose maximum falls late.
pub fn estimate_pi_mixture(model: &RuinModel<f64>, law: &JumpLaw, cfg: &McConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    let law = law.validate()?;
    let t_max = horizon(model, cfg.horizon_factor);
    let (c, u, h) = (model.c, model.u, model.h);
    let hv = h.value();
    let outcomes = (0..cfg.reps)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(path, log_p), rep| {
                let mut jumps = rng::stream(cfg.seed, rep, Lane::Jumps);
                let epochs = inspection::sample_inspection_with(&law, t_max, cfg.cap, &mut jumps)?;
                let points = epochs.evaluation_points();
                let times = points.times();
                log_p.clear();
                log_p.extend(times.iter().map(|&t| {
                    if t > 0.0 {
                        log_psi_survival((u + c * t) / t.powf(hv))
                    } else {
                        f64::NEG_INFINITY
                    }
                }));
                let top = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return Ok((0.0, false));
                }
                let weights: Vec<f64> = log_p.iter().map(|l| (l - top).exp()).collect();
                let total = pairwise_sum(&weights);

                let mut mix = rng::stream(cfg.seed, rep, Lane::Mixture);
                let mut target = rng::open_uniform(&mut mix) * total;
                let mut j = weights.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    if target < *w {
                        j = k;
                        break;
                    }
                    target -= w;
                }
                while weights[j] == 0.0 {
                    j -= 1;
                }

                let sampler = DenseFbm::with_cap(&points, h, cfg.n_max)?;
                let mut g = rng::stream(cfg.seed, rep, Lane::Gaussian);
                sampler.sample_into(&mut g, path);
                let (tj, sd_j) = (times[j], times[j].powf(hv));
                let xj = sd_j * normal_tail((u + c * tj) / sd_j, &mut mix);
                let lift = (xj - path[j]) / (sd_j * sd_j);
                let mut exceed = 0usize;
                let mut best = (f64::NEG_INFINITY, 0.0);
                for (k, &t) in times.iter().enumerate() {
                    let x = if k == j { xj } else { path[k] + fbm_cov(t, tj, h) * lift };
                    let v = x - c * t;
                    if v > u || k == j {
                        exceed += 1;
                    }
                    if v > best.0 {
                        best = (v, t);
                    }
                }
                let late = best.1 > (1.0 - LATE_FRACTION) * t_max;
                Ok(((top + total.ln()).exp() / exceed as f64, late))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (p, se) = mean_stderr(&values);
    let n = outcomes.len() as u64;
    let late_mass: Vec<f64> = outcomes.iter().map(|o| if o.1 { o.0 } else { 0.0 }).collect();
    let late = if p > 0.0 { pairwise_sum(&late_mass) / n as f64 / p } else { 0.0 };
    Ok(MCEstimate {
        p_hat: p,
        stderr: se,
        replications: n,
        hits: outcomes.iter().filter(|o| o.0 > 0.0).count() as u64,
        ci95: ((p - 1.959_963_984_540_054 * se).max(0.0), (p + 1.959_963_984_540_054 * se).min(1.0)),
        horizon: t_max,
        seed: cfg.seed,
        late_maximum_share: late,
        horizon_too_small: late > LATE_ALARM,
        proxy: false,
    })
}

/// Inspected and continuous-proxy estimates on one shared path per
/// replication: inspection epochs are rounded to the nearest point of the
/// `eta`-grid (epochs rounding past the grid end are dropped), so the
/// inspected indicator never exceeds the proxy indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub pi: RuinRun,
    pub psi: RuinRun,
}

pub fn simulate_coupled(model: &RuinModel<f64>, law: &JumpLaw, eta: f64, cfg: &McConfig) -> Result<CoupledRun> {
    cfg.validate()?;
    let law = law.validate()?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", format!("proxy fineness must be positive, got {eta}")));
    }
    let t_max = horizon(model, cfg.horizon_factor);
    let n = inspection::grid_steps_to_horizon(eta, t_max, cfg.cap)?;
    let grid = TimeGrid::new(n, eta)?;
    let sampler = circulant_with_retry(grid, model.h)?;
    let (c, u) = (model.c, model.u);
    let pairs = (0..cfg.reps)
        .into_par_iter()
        .map_init(
            || (CirculantWorkspace::default(), Vec::new()),
            |(ws, path), rep| {
                let mut g = rng::stream(cfg.seed, rep, Lane::Gaussian);
                sampler.sample_into(&mut g, ws, path);
                let psi = scan(path.iter().enumerate().map(|(k, b)| (grid.time(k), *b)), c, u, t_max);
                let mut jumps = rng::stream(cfg.seed, rep, Lane::Jumps);
                let epochs = inspection::sample_inspection_with(&law, t_max, cfg.cap, &mut jumps)?;
                let mut idx: Vec<usize> = std::iter::once(0)
                    .chain(epochs.partial_sums.iter().map(|s| (s / eta).round() as usize))
                    .filter(|&k| k <= n)
                    .collect();
                idx.dedup();
                let pi = scan(idx.iter().map(|&k| (grid.time(k), path[k])), c, u, t_max);
                Ok((pi, psi))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let (pi, psi): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(CoupledRun { pi: RuinRun::new(pi, t_max, cfg.seed, false), psi: RuinRun::new(psi, t_max, cfg.seed, true) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(h: f64, c: f64, u: f64) -> RuinModel<f64> {
        RuinModel::new(h, c, u).unwrap()
    }

    #[test]
    fn single_origin_grid_never_ruins() {
        // δ beyond the horizon: the grid is {0, δ}; with u huge nothing crosses.
        let m = model(0.5, 1.0, 1.0);
        let cfg = McConfig::new(1000, 1).horizon_factor(1.0);
        let est = estimate_psi_discrete(&m, 50.0, &cfg).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.ci95.0, 0.0);
    }

    #[test]
    fn deterministic_law_is_bitwise_discrete() {
        let m = model(0.3, 1.2, 1.0);
        let cfg = McConfig::new(500, 99);
        let a = simulate_pi(&m, &JumpLaw::deterministic(0.25).unwrap(), &cfg).unwrap();
        let b = simulate_psi_discrete(&m, 0.25, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn higher_barrier_never_adds_ruin() {
        let law = JumpLaw::exponential(1.0).unwrap();
        let cfg = McConfig::new(2000, 5);
        // Same horizon for both barriers: horizon_factor scaled to keep T fixed.
        let lo = simulate_pi(&model(0.5, 1.0, 1.0), &law, &cfg.horizon_factor(9.0)).unwrap();
        let hi = simulate_pi(&model(0.5, 1.0, 1.5), &law, &cfg.horizon_factor(6.0)).unwrap();
        assert_eq!(lo.estimate.horizon, hi.estimate.horizon);
        assert!(lo.indicators.iter().zip(&hi.indicators).all(|(l, h)| *h <= *l));
    }

    #[test]
    fn rejects_bad_config() {
        let m = model(0.5, 1.0, 1.0);
        assert!(estimate_psi_discrete(&m, 0.1, &McConfig::new(0, 1)).is_err());
        assert!(estimate_psi_discrete(&m, 0.1, &McConfig::new(10, 1).horizon_factor(0.5)).is_err());
        assert!(estimate_psi_discrete(&m, 0.0, &McConfig::new(10, 1)).is_err());
        assert!(estimate_psi_continuous(&m, -1.0, &McConfig::new(10, 1)).is_err());
    }

    #[test]
    fn too_many_points_propagates() {
        let m = model(0.3, 1.0, 10.0);
        let mut cfg = McConfig::new(2, 1);
        cfg.n_max = 3;
        let e = estimate_pi(&m, &JumpLaw::exponential(10.0).unwrap(), &cfg);
        assert!(matches!(e, Err(Error::TooManyPoints { .. })));
        let mut cfg = McConfig::new(2, 1);
        cfg.cap = 3;
        let e = estimate_pi(&m, &JumpLaw::exponential(10.0).unwrap(), &cfg);
        assert!(matches!(e, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn coupled_domination_pathwise() {
        let m = model(0.7, 1.0, 1.0);
        let law = JumpLaw::gamma(2.0, 0.4).unwrap();
        let run = simulate_coupled(&m, &law, 0.02, &McConfig::new(300, 3)).unwrap();
        assert!(run.pi.indicators.iter().zip(&run.psi.indicators).all(|(p, q)| *p <= *q));
        assert!(run.psi.estimate.proxy);
    }
}

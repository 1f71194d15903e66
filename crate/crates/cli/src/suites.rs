//! Experiment runners: each turns an [`ExperimentSpec`] into result rows.

use std::time::Instant;

use ruinlab::asymptotics;
use ruinlab::pickands;
use ruinlab::rng::derive_seed;
use ruinlab::ruin_mc::{self, RuinRun};
use ruinlab::{AsymptoticInputs, Hurst, JumpLaw, MCEstimate, PickandsEstimate, RuinModel};

use crate::error::{CliError, CliResult};
use crate::record::ResultRecord;
use crate::spec::{Estimator, ExperimentSpec, Kind};

/// Seed salt for comparator estimates, so they are independent of `π̂`.
const COMPARATOR_SALT: u64 = 0xC0;
const PICKANDS_SALT: u64 = 0x91;

fn model(spec: &ExperimentSpec, u: f64) -> CliResult<RuinModel> {
    Ok(RuinModel::new(spec.h, spec.c, u)?)
}

fn mc_record(
    kind: &str,
    spec: &ExperimentSpec,
    u: f64,
    law: Option<&JumpLaw>,
    delta: Option<f64>,
    e: &MCEstimate,
) -> ResultRecord {
    ResultRecord {
        kind: kind.to_string(),
        h: Some(spec.h),
        c: Some(spec.c),
        u: Some(u),
        law: law.map(JumpLaw::to_string),
        delta,
        p_hat: Some(e.p_hat),
        stderr: Some(e.stderr),
        ci_lo: Some(e.ci95.0),
        ci_hi: Some(e.ci95.1),
        horizon: Some(e.horizon),
        reps: Some(e.replications),
        seed: Some(e.seed),
        ..Default::default()
    }
}

fn warn_horizon(e: &MCEstimate, u: f64) {
    if e.horizon_too_small {
        eprintln!(
            "{}",
            serde_json::json!({"warning": "HorizonTooSmall", "u": u, "late_maximum_share": e.late_maximum_share})
        );
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Inspected ruin probability with the configured estimator.
pub fn estimate_pi(spec: &ExperimentSpec, m: &RuinModel, law: &JumpLaw, seed: u64) -> CliResult<MCEstimate> {
    let cfg = spec.mc_config(seed);
    Ok(match spec.estimator {
        Estimator::Crude => ruin_mc::estimate_pi(m, law, &cfg)?,
        Estimator::Mixture => ruin_mc::estimate_pi_mixture(m, law, &cfg)?,
    })
}

pub fn run_mc(spec: &ExperimentSpec) -> CliResult<Vec<ResultRecord>> {
    let mut rows = Vec::with_capacity(spec.sweep.len());
    for &u in &spec.sweep {
        let m = model(spec, u)?;
        let (row, wall) = match spec.kind {
            Kind::McPi => {
                let law = spec.require_law()?;
                let (e, wall) = timed(|| estimate_pi(spec, &m, &law, spec.seed));
                let e = e?;
                warn_horizon(&e, u);
                (mc_record("mc_pi", spec, u, Some(&law), None, &e), wall)
            }
            _ => {
                let cfg = spec.mc_config(spec.seed);
                let (e, wall, kind, delta) = if spec.delta > 0.0 {
                    let (e, wall) = timed(|| ruin_mc::estimate_psi_discrete(&m, spec.delta, &cfg));
                    (e?, wall, "mc_psi", spec.delta)
                } else {
                    let (e, wall) = timed(|| ruin_mc::estimate_psi_continuous(&m, spec.eta, &cfg));
                    (e?, wall, "mc_psi:continuous", spec.eta)
                };
                warn_horizon(&e, u);
                (mc_record(kind, spec, u, None, Some(delta), &e), wall)
            }
        };
        rows.push(ResultRecord { wall_time_s: Some(wall), ..row });
    }
    Ok(rows)
}

fn asymptotic_inputs(spec: &ExperimentSpec, mu: Option<f64>) -> AsymptoticInputs {
    AsymptoticInputs {
        pickands_classical: spec.pickands_classical,
        pickands_discrete: spec.pickands_discrete,
        pickands_subordinated: spec.pickands_subordinated,
        mu,
        delta: spec.delta,
    }
}

/// Closed-form values: `asympt_pi` when a law is given, `asympt_psi` otherwise.
pub fn run_asympt(spec: &ExperimentSpec) -> CliResult<Vec<ResultRecord>> {
    let mut rows = Vec::with_capacity(spec.sweep.len());
    for &u in &spec.sweep {
        let m = model(spec, u)?;
        let start = Instant::now();
        let (v, target) = match spec.law {
            Some(law) => {
                let mu = law.mean();
                let inputs = asymptotic_inputs(spec, mu.is_finite().then_some(mu));
                (asymptotics::asympt_pi(&m, &inputs)?, "pi")
            }
            None => (asymptotics::asympt_psi(&m, &asymptotic_inputs(spec, None))?, "psi"),
        };
        rows.push(ResultRecord {
            kind: format!("asympt:{target}:{}", v.branch.as_str()),
            h: Some(spec.h),
            c: Some(spec.c),
            u: Some(u),
            law: spec.law.map(|l| l.to_string()),
            delta: Some(spec.delta),
            asympt_value: Some(v.value),
            log_asympt: Some(v.log_value),
            wall_time_s: Some(start.elapsed().as_secs_f64()),
            ..Default::default()
        });
    }
    Ok(rows)
}

/// One row per truncation `S`: the subordinated constant of `law` when a
/// law is given, otherwise `ℍ_{2H}^δ`. `horizon` holds `S`; `p_hat` and
/// `stderr` hold the estimate.
pub fn run_pickands(spec: &ExperimentSpec) -> CliResult<Vec<ResultRecord>> {
    let mut rows = Vec::with_capacity(spec.truncations.len());
    for &s in &spec.truncations {
        let (est, wall) = timed(|| match spec.law {
            Some(law) => {
                pickands::estimate_subordinated_with(&law, s, spec.reps, spec.seed, Default::default(), spec.cap)
            }
            None => pickands::estimate_classical(Hurst::new(spec.h)?, spec.delta, s, spec.reps, spec.eta, spec.seed),
        });
        let h = if spec.law.is_some() { 0.5 } else { spec.h };
        rows.push(pickands_row(&est?, h, spec.law.as_ref(), spec.seed, wall));
    }
    Ok(rows)
}

/// Result row for a Pickands-type estimate; `horizon` holds the truncation.
pub fn pickands_row(
    est: &PickandsEstimate,
    h: f64,
    law: Option<&JumpLaw>,
    seed: u64,
    wall_time_s: f64,
) -> ResultRecord {
    let kind = if law.is_some() { "pickands_subordinated" } else { "pickands_classical" };
    ResultRecord {
        kind: kind.to_string(),
        h: Some(h),
        law: law.map(JumpLaw::to_string),
        delta: law.is_none().then_some(if est.delta > 0.0 { est.delta } else { est.grid_eta }),
        p_hat: Some(est.value),
        stderr: Some(est.stderr),
        horizon: Some(est.truncation_s),
        reps: Some(est.replications),
        seed: Some(seed),
        wall_time_s: Some(wall_time_s),
        ..Default::default()
    }
}

/// What `π̂` is compared with; a pure function of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    /// `ψ̂_{δ=μ}` for `H < 1/2`.
    PsiMu,
    /// `ℋ_{2c²𝒵}·e^{−2cu}` for `H = 1/2`.
    AsymptPi,
    /// Coupled `ψ̂` on the `eta`-grid for `H > 1/2`.
    PsiContinuous,
}

impl Comparator {
    pub fn for_hurst(h: f64) -> Self {
        if h < 0.5 {
            Comparator::PsiMu
        } else if h == 0.5 {
            Comparator::AsymptPi
        } else {
            Comparator::PsiContinuous
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::PsiMu => "psi_mu",
            Comparator::AsymptPi => "asympt_pi",
            Comparator::PsiContinuous => "psi_continuous",
        }
    }
}

/// One sweep point of a ratio comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub u: f64,
    pub comparator: Comparator,
    pub pi: MCEstimate,
    /// Monte Carlo comparator estimate, absent for `AsymptPi`.
    pub reference_mc: Option<MCEstimate>,
    pub reference: f64,
    pub log_reference: f64,
    pub ratio: f64,
    /// Delta-method standard error of `ratio` (paired for coupled runs).
    pub ratio_stderr: f64,
    pub wall_time_s: f64,
}

/// Subordinated constant used by the `H = 1/2` comparator, with its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantUsed {
    pub value: f64,
    pub stderr: f64,
}

pub fn subordinated_constant(spec: &ExperimentSpec, law: &JumpLaw) -> CliResult<ConstantUsed> {
    if let Some(v) = spec.pickands_subordinated {
        return Ok(ConstantUsed { value: v, stderr: 0.0 });
    }
    let scaled = pickands::drift_scaled_law(law, spec.c)?;
    let e = pickands::estimate_subordinated_with(
        &scaled,
        spec.pickands_s,
        spec.pickands_reps,
        derive_seed(spec.seed, PICKANDS_SALT),
        Default::default(),
        spec.cap,
    )?;
    Ok(ConstantUsed { value: e.value, stderr: e.stderr })
}

fn paired_ratio_stderr(pi: &RuinRun, psi: &RuinRun) -> f64 {
    let n = pi.indicators.len() as f64;
    let p_psi = psi.estimate.p_hat;
    if p_psi == 0.0 {
        return f64::NAN;
    }
    let r = pi.estimate.p_hat / p_psi;
    let resid: Vec<f64> = pi
        .indicators
        .iter()
        .zip(&psi.indicators)
        .map(|(&a, &b)| {
            let d = f64::from(u8::from(a)) - r * f64::from(u8::from(b));
            d * d
        })
        .collect();
    (ruinlab::stats::pairwise_sum(&resid) / n).sqrt() / (n.sqrt() * p_psi)
}

fn relative(e: &MCEstimate) -> f64 {
    e.stderr / e.p_hat
}

pub fn compare_ratio_points(spec: &ExperimentSpec) -> CliResult<(Vec<RatioPoint>, Option<ConstantUsed>)> {
    let law = spec.require_law()?;
    let comparator = Comparator::for_hurst(spec.h);
    if spec.h <= 0.5 && !law.satisfies_condition_a() {
        return Err(CliError::config(
            "law",
            format!("{law} violates the finite mean/variance condition needed for h <= 1/2"),
        ));
    }
    if comparator == Comparator::PsiContinuous && spec.estimator == Estimator::Mixture {
        return Err(CliError::config(
            "estimator",
            "the h > 1/2 comparison couples crude paths; use estimator = \"crude\"",
        ));
    }
    let constant = match comparator {
        Comparator::AsymptPi => Some(subordinated_constant(spec, &law)?),
        _ => None,
    };
    let mut points = Vec::with_capacity(spec.sweep.len());
    for &u in &spec.sweep {
        let m = model(spec, u)?;
        let start = Instant::now();
        let point = match comparator {
            Comparator::PsiMu => {
                let pi = estimate_pi(spec, &m, &law, spec.seed)?;
                let psi = ruin_mc::estimate_psi_discrete(
                    &m,
                    law.mean(),
                    &spec.mc_config(derive_seed(spec.seed, COMPARATOR_SALT)),
                )?;
                let ratio = pi.p_hat / psi.p_hat;
                RatioPoint {
                    u,
                    comparator,
                    pi,
                    reference_mc: Some(psi),
                    reference: psi.p_hat,
                    log_reference: psi.p_hat.ln(),
                    ratio,
                    ratio_stderr: ratio * relative(&pi).hypot(relative(&psi)),
                    wall_time_s: 0.0,
                }
            }
            Comparator::AsymptPi => {
                let k = constant.expect("set for this comparator");
                let pi = estimate_pi(spec, &m, &law, spec.seed)?;
                let inputs = AsymptoticInputs { pickands_subordinated: Some(k.value.min(1.0)), ..Default::default() };
                let v = asymptotics::asympt_pi(&m, &inputs)?;
                let ratio = pi.p_hat / v.value;
                RatioPoint {
                    u,
                    comparator,
                    pi,
                    reference_mc: None,
                    reference: v.value,
                    log_reference: v.log_value,
                    ratio,
                    ratio_stderr: ratio * relative(&pi).hypot(k.stderr / k.value),
                    wall_time_s: 0.0,
                }
            }
            Comparator::PsiContinuous => {
                let run = ruin_mc::simulate_coupled(&m, &law, spec.eta, &spec.mc_config(spec.seed))?;
                let ratio = run.pi.estimate.p_hat / run.psi.estimate.p_hat;
                RatioPoint {
                    u,
                    comparator,
                    pi: run.pi.estimate,
                    reference_mc: Some(run.psi.estimate),
                    reference: run.psi.estimate.p_hat,
                    log_reference: run.psi.estimate.p_hat.ln(),
                    ratio,
                    ratio_stderr: paired_ratio_stderr(&run.pi, &run.psi),
                    wall_time_s: 0.0,
                }
            }
        };
        warn_horizon(&point.pi, u);
        points.push(RatioPoint { wall_time_s: start.elapsed().as_secs_f64(), ..point });
    }
    Ok((points, constant))
}

/// Two rows per sweep point: the comparator estimate (`comparator:<name>`,
/// Monte Carlo comparators only) and `compare_ratio:<name>` carrying `π̂`,
/// the comparator value in `asympt_value` and their ratio.
pub fn run_compare_ratio(spec: &ExperimentSpec) -> CliResult<Vec<ResultRecord>> {
    let (points, _) = compare_ratio_points(spec)?;
    Ok(ratio_rows(spec, &points))
}

/// Rows of [`run_compare_ratio`] for already computed points.
pub fn ratio_rows(spec: &ExperimentSpec, points: &[RatioPoint]) -> Vec<ResultRecord> {
    let law = spec.law;
    let mut rows = Vec::new();
    for p in points {
        let name = p.comparator.as_str();
        if let Some(reference) = &p.reference_mc {
            let delta = match p.comparator {
                Comparator::PsiMu => law.map(|l| l.mean()),
                _ => Some(spec.eta),
            };
            let mut row = mc_record(&format!("comparator:{name}"), spec, p.u, None, delta, reference);
            row.wall_time_s = Some(p.wall_time_s);
            rows.push(row);
        }
        let mut row = mc_record(&format!("compare_ratio:{name}"), spec, p.u, law.as_ref(), None, &p.pi)
            .with_reference(p.reference, p.log_reference);
        row.wall_time_s = Some(p.wall_time_s);
        rows.push(row);
    }
    rows
}

/// One sweep point of the infinite-mean envelope comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPoint {
    pub u: f64,
    pub pi: MCEstimate,
    pub envelopes: asymptotics::Prop2Envelopes<f64>,
    /// `π̂ / Ψ(C_H u^{1−H})` and its standard error.
    pub over_lower: (f64, f64),
    /// `π̂ / (u^H Ψ(C_H u^{1−H}))` and its standard error.
    pub over_upper: (f64, f64),
    pub wall_time_s: f64,
}

pub fn prop2_points(spec: &ExperimentSpec) -> CliResult<Vec<SandwichPoint>> {
    let law = spec.require_law()?;
    if law.mean().is_finite() {
        return Err(CliError::config(
            "law",
            format!("{law} has a finite mean; the envelope check needs infinite-mean jumps"),
        ));
    }
    if spec.h >= 0.5 {
        return Err(CliError::config("h", "the envelope check needs h < 1/2"));
    }
    let mut points = Vec::with_capacity(spec.sweep.len());
    for &u in &spec.sweep {
        let m = model(spec, u)?;
        let envelopes = asymptotics::prop2_envelopes(&m)?;
        let (pi, wall) = timed(|| estimate_pi(spec, &m, &law, spec.seed));
        let pi = pi?;
        warn_horizon(&pi, u);
        points.push(SandwichPoint {
            u,
            over_lower: (pi.p_hat / envelopes.lower, pi.stderr / envelopes.lower),
            over_upper: (pi.p_hat / envelopes.upper_rate, pi.stderr / envelopes.upper_rate),
            pi,
            envelopes,
            wall_time_s: wall,
        });
    }
    Ok(points)
}

/// Two rows per sweep point, `prop2_sandwich:lower` and
/// `prop2_sandwich:upper`, each with `π̂` and the envelope in `asympt_value`.
pub fn run_prop2_sandwich(spec: &ExperimentSpec) -> CliResult<Vec<ResultRecord>> {
    Ok(sandwich_rows(spec, &prop2_points(spec)?))
}

/// Rows of [`run_prop2_sandwich`] for already computed points.
pub fn sandwich_rows(spec: &ExperimentSpec, points: &[SandwichPoint]) -> Vec<ResultRecord> {
    let law = spec.law;
    let mut rows = Vec::new();
    for p in points {
        for (side, value, log_value) in [
            ("lower", p.envelopes.lower, p.envelopes.log_lower),
            ("upper", p.envelopes.upper_rate, p.envelopes.log_upper_rate),
        ] {
            let mut row = mc_record(&format!("prop2_sandwich:{side}"), spec, p.u, law.as_ref(), None, &p.pi)
                .with_reference(value, log_value);
            row.wall_time_s = Some(p.wall_time_s);
            rows.push(row);
        }
    }
    rows
}

/// Direction of a step between two estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increase,
    Decrease,
    Inconclusive,
}

/// Classifies `b − a` against `z` combined standard errors.
pub fn step_trend(a: (f64, f64), b: (f64, f64), z: f64) -> Trend {
    let diff = b.0 - a.0;
    let tol = z * a.1.hypot(b.1);
    if diff > tol {
        Trend::Increase
    } else if diff < -tol {
        Trend::Decrease
    } else {
        Trend::Inconclusive
    }
}

pub fn run_spec(spec: &ExperimentSpec) -> CliResult<Vec<ResultRecord>> {
    match spec.kind {
        Kind::McPi | Kind::McPsi => run_mc(spec),
        Kind::Asympt => run_asympt(spec),
        Kind::Pickands => run_pickands(spec),
        Kind::CompareRatio => run_compare_ratio(spec),
        Kind::Prop2Sandwich => run_prop2_sandwich(spec),
    }
}

//! Experiment specifications: the flat TOML config and its validated form.

use std::path::{Path, PathBuf};

use ruinlab::gaussian_paths::N_MAX;
use ruinlab::inspection::DEFAULT_CAP;
use ruinlab::JumpLaw;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    McPi,
    McPsi,
    Asympt,
    Pickands,
    CompareRatio,
    Prop2Sandwich,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::McPi => "mc_pi",
            Kind::McPsi => "mc_psi",
            Kind::Asympt => "asympt",
            Kind::Pickands => "pickands",
            Kind::CompareRatio => "compare_ratio",
            Kind::Prop2Sandwich => "prop2_sandwich",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Estimator for the inspected ruin probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Indicator averaging.
    #[default]
    Crude,
    /// Importance sampling over the exceedance events.
    Mixture,
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Raw config file: flat keys, all optional, unknown keys rejected. CLI
/// flags carry the same names and are overlaid on top.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: Option<Kind>,
    pub h: Option<f64>,
    pub c: Option<f64>,
    pub u: Option<OneOrMany>,
    pub law: Option<String>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub horizon_factor: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub force: Option<bool>,
    /// Pickands truncations `S`.
    pub s: Option<OneOrMany>,
    pub estimator: Option<Estimator>,
    pub pickands_classical: Option<f64>,
    pub pickands_discrete: Option<f64>,
    pub pickands_subordinated: Option<f64>,
    /// Replications and truncation used when a needed constant is estimated.
    pub pickands_reps: Option<u64>,
    pub pickands_s: Option<f64>,
    pub cap: Option<usize>,
    pub n_max: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($f:ident),*) => {
        SpecFile { $($f: $top.$f.or($base.$f)),* }
    };
}

impl SpecFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg.split('`').nth(1).unwrap_or("config").to_string();
            CliError::config(field, msg)
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Values set in `top` win.
    pub fn overlay(self, top: SpecFile) -> SpecFile {
        let base = self;
        overlay_fields!(
            base,
            top,
            kind,
            h,
            c,
            u,
            law,
            delta,
            eta,
            reps,
            seed,
            horizon_factor,
            out,
            format,
            force,
            s,
            estimator,
            pickands_classical,
            pickands_discrete,
            pickands_subordinated,
            pickands_reps,
            pickands_s,
            cap,
            n_max
        )
    }

    pub fn validate(self) -> CliResult<ExperimentSpec> {
        let kind = self.kind.ok_or_else(|| CliError::config("kind", "missing experiment kind"))?;
        let law = self
            .law
            .as_deref()
            .map(|s| s.parse::<JumpLaw>().map_err(|e| CliError::config("law", e.to_string())))
            .transpose()?;
        let needs_h = !(kind == Kind::Pickands && law.is_some());
        let h = match (self.h, needs_h) {
            (Some(h), _) => h,
            (None, false) => 0.5,
            (None, true) => return Err(CliError::config("h", "missing Hurst index")),
        };
        if !(h > 0.0 && h < 1.0) {
            return Err(CliError::config("h", format!("must lie in (0, 1), got {h}")));
        }
        let c = self.c.unwrap_or(1.0);
        positive("c", c)?;
        let sweep = self.u.map(OneOrMany::into_vec).unwrap_or_default();
        if kind != Kind::Pickands && sweep.is_empty() {
            return Err(CliError::config("u", "need at least one threshold"));
        }
        for &u in &sweep {
            positive("u", u)?;
        }
        increasing("u", &sweep)?;
        let truncations =
            self.s.map(OneOrMany::into_vec).unwrap_or_else(|| vec![ruinlab::pickands::DEFAULT_TRUNCATION]);
        for &s in &truncations {
            positive("s", s)?;
        }
        increasing("s", &truncations)?;
        let delta = self.delta.unwrap_or(0.0);
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(CliError::config("delta", format!("must be non-negative, got {delta}")));
        }
        let eta = self.eta.unwrap_or(0.01);
        positive("eta", eta)?;
        let reps = self.reps.unwrap_or(10_000);
        if reps == 0 {
            return Err(CliError::config("reps", "must be at least 1"));
        }
        let horizon_factor = self.horizon_factor.unwrap_or(ruinlab::ruin_mc::DEFAULT_HORIZON_FACTOR);
        if !(horizon_factor >= 1.0) || !horizon_factor.is_finite() {
            return Err(CliError::config("horizon_factor", format!("must be >= 1, got {horizon_factor}")));
        }
        for (name, v) in [
            ("pickands_classical", self.pickands_classical),
            ("pickands_discrete", self.pickands_discrete),
            ("pickands_subordinated", self.pickands_subordinated),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        let pickands_s = self.pickands_s.unwrap_or(ruinlab::pickands::DEFAULT_TRUNCATION);
        positive("pickands_s", pickands_s)?;
        let pickands_reps = self.pickands_reps.unwrap_or(10_000);
        if pickands_reps == 0 {
            return Err(CliError::config("pickands_reps", "must be at least 1"));
        }
        Ok(ExperimentSpec {
            kind,
            h,
            c,
            sweep,
            law,
            delta,
            eta,
            reps,
            seed: self.seed.unwrap_or(0),
            horizon_factor,
            output_path: self.out,
            format: self.format.unwrap_or_default(),
            force: self.force.unwrap_or(false),
            truncations,
            estimator: self.estimator.unwrap_or_default(),
            pickands_classical: self.pickands_classical,
            pickands_discrete: self.pickands_discrete,
            pickands_subordinated: self.pickands_subordinated,
            pickands_reps,
            pickands_s,
            cap: self.cap.unwrap_or(DEFAULT_CAP),
            n_max: self.n_max.unwrap_or(N_MAX),
        })
    }
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(name, format!("must be positive and finite, got {x}")))
    }
}

fn increasing(name: &str, xs: &[f64]) -> CliResult<()> {
    if xs.windows(2).all(|w| w[1] > w[0]) {
        Ok(())
    } else {
        Err(CliError::config(name, "sweep must be strictly increasing"))
    }
}

/// Validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub h: f64,
    pub c: f64,
    /// Thresholds `u`, strictly increasing.
    pub sweep: Vec<f64>,
    pub law: Option<JumpLaw>,
    pub delta: f64,
    pub eta: f64,
    pub reps: u64,
    pub seed: u64,
    pub horizon_factor: f64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub force: bool,
    pub truncations: Vec<f64>,
    pub estimator: Estimator,
    pub pickands_classical: Option<f64>,
    pub pickands_discrete: Option<f64>,
    pub pickands_subordinated: Option<f64>,
    pub pickands_reps: u64,
    pub pickands_s: f64,
    pub cap: usize,
    pub n_max: usize,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        SpecFile::parse(text)?.validate()
    }

    pub fn mc_config(&self, seed: u64) -> ruinlab::McConfig {
        let mut cfg = ruinlab::McConfig::new(self.reps, seed).horizon_factor(self.horizon_factor);
        cfg.cap = self.cap;
        cfg.n_max = self.n_max;
        cfg
    }

    pub fn require_law(&self) -> CliResult<JumpLaw> {
        self.law.ok_or_else(|| CliError::config("law", format!("{} needs a jump law", self.kind.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let spec = ExperimentSpec::from_toml("kind = \"asympt\"\nh = 0.5\nu = 1.0\n").unwrap();
        assert_eq!(spec.sweep, vec![1.0]);
        assert_eq!(spec.c, 1.0);
        assert_eq!(spec.horizon_factor, 6.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentSpec::from_toml("kind = \"asympt\"\nh = 0.5\nu = 1.0\nbogus = 3\n").unwrap_err();
        assert!(matches!(e, CliError::Config { ref field, .. } if field == "bogus"), "{e:?}");
    }

    #[test]
    fn bad_law_names_field() {
        let e = ExperimentSpec::from_toml("kind = \"mc_pi\"\nh = 0.5\nu = 1.0\nlaw = \"weird:1\"\n").unwrap_err();
        assert!(matches!(e, CliError::Config { ref field, .. } if field == "law"));
    }

    #[test]
    fn sweep_must_increase() {
        let e = ExperimentSpec::from_toml("kind = \"asympt\"\nh = 0.5\nu = [2.0, 1.0]\n").unwrap_err();
        assert!(matches!(e, CliError::Config { ref field, .. } if field == "u"));
        assert!(ExperimentSpec::from_toml("kind = \"asympt\"\nh = 0.5\nu = 1.0\nreps = 0\n").is_err());
    }

    #[test]
    fn overlay_prefers_top() {
        let base = SpecFile { h: Some(0.3), reps: Some(5), ..Default::default() };
        let top = SpecFile { reps: Some(9), ..Default::default() };
        let merged = base.overlay(top);
        assert_eq!((merged.h, merged.reps), (Some(0.3), Some(9)));
    }
}

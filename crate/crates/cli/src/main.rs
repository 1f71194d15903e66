use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ruinlab_cli::spec::{Estimator, OneOrMany};
use ruinlab_cli::{Format, Kind, SpecFile};

#[derive(Parser)]
#[command(name = "ruinlab", version, about = "Ruin probabilities of inspected fractional Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo ruin probability: inspected with --law, grid otherwise.
    Mc(Flags),
    /// Closed-form tail asymptotics.
    Asympt(Flags),
    /// Pickands-type constants; subordinated with --law.
    Pickands(Flags),
    /// Ratio of the inspected probability to its comparator over a u-sweep.
    Compare(Flags),
    /// Infinite-mean envelope check over a u-sweep.
    Sandwich(Flags),
}

/// Flags mirror the config keys; values given here override the file.
#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Repeat for a sweep.
    #[arg(long)]
    u: Vec<f64>,
    #[arg(long)]
    law: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon_factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    force: bool,
    /// Pickands truncation; repeat for several.
    #[arg(long)]
    s: Vec<f64>,
    #[arg(long, value_enum)]
    estimator: Option<Estimator>,
    #[arg(long)]
    pickands_classical: Option<f64>,
    #[arg(long)]
    pickands_discrete: Option<f64>,
    #[arg(long)]
    pickands_subordinated: Option<f64>,
    #[arg(long)]
    pickands_reps: Option<u64>,
    #[arg(long)]
    pickands_s: Option<f64>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
}

fn many(v: Vec<f64>) -> Option<OneOrMany> {
    (!v.is_empty()).then_some(OneOrMany::Many(v))
}

impl Flags {
    fn into_spec(self, kind: Option<Kind>) -> ruinlab_cli::CliResult<SpecFile> {
        let base = match &self.config {
            Some(path) => SpecFile::load(path)?,
            None => SpecFile::default(),
        };
        let top = SpecFile {
            kind,
            h: self.h,
            c: self.c,
            u: many(self.u),
            law: self.law,
            delta: self.delta,
            eta: self.eta,
            reps: self.reps,
            seed: self.seed,
            horizon_factor: self.horizon_factor,
            out: self.out,
            format: self.format,
            force: self.force.then_some(true),
            s: many(self.s),
            estimator: self.estimator,
            pickands_classical: self.pickands_classical,
            pickands_discrete: self.pickands_discrete,
            pickands_subordinated: self.pickands_subordinated,
            pickands_reps: self.pickands_reps,
            pickands_s: self.pickands_s,
            cap: self.cap,
            n_max: self.n_max,
        };
        Ok(base.overlay(top))
    }
}

fn main() {
    let cli = Cli::parse();
    let spec = match cli.command {
        Command::Mc(f) => {
            let kind = match (&f.law, &f.config) {
                (Some(_), _) => Some(Kind::McPi),
                (None, None) => Some(Kind::McPsi),
                (None, Some(_)) => None,
            };
            f.into_spec(kind).map(|s| {
                let kind = s.kind.or(Some(if s.law.is_some() { Kind::McPi } else { Kind::McPsi }));
                SpecFile { kind, ..s }
            })
        }
        Command::Asympt(f) => f.into_spec(Some(Kind::Asympt)),
        Command::Pickands(f) => f.into_spec(Some(Kind::Pickands)),
        Command::Compare(f) => f.into_spec(Some(Kind::CompareRatio)),
        Command::Sandwich(f) => f.into_spec(Some(Kind::Prop2Sandwich)),
    };
    let code = ruinlab_cli::report(spec.and_then(ruinlab_cli::execute));
    std::process::exit(code);
}

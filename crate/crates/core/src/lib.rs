//! Ruin probabilities of fractional Brownian motion inspected at the jump
//! epochs of an independent non-negative pure-jump Lévy clock.
//!
//! The crate estimates
//!
//! * the inspected ruin probability `P(∃n: B_H(S_n) - c·S_n > u)` where
//!   `S_n = Z_1 + … + Z_n` are partial sums of i.i.d. positive jumps,
//! * the discrete-grid and (grid-proxied) continuous ruin probabilities,
//! * the classical, discrete and renewal-sampled Pickands-type constants,
//!
//! and evaluates the closed-form tail asymptotics these quantities obey.
//!
//! Numerical kernels ([`gaussian_paths`], [`asymptotics`]) are generic over
//! the [`Scalar`] type; the Monte Carlo layers work in `f64`. Concrete
//! aliases for both precisions are exported at the crate root.

// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod gaussian_paths;
pub mod inspection;
pub mod pickands;
pub mod rng;
pub mod ruin_mc;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use inspection::{InspectionTimes, JumpLaw};
pub use pickands::{PickandsEstimate, PickandsMethod};
pub use ruin_mc::{MCEstimate, McConfig};
pub use scalar::Scalar;

pub type Hurst = gaussian_paths::Hurst<f64>;
pub type TimeGrid = gaussian_paths::TimeGrid<f64>;
pub type PointSet = gaussian_paths::PointSet<f64>;
pub type PathSample = gaussian_paths::PathSample<f64>;
pub type RuinModel = asymptotics::RuinModel<f64>;
pub type AsymptoticInputs = asymptotics::AsymptoticInputs<f64>;
pub type AsymptoticValue = asymptotics::AsymptoticValue<f64>;

pub type Hurst32 = gaussian_paths::Hurst<f32>;
pub type TimeGrid32 = gaussian_paths::TimeGrid<f32>;
pub type PointSet32 = gaussian_paths::PointSet<f32>;
pub type PathSample32 = gaussian_paths::PathSample<f32>;
pub type RuinModel32 = asymptotics::RuinModel<f32>;
pub type AsymptoticInputs32 = asymptotics::AsymptoticInputs<f32>;

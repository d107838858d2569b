//! Concentration of empirical measures under radial optimal transport costs.
//!
//! The crate evaluates deviation bounds for `D_f(μ, μ_N)`, the transport
//! cost between a law and its empirical measure, for cost functions
//! `f(|x − y|)` with polynomial or exponential growth, and runs the Monte
//! Carlo experiments that check those bounds numerically.

pub mod bounds;
pub mod costs;
pub mod error;
pub mod harness;
pub mod measures;
mod numeric;
pub mod ot;
mod par;
pub mod partition;
pub mod rng;
pub mod stats;

pub use costs::{default_growth, GrowthPair, RadialCost, RateParams, Regime};
pub use error::{Error, Result};
pub use measures::{empirical_measure, moment_h, moment_poly, DiscreteMeasure, Distribution, Point, Radial};
pub use ot::{brute_force_ot, exact_ot, monotone_cost_1d, quantile_cost_semicontinuous, OtResult};
pub use rng::Seed;

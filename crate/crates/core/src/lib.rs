//! Ruin probabilities for insurance capital invested in a risky asset.
//!
//! Simulation of the Cramér–Lundberg risk process under geometric Brownian
//! and exponential-Lévy investment, Monte Carlo ruin estimation, and the
//! numerics of the diffusion model: the conditional density of the
//! exponential functional of Brownian motion (Yor's formula) and the joint
//! transition density of invested capital and investment level.
//!
//! The numerical kernels are generic over [`Real`] (`f32` or `f64`); the
//! Monte Carlo machinery works in `f64`. The aliases below name the `f64`
//! instantiations used throughout the CLI.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod io;
pub mod model;
pub mod num;
pub mod paths;
pub mod processes;
pub mod quadrature;
pub mod ruin_mc;
pub mod stats;
pub mod yor;

pub use error::{Error, Result};
pub use num::Real;

pub type ClaimLawF64 = model::ClaimLaw<f64>;
pub type PremiumSpecF64 = model::PremiumSpec<f64>;
pub type RiskParamsF64 = model::RiskParams<f64>;
pub type InvestmentModelF64 = model::InvestmentModel<f64>;
pub type HyperbolicPointF64 = model::HyperbolicPoint<f64>;
pub type CountingProcessF64 = processes::CountingProcess<f64>;
pub type LevyJumpSpecF64 = processes::LevyJumpSpec<f64>;
pub type ThetaEvalF64 = yor::ThetaEval<f64>;

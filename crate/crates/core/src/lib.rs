//! Portmanteau tests for VAR models with time-varying volatility.
//!
//! The crate fits VAR(p) models by OLS, GLS (known volatility) and
//! adaptive least squares (kernel-smoothed volatility), estimates the
//! asymptotic covariance of residual autocorrelations, and computes
//! Box–Pierce / Ljung–Box statistics whose null law is a weighted sum of
//! chi-squares, together with Monte Carlo tooling for size and power
//! studies.

pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod matnum;
pub mod model;
pub mod montecarlo;
pub mod portmanteau;
pub mod quad;
pub mod quadform;
pub mod theory;
pub mod volatility;

pub use error::{Error, Result};

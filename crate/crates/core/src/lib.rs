//! Decentralized Neyman-Pearson detection over networks of sensors that
//! observe time-inhomogeneous Poisson processes.
//!
//! Each sensor turns its event times into a single log-likelihood ratio and
//! sends that one number to a fusion center at the decision time. Summing the
//! reports gives exactly the centralized likelihood ratio, so the fused test
//! `log L_T >= log gamma` keeps the optimality of a centralized detector.
//!
//! Module map:
//! - [`intensity`], [`scenario`], [`config`]: rate models, scenario geometry and
//!   the derived constants (expected counts and per-jump factor bounds).
//! - [`poisson_sim`]: sample paths of inhomogeneous Poisson processes.
//! - [`likelihood`]: per-sensor and fused log-likelihood ratios, pathwise envelope.
//! - [`bounds`], [`special`]: Poisson tails and analytic error-probability bounds.
//! - [`stats`]: chi-square and moment checks for simulation output.
//! - [`montecarlo`]: seeded trial generation shared by detector and network.
//! - [`detector`]: decision rule, threshold calibration, error rates and ROC.
//! - [`network`]: sensor nodes, report wire format, transports, fusion center.

pub mod bounds;
pub mod config;
pub mod detector;
mod error;
pub mod intensity;
pub mod likelihood;
pub mod montecarlo;
pub mod network;
pub mod poisson_sim;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod stats;
pub mod summation;

pub use error::{Error, Result};

//! Causal weight functions for linear impulse-response estimators.
//!
//! The crate estimates the weighting over baseline shock values that is
//! implicitly applied by local projections on observed shocks, proxies, and
//! controls; implements Riesz-representer estimators of weighted average
//! marginal effects; and ships a simulation lab that constructs the standard
//! identification-failure counterexamples (heteroskedasticity-based IV,
//! ICA/non-Gaussianity, nonparametric factor reconstruction) with brute-force
//! oracles for every closed-form identity.

pub mod acceptance;
pub mod amde;
pub mod cli;
pub mod error;
pub mod lab;
pub mod numcore;
pub mod projections;
pub mod weights;

pub use error::{Error, Result};
pub use numcore::{Dataset, RngStream, Series};

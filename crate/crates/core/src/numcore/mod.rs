//! Deterministic numeric primitives: series/dataset containers, least squares
//! with robust covariances, kernel density estimation, the empirical CDF, and
//! seeded random streams. Everything here is a pure function of its inputs;
//! values are immutable after construction and safe to share across threads.

pub mod ecdf;
pub mod kde;
pub mod ols;
pub mod rng;
pub mod series;
pub mod stats;

pub use ecdf::{ecdf, Ecdf};
pub use kde::{kde, silverman_bandwidth, KernelDensity};
pub use ols::{ols, residualize, RegressionFit, SeMode, INTERCEPT};
pub use rng::RngStream;
pub use series::{Dataset, Series};

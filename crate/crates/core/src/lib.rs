//! Macro-factor extraction and cross-sectional asset pricing.
//!
//! The crate covers the full empirical pipeline: building a monthly panel of
//! transformed macro-financial series, unit-root testing, estimating a dynamic
//! factor model by Kalman-filter maximum likelihood (EM), and pricing the
//! extracted factors with CAPM and Fama–MacBeth regressions.

pub mod dfm;
pub mod error;
pub mod linalg;
pub mod panel;
pub mod pricing;
pub mod report;
pub mod stationarity;
pub mod stats;

pub use error::{Error, Result};

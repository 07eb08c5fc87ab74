//! Unit-root and stationarity tests, and the ADF → KPSS → Zivot–Andrews pipeline.

mod adf;
mod kpss;
mod pipeline;
mod zivot_andrews;

use serde::{Deserialize, Serialize};

pub use adf::{adf_test, adf_test_values, mackinnon_p, AdfOptions, AdfTrend};
pub use kpss::{kpss_p_value, kpss_test, kpss_test_values, KpssTrend};
pub use pipeline::{stationarity_pipeline, stationarity_rows, PipelineOptions, StationarityRow, ZaTrigger};
pub use zivot_andrews::{za_p_bracket, zivot_andrews, zivot_andrews_values, BreakModel, ZaOptions};

use crate::error::{Error, Result};
use crate::panel::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    Adf,
    Kpss,
    ZivotAndrews,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stationary,
    NonStationary,
    StationaryWithBreak,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Stationary => "Stationary",
            Verdict::NonStationary => "Non-stationary",
            Verdict::StationaryWithBreak => "Stationary with structural break",
        }
    }
}

/// Critical values at the 1%, 5% and 10% levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: TestKind,
    pub statistic: f64,
    /// Exact or interpolated p-value, clamped to the bounds of the test's table.
    pub p_value: f64,
    pub lags: usize,
    /// First period of the post-break regime, as an index into the input series.
    pub break_index: Option<usize>,
    pub nobs: usize,
    pub critical_values: CriticalValues,
    pub verdict: Verdict,
}

/// The longest contiguous observed stretch of `series`, checked for length
/// and variation.
fn usable_values(series: &TimeSeries, min_len: usize) -> Result<(Vec<f64>, usize)> {
    let run = series.longest_observed_run();
    let offset = run.start;
    let values: Vec<f64> = series.values()[run].iter().flatten().copied().collect();
    check_values(&values, min_len).map_err(|e| match e {
        Error::Size(m) => Error::Size(format!("series `{}`: {m}", series.name())),
        Error::Degenerate(m) => Error::Degenerate(format!("series `{}`: {m}", series.name())),
        e => e,
    })?;
    Ok((values, offset))
}

fn check_values(y: &[f64], min_len: usize) -> Result<()> {
    if y.len() < min_len {
        return Err(Error::Size(format!(
            "need at least {min_len} contiguous observations, got {}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("series contains non-finite values".into()));
    }
    if y.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    Ok(())
}

/// Default maximum ADF lag `⌊12 · (n/100)^{1/4}⌋`, capped so the test
/// regression keeps at least five residual degrees of freedom.
fn default_max_lags(n: usize, n_det: usize) -> usize {
    let schwert = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    schwert.min(feasible_max_lags(n, n_det))
}

fn feasible_max_lags(n: usize, n_det: usize) -> usize {
    // rows = n - 1 - p, columns = n_det + 1 + p, need rows - columns >= 5
    (n.saturating_sub(n_det + 7)) / 2
}

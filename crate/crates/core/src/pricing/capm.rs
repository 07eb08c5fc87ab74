use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::{ols, with_intercept, RegressionResult};
use crate::error::{Error, Result};
use crate::panel::{Panel, TimeSeries};
use crate::report::{Cell, ReportTable};

/// Minimum months shared by a country and the market.
pub const MIN_CAPM_OBS: usize = 30;

/// How the market excess return is formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "series")]
pub enum MarketProxy {
    /// One column of the return panel; that column is left out of the CAPM table.
    Series(String),
    /// Cross-sectional mean of the available countries each month.
    EqualWeighted,
}

impl Default for MarketProxy {
    fn default() -> Self {
        MarketProxy::Series("US".into())
    }
}

/// Market excess-return series for `proxy`.
pub fn market_excess(returns: &Panel, proxy: &MarketProxy) -> Result<TimeSeries> {
    match proxy {
        MarketProxy::Series(name) => returns
            .column(name)
            .cloned()
            .ok_or_else(|| Error::Parameter(format!("market series `{name}` is not in the return panel"))),
        MarketProxy::EqualWeighted => {
            let values = (0..returns.n_obs())
                .map(|t| {
                    let obs: Vec<f64> = returns.columns().iter().filter_map(|c| c.values()[t]).collect();
                    (!obs.is_empty()).then(|| obs.iter().sum::<f64>() / obs.len() as f64)
                })
                .collect();
            TimeSeries::new("Market (equal-weighted)", returns.dates().to_vec(), values)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapmRow {
    pub country: String,
    pub result: Option<RegressionResult>,
    pub error: Option<String>,
}

impl CapmRow {
    pub fn alpha(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.coefficients[0])
    }

    pub fn beta(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.coefficients[1])
    }
}

/// Time-series regression of each column of `returns` on an intercept and the
/// market excess return, over the months where both are observed.
pub fn capm_regress(returns: &Panel, market: &TimeSeries) -> Result<Vec<CapmRow>> {
    if market.dates() != returns.dates() {
        return Err(Error::Alignment(format!(
            "market series `{}` is not on the return panel's date axis",
            market.name()
        )));
    }
    Ok(returns
        .columns()
        .iter()
        .map(|col| {
            let pairs: Vec<(f64, f64)> = col
                .values()
                .iter()
                .zip(market.values())
                .filter_map(|(r, m)| Some(((*r)?, (*m)?)))
                .collect();
            let outcome = if pairs.len() < MIN_CAPM_OBS {
                Err(Error::Size(format!(
                    "{} overlapping months with the market, need {MIN_CAPM_OBS}",
                    pairs.len()
                )))
            } else {
                let y = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.0));
                let x = with_intercept(&DMatrix::from_iterator(pairs.len(), 1, pairs.iter().map(|p| p.1)));
                ols(&y, &x)
            };
            match outcome {
                Ok(r) => CapmRow {
                    country: col.name().to_string(),
                    result: Some(r),
                    error: None,
                },
                Err(e) => CapmRow {
                    country: col.name().to_string(),
                    result: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// CAPM for every country against `proxy`. A single-series proxy is not
/// regressed on itself.
pub fn run_capm(returns: &Panel, proxy: &MarketProxy) -> Result<Vec<CapmRow>> {
    let market = market_excess(returns, proxy)?;
    let panel = match proxy {
        MarketProxy::Series(name) if returns.n_cols() > 1 => returns.without(name)?,
        _ => returns.clone(),
    };
    capm_regress(&panel, &market)
}

pub fn capm_table(rows: &[CapmRow]) -> ReportTable {
    let mut t = ReportTable::new(
        "CAPM Regression Results for Each Country",
        &["Country", "Alpha", "Alpha P Value", "Beta", "Beta P Value", "R²"],
    );
    for row in rows {
        let cells = match &row.result {
            Some(r) => vec![
                Cell::text(&row.country),
                Cell::fixed(r.coefficients[0], 6),
                Cell::pvalue(r.p_values[0], 6),
                Cell::fixed(r.coefficients[1], 6),
                Cell::pvalue(r.p_values[1], 6),
                Cell::fixed(r.r_squared, 6),
            ],
            None => {
                let mut c = vec![Cell::text(&row.country)];
                c.extend(std::iter::repeat_n(Cell::Missing, 5));
                c
            }
        };
        t.push_row(cells);
        if let Some(e) = &row.error {
            t.push_note(format!("{}: {e}", row.country));
        }
    }
    t
}

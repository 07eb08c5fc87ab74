use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::LeastSquares;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    /// Condition number of the design matrix.
    pub condition: f64,
}

/// t-ratio that stays meaningful when the standard error is exactly zero.
pub(crate) fn t_ratio(coef: f64, se: f64) -> f64 {
    if se > 0.0 {
        coef / se
    } else if coef == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(coef)
    }
}

/// Two-sided p-value of `t` under a Student t with `df` degrees of freedom.
pub(crate) fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Least squares of `y` on `x`, where `x` includes an intercept column.
/// Classical standard errors, t-distribution p-values with `n − k` degrees of
/// freedom and centered R².
pub fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<RegressionResult> {
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(
            "regression input contains non-finite values".into(),
        ));
    }
    let fit = LeastSquares::fit(y, x)?;
    let (n, k) = x.shape();
    let se = fit.standard_errors();
    let df = (n - k) as f64;
    let t_stats: Vec<f64> = fit
        .coefficients
        .iter()
        .zip(se.iter())
        .map(|(&b, &s)| t_ratio(b, s))
        .collect();
    let p_values = t_stats.iter().map(|&t| two_sided_p(t, df)).collect();

    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - fit.ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(RegressionResult {
        coefficients: fit.coefficients.iter().copied().collect(),
        std_errors: se.iter().copied().collect(),
        t_stats,
        p_values,
        r_squared,
        n_obs: n,
        condition: fit.condition,
    })
}

/// `[1, x]` design matrix.
pub(crate) fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_values, default_max_lags, feasible_max_lags, usable_values};
use super::{CriticalValues, TestKind, UnitRootResult, Verdict};
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::panel::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfTrend {
    #[default]
    Constant,
    ConstantTrend,
}

impl AdfTrend {
    fn n_det(self) -> usize {
        match self {
            AdfTrend::Constant => 1,
            AdfTrend::ConstantTrend => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdfOptions {
    /// Upper bound for AIC lag search; `⌊12·(n/100)^{1/4}⌋` when `None`.
    pub max_lags: Option<usize>,
    /// Skip the AIC search and use exactly this many lags.
    pub fixed_lags: Option<usize>,
    pub trend: AdfTrend,
}

pub fn adf_test(series: &TimeSeries, opts: AdfOptions) -> Result<UnitRootResult> {
    let (y, _) = usable_values(series, 20)?;
    adf_test_values(&y, opts)
}

/// ADF test on a contiguous slice of observations.
pub fn adf_test_values(y: &[f64], opts: AdfOptions) -> Result<UnitRootResult> {
    check_values(y, 20)?;
    let lags = match opts.fixed_lags {
        Some(p) if p > feasible_max_lags(y.len(), opts.trend.n_det()) => {
            return Err(Error::Size(format!(
                "{p} lags is too many for {} observations",
                y.len()
            )))
        }
        Some(p) => p,
        None => {
            let max = opts
                .max_lags
                .unwrap_or_else(|| default_max_lags(y.len(), opts.trend.n_det()))
                .min(feasible_max_lags(y.len(), opts.trend.n_det()));
            select_lag_aic(y, opts.trend, max)?
        }
    };
    let (dy, x) = adf_design(y, lags, opts.trend, lags);
    let fit = LeastSquares::fit(&dy, &x)?;
    let statistic = fit.coefficients[0] / fit.standard_errors()[0];
    if !statistic.is_finite() {
        return Err(Error::Degenerate("ADF regression has a perfect fit".into()));
    }
    let nobs = dy.len();
    let p_value = mackinnon_p(statistic, opts.trend).clamp(1e-4, 0.9999);
    Ok(UnitRootResult {
        test: TestKind::Adf,
        statistic,
        p_value,
        lags,
        break_index: None,
        nobs,
        critical_values: adf_critical_values(opts.trend, nobs),
        verdict: if p_value <= 0.05 {
            Verdict::Stationary
        } else {
            Verdict::NonStationary
        },
    })
}

/// Regression of `Δy_t` on `[y_{t−1}, 1, (t/n), Δy_{t−1} … Δy_{t−lags}]` for
/// `t = first + 1 … n − 1`, where `first >= lags` fixes a common sample.
pub(super) fn adf_design(
    y: &[f64],
    lags: usize,
    trend: AdfTrend,
    first: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = y.len();
    let rows: Vec<usize> = (first + 1..n).collect();
    let k = 1 + trend.n_det() + lags;
    let dy = |t: usize| y[t] - y[t - 1];
    let resp = DVector::from_iterator(rows.len(), rows.iter().map(|&t| dy(t)));
    let mut x = DMatrix::zeros(rows.len(), k);
    for (r, &t) in rows.iter().enumerate() {
        x[(r, 0)] = y[t - 1];
        x[(r, 1)] = 1.0;
        if trend == AdfTrend::ConstantTrend {
            x[(r, 2)] = t as f64 / n as f64;
        }
        for j in 1..=lags {
            x[(r, trend.n_det() + j)] = dy(t - j);
        }
    }
    (resp, x)
}

/// Lag order minimizing `nobs·ln(SSR/nobs) + 2k` over a common sample.
pub(super) fn select_lag_aic(y: &[f64], trend: AdfTrend, max_lags: usize) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for p in 0..=max_lags {
        let (dy, x) = adf_design(y, p, trend, max_lags);
        let fit = LeastSquares::fit(&dy, &x)?;
        let n = dy.len() as f64;
        if fit.ssr <= 0.0 {
            return Err(Error::Degenerate("ADF regression has a perfect fit".into()));
        }
        let aic = n * (fit.ssr / n).ln() + 2.0 * x.ncols() as f64;
        if best.map_or(true, |(b, _)| aic < b) {
            best = Some((aic, p));
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or(0))
}

struct ResponseSurface {
    tau_max: f64,
    tau_min: f64,
    tau_star: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
}

// MacKinnon (1994) approximate asymptotic p-value surface for one integrated series.
const SURFACE_C: ResponseSurface = ResponseSurface {
    tau_max: 2.74,
    tau_min: -18.83,
    tau_star: -1.61,
    small_p: [2.1659, 1.4412, 0.038269],
    large_p: [1.7339, 0.93202, -0.12745, -0.010368],
};

const SURFACE_CT: ResponseSurface = ResponseSurface {
    tau_max: 0.7,
    tau_min: -16.18,
    tau_star: -2.89,
    small_p: [3.2512, 1.6047, 0.049588],
    large_p: [2.5261, 0.61654, -0.37956, -0.060285],
};

/// Asymptotic p-value of an ADF t-statistic (unclamped).
pub fn mackinnon_p(stat: f64, trend: AdfTrend) -> f64 {
    let s = match trend {
        AdfTrend::Constant => &SURFACE_C,
        AdfTrend::ConstantTrend => &SURFACE_CT,
    };
    if stat > s.tau_max {
        return 1.0;
    }
    if stat < s.tau_min {
        return 0.0;
    }
    let z = if stat <= s.tau_star {
        s.small_p[0] + s.small_p[1] * stat + s.small_p[2] * stat * stat
    } else {
        s.large_p[0] + s.large_p[1] * stat + s.large_p[2] * stat.powi(2) + s.large_p[3] * stat.powi(3)
    };
    Normal::standard().cdf(z)
}

/// Finite-sample critical values (MacKinnon 2010 response surfaces).
pub(super) fn adf_critical_values(trend: AdfTrend, nobs: usize) -> CriticalValues {
    let coefs: [[f64; 4]; 3] = match trend {
        AdfTrend::Constant => [
            [-3.43035, -6.5393, -16.786, -79.433],
            [-2.86154, -2.8903, -4.234, -40.040],
            [-2.56677, -1.5384, -2.809, 0.0],
        ],
        AdfTrend::ConstantTrend => [
            [-3.95877, -9.0531, -28.428, -134.155],
            [-3.41049, -4.3904, -9.036, -45.374],
            [-3.12705, -2.5856, -3.925, -22.380],
        ],
    };
    let t = nobs as f64;
    let cv = |c: &[f64; 4]| c[0] + c[1] / t + c[2] / t.powi(2) + c[3] / t.powi(3);
    CriticalValues {
        one: cv(&coefs[0]),
        five: cv(&coefs[1]),
        ten: cv(&coefs[2]),
    }
}

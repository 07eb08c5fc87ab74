use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_values, usable_values, CriticalValues, TestKind, UnitRootResult, Verdict};
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::panel::TimeSeries;
use crate::stats::{bartlett_long_run_variance, newey_west_bandwidth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpssTrend {
    #[default]
    Level,
    Trend,
}

// (critical value, p) from Kwiatkowski et al. (1992), Table 1.
const LEVEL_TABLE: [(f64, f64); 4] = [(0.347, 0.10), (0.463, 0.05), (0.574, 0.025), (0.739, 0.01)];
const TREND_TABLE: [(f64, f64); 4] = [(0.119, 0.10), (0.146, 0.05), (0.176, 0.025), (0.216, 0.01)];

fn table(trend: KpssTrend) -> &'static [(f64, f64); 4] {
    match trend {
        KpssTrend::Level => &LEVEL_TABLE,
        KpssTrend::Trend => &TREND_TABLE,
    }
}

/// p-value by linear interpolation in the critical-value table, clamped to `[0.01, 0.10]`.
pub fn kpss_p_value(stat: f64, trend: KpssTrend) -> f64 {
    let tab = table(trend);
    if stat <= tab[0].0 {
        return tab[0].1;
    }
    for w in tab.windows(2) {
        let ((c0, p0), (c1, p1)) = (w[0], w[1]);
        if stat <= c1 {
            return p0 + (stat - c0) / (c1 - c0) * (p1 - p0);
        }
    }
    tab[3].1
}

pub fn kpss_test(series: &TimeSeries, trend: KpssTrend) -> Result<UnitRootResult> {
    let (y, _) = usable_values(series, 20)?;
    kpss_test_values(&y, trend, None)
}

/// KPSS LM statistic with a Bartlett long-run variance. `lags` defaults to
/// `⌊4·(n/100)^{2/9}⌋`.
pub fn kpss_test_values(y: &[f64], trend: KpssTrend, lags: Option<usize>) -> Result<UnitRootResult> {
    check_values(y, 20)?;
    let n = y.len();
    let k = match trend {
        KpssTrend::Level => 1,
        KpssTrend::Trend => 2,
    };
    let x = DMatrix::from_fn(n, k, |t, j| if j == 0 { 1.0 } else { (t + 1) as f64 / n as f64 });
    let fit = LeastSquares::fit(&DVector::from_column_slice(y), &x)?;
    let resid = fit.residuals.as_slice();

    let mut partial = 0.0;
    let mut eta = 0.0;
    for e in resid {
        partial += e;
        eta += partial * partial;
    }
    eta /= (n * n) as f64;

    let lags = lags.unwrap_or_else(|| newey_west_bandwidth(n));
    let lrv = bartlett_long_run_variance(resid, lags);
    if !(lrv > 0.0) {
        return Err(Error::Degenerate("KPSS long-run variance is not positive".into()));
    }
    let statistic = eta / lrv;
    let p_value = kpss_p_value(statistic, trend);
    let tab = table(trend);
    Ok(UnitRootResult {
        test: TestKind::Kpss,
        statistic,
        p_value,
        lags,
        break_index: None,
        nobs: n,
        critical_values: CriticalValues {
            one: tab[3].0,
            five: tab[1].0,
            ten: tab[0].0,
        },
        verdict: if p_value >= 0.05 {
            Verdict::Stationary
        } else {
            Verdict::NonStationary
        },
    })
}

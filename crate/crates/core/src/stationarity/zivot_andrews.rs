use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::adf::{adf_design, select_lag_aic};
use super::{check_values, default_max_lags, feasible_max_lags, usable_values};
use super::{AdfTrend, CriticalValues, TestKind, UnitRootResult, Verdict};
use crate::error::{Error, Result};
use crate::panel::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakModel {
    /// Shift in level.
    #[default]
    Intercept,
    /// Shift in trend slope.
    Trend,
    /// Both.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZaOptions {
    pub model: BreakModel,
    /// Fraction of the sample excluded from the break search at each end.
    pub trim: f64,
    pub max_lags: Option<usize>,
    pub fixed_lags: Option<usize>,
}

impl Default for ZaOptions {
    fn default() -> Self {
        Self {
            model: BreakModel::Intercept,
            trim: 0.15,
            max_lags: None,
            fixed_lags: None,
        }
    }
}

/// Zivot & Andrews (1992) asymptotic critical values at 1%, 2.5%, 5%, 10%.
fn za_table(model: BreakModel) -> [f64; 4] {
    match model {
        BreakModel::Intercept => [-5.34, -5.02, -4.80, -4.58],
        BreakModel::Trend => [-4.93, -4.67, -4.42, -4.11],
        BreakModel::Both => [-5.57, -5.30, -5.08, -4.82],
    }
}

/// Upper end of the critical-value bracket containing `stat`, in `[0.01, 0.10]`.
fn bracket_p(stat: f64, model: BreakModel) -> f64 {
    let cv = za_table(model);
    [0.01, 0.025, 0.05]
        .into_iter()
        .zip(cv)
        .find(|(_, c)| stat < *c)
        .map_or(0.10, |(p, _)| p)
}

/// Human-readable critical-value bracket for a Zivot–Andrews result.
pub fn za_p_bracket(result: &UnitRootResult, model: BreakModel) -> &'static str {
    let cv = za_table(model);
    let s = result.statistic;
    if s < cv[0] {
        "<0.01"
    } else if s < cv[1] {
        "0.01-0.025"
    } else if s < cv[2] {
        "0.025-0.05"
    } else if s < cv[3] {
        "0.05-0.10"
    } else {
        ">0.10"
    }
}

pub fn zivot_andrews(series: &TimeSeries, opts: ZaOptions) -> Result<UnitRootResult> {
    let (y, offset) = usable_values(series, 50)?;
    let mut r = zivot_andrews_values(&y, opts)?;
    r.break_index = r.break_index.map(|b| b + offset);
    Ok(r)
}

/// Minimum over candidate break dates of the t-ratio on `y_{t−1}` in
/// `Δy_t = c + βt + γ y_{t−1} + break terms + Σ δ_j Δy_{t−j}`.
pub fn zivot_andrews_values(y: &[f64], opts: ZaOptions) -> Result<UnitRootResult> {
    check_values(y, 50)?;
    if !(opts.trim > 0.0 && opts.trim < 0.5) {
        return Err(Error::Parameter(format!(
            "trim must lie in (0, 0.5), got {}",
            opts.trim
        )));
    }
    let n = y.len();
    let extra = match opts.model {
        BreakModel::Both => 2,
        _ => 1,
    };
    let feasible = feasible_max_lags(n, 2 + extra);
    let lags = match opts.fixed_lags {
        Some(p) if p > feasible => {
            return Err(Error::Size(format!("{p} lags is too many for {n} observations")))
        }
        Some(p) => p,
        None => {
            let max = opts
                .max_lags
                .unwrap_or_else(|| default_max_lags(n, 2))
                .min(feasible);
            select_lag_aic(y, AdfTrend::ConstantTrend, max)?
        }
    };
    let (dy, x0) = adf_design(y, lags, AdfTrend::ConstantTrend, lags);
    let rows: Vec<usize> = (lags + 1..n).collect();
    let nobs = rows.len();
    let k0 = x0.ncols();
    let k = k0 + extra;

    let a00 = x0.transpose() * &x0;
    let b0 = x0.transpose() * &dy;
    let yy = dy.norm_squared();

    let lo = ((opts.trim * n as f64).ceil() as usize).max(lags + 2);
    let hi = ((1.0 - opts.trim) * n as f64).floor() as usize;
    let hi = hi.min(n - 1);
    if lo > hi {
        return Err(Error::Size("no admissible break dates after trimming".into()));
    }

    let mut best: Option<(f64, usize)> = None;
    let mut e = DMatrix::zeros(nobs, extra);
    for tb in lo..=hi {
        for (r, &t) in rows.iter().enumerate() {
            let after = t >= tb;
            let du = if after { 1.0 } else { 0.0 };
            let dt = if after {
                (t + 1 - tb) as f64 / n as f64
            } else {
                0.0
            };
            match opts.model {
                BreakModel::Intercept => e[(r, 0)] = du,
                BreakModel::Trend => e[(r, 0)] = dt,
                BreakModel::Both => {
                    e[(r, 0)] = du;
                    e[(r, 1)] = dt;
                }
            }
        }
        let Some(stat) = break_t_stat(&a00, &b0, yy, &x0, &e, &dy, nobs, k) else {
            continue;
        };
        if best.map_or(true, |(s, _)| stat < s) {
            best = Some((stat, tb));
        }
    }
    let (statistic, tb) =
        best.ok_or_else(|| Error::Degenerate("every break regression was singular".into()))?;
    let cv = za_table(opts.model);
    Ok(UnitRootResult {
        test: TestKind::ZivotAndrews,
        statistic,
        p_value: bracket_p(statistic, opts.model),
        lags,
        break_index: Some(tb),
        nobs,
        critical_values: CriticalValues {
            one: cv[0],
            five: cv[2],
            ten: cv[3],
        },
        verdict: if statistic < cv[2] {
            Verdict::StationaryWithBreak
        } else {
            Verdict::NonStationary
        },
    })
}

/// t-ratio of the first coefficient in the regression on `[x0, e]`, from the
/// bordered normal equations.
#[allow(clippy::too_many_arguments)]
fn break_t_stat(
    a00: &DMatrix<f64>,
    b0: &DVector<f64>,
    yy: f64,
    x0: &DMatrix<f64>,
    e: &DMatrix<f64>,
    dy: &DVector<f64>,
    nobs: usize,
    k: usize,
) -> Option<f64> {
    let k0 = a00.nrows();
    let x0e = x0.transpose() * e;
    let ee = e.transpose() * e;
    let mut a = DMatrix::zeros(k, k);
    a.view_mut((0, 0), (k0, k0)).copy_from(a00);
    a.view_mut((0, k0), (k0, k - k0)).copy_from(&x0e);
    a.view_mut((k0, 0), (k - k0, k0)).copy_from(&x0e.transpose());
    a.view_mut((k0, k0), (k - k0, k - k0)).copy_from(&ee);
    let mut b = DVector::zeros(k);
    b.rows_mut(0, k0).copy_from(b0);
    b.rows_mut(k0, k - k0).copy_from(&(e.transpose() * dy));

    let chol = a.cholesky()?;
    let beta = chol.solve(&b);
    let ssr = (yy - beta.dot(&b)).max(0.0);
    let mut unit = DVector::zeros(k);
    unit[0] = 1.0;
    let inv00 = chol.solve(&unit)[0];
    let s2 = ssr / (nobs - k) as f64;
    let se = (s2 * inv00).sqrt();
    let t = beta[0] / se;
    t.is_finite().then_some(t)
}

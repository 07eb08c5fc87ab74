use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::{ols, t_ratio, two_sided_p, with_intercept};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, row_major, LeastSquares, MAX_DESIGN_CONDITION};
use crate::panel::Panel;
use crate::report::{Cell, ReportTable};
use crate::stats::{bartlett_long_run_variance, newey_west_bandwidth};

/// Extra observations required beyond the factor count in the first pass.
pub const FIRST_PASS_MARGIN: usize = 10;
/// Fewest valid periods accepted by [`fm_premia`].
pub const MIN_FM_PERIODS: usize = 24;

/// First-pass factor exposures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaMatrix {
    pub assets: Vec<String>,
    /// N×K.
    #[serde(with = "row_major")]
    pub betas: DMatrix<f64>,
    pub intercepts: Vec<f64>,
    pub n_obs: Vec<usize>,
    /// Assets left out, with the reason.
    pub excluded: Vec<(String, String)>,
}

impl BetaMatrix {
    pub fn n_factors(&self) -> usize {
        self.betas.ncols()
    }
}

/// Time-series regression of each asset's excess return on an intercept and
/// the factors (rows aligned with the panel's dates). Months where an asset's
/// return is missing are dropped for that asset only.
pub fn first_pass_betas(returns: &Panel, factors: &DMatrix<f64>) -> Result<BetaMatrix> {
    let (n, k) = factors.shape();
    if n != returns.n_obs() {
        return Err(Error::Alignment(format!(
            "{n} factor rows for {} return periods",
            returns.n_obs()
        )));
    }
    if k == 0 {
        return Err(Error::Size("need at least one factor".into()));
    }
    let design = with_intercept(factors);
    let cond = condition_number(&design);
    if !(cond < MAX_DESIGN_CONDITION) {
        return Err(Error::SingularDesign(format!(
            "factor design condition number {cond:.3e} exceeds {MAX_DESIGN_CONDITION:.0e}"
        )));
    }

    let mut assets = Vec::new();
    let mut rows = Vec::new();
    let mut intercepts = Vec::new();
    let mut n_obs = Vec::new();
    let mut excluded = Vec::new();
    for col in returns.columns() {
        let t_ok: Vec<usize> = (0..n)
            .filter(|&t| col.values()[t].is_some() && factors.row(t).iter().all(|v| v.is_finite()))
            .collect();
        if t_ok.len() < k + FIRST_PASS_MARGIN {
            excluded.push((
                col.name().to_string(),
                format!("{} observations, need {}", t_ok.len(), k + FIRST_PASS_MARGIN),
            ));
            continue;
        }
        let y = DVector::from_iterator(t_ok.len(), t_ok.iter().map(|&t| col.values()[t].unwrap()));
        let x = design.select_rows(t_ok.iter());
        match LeastSquares::fit(&y, &x) {
            Ok(fit) => {
                assets.push(col.name().to_string());
                intercepts.push(fit.coefficients[0]);
                rows.push(fit.coefficients.rows(1, k).transpose());
                n_obs.push(t_ok.len());
            }
            Err(e) => excluded.push((col.name().to_string(), e.to_string())),
        }
    }
    if assets.is_empty() {
        return Err(Error::Size(
            "no asset has enough observations for the first pass".into(),
        ));
    }
    Ok(BetaMatrix {
        assets,
        betas: DMatrix::from_rows(&rows),
        intercepts,
        n_obs,
        excluded,
    })
}

/// Per-period cross-sectional estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondPass {
    /// Panel row of each valid period.
    pub periods: Vec<usize>,
    /// `(λ_{0,t}, λ_t')` per valid period, T_valid × (K+1).
    #[serde(with = "row_major")]
    pub lambdas: DMatrix<f64>,
    pub r_squared: Vec<f64>,
    /// Pricing errors `u_{i,t}`, T_valid × N with `NaN` for absent assets.
    #[serde(with = "row_major")]
    pub residuals: DMatrix<f64>,
    /// Asset-periods used.
    pub n_total: usize,
    /// Skipped panel rows and why.
    pub skipped: Vec<(usize, String)>,
}

/// Cross-sectional regression, each period, of the available assets' excess
/// returns on an intercept and their first-pass betas.
pub fn second_pass(returns: &Panel, betas: &BetaMatrix) -> Result<SecondPass> {
    let k = betas.n_factors();
    let cols: Vec<_> = betas
        .assets
        .iter()
        .map(|a| {
            returns
                .column(a)
                .ok_or_else(|| Error::Consistency(format!("asset `{a}` is not in the return panel")))
        })
        .collect::<Result<_>>()?;
    let design = with_intercept(&betas.betas);

    let mut periods = Vec::new();
    let mut lambdas = Vec::new();
    let mut r_squared = Vec::new();
    let mut residuals = Vec::new();
    let mut skipped = Vec::new();
    let mut n_total = 0;
    for t in 0..returns.n_obs() {
        let present: Vec<usize> = (0..cols.len())
            .filter(|&i| cols[i].values()[t].is_some())
            .collect();
        if present.len() < k + 2 {
            skipped.push((t, format!("{} assets present, need {}", present.len(), k + 2)));
            continue;
        }
        let y = DVector::from_iterator(
            present.len(),
            present.iter().map(|&i| cols[i].values()[t].unwrap()),
        );
        let x = design.select_rows(present.iter());
        match ols(&y, &x) {
            Ok(r) => {
                let coef = DVector::from_vec(r.coefficients.clone());
                let fitted = &x * &coef;
                let mut u = DVector::from_element(cols.len(), f64::NAN);
                for (j, &i) in present.iter().enumerate() {
                    u[i] = y[j] - fitted[j];
                }
                periods.push(t);
                lambdas.push(coef.transpose());
                r_squared.push(r.r_squared);
                residuals.push(u.transpose());
                n_total += present.len();
            }
            Err(e) => skipped.push((t, e.to_string())),
        }
    }
    let lambdas = if lambdas.is_empty() {
        DMatrix::zeros(0, k + 1)
    } else {
        DMatrix::from_rows(&lambdas)
    };
    let residuals = if residuals.is_empty() {
        DMatrix::zeros(0, cols.len())
    } else {
        DMatrix::from_rows(&residuals)
    };
    Ok(SecondPass {
        periods,
        lambdas,
        r_squared,
        residuals,
        n_total,
        skipped,
    })
}

/// Newey–West standard error of the mean of `x` with a Bartlett kernel. The
/// `T/(T−1)` factor makes zero lags coincide with the classical `s/√T`.
pub fn newey_west_se(x: &[f64], lags: usize) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let lrv = bartlett_long_run_variance(&d, lags) * n as f64 / (n - 1) as f64;
    (lrv.max(0.0) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmResult {
    /// `λ̄`, intercept first.
    pub lambda_bar: Vec<f64>,
    #[serde(with = "row_major")]
    pub lambdas: DMatrix<f64>,
    pub hac_se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub hac_lags: usize,
    /// Mean of the per-period cross-sectional R².
    pub avg_r_squared: f64,
    /// R² of average excess returns on betas, when computed.
    pub pricing_r_squared: Option<f64>,
    pub n_periods: usize,
    pub n_total: usize,
}

impl FmResult {
    pub fn n_factors(&self) -> usize {
        self.lambda_bar.len() - 1
    }
}

/// Time-series averages of the per-period estimates with Newey–West
/// standard errors; `hac_lags` defaults to `⌊4·(T/100)^{2/9}⌋`.
pub fn fm_premia(second: &SecondPass, hac_lags: Option<usize>) -> Result<FmResult> {
    let (n, p) = second.lambdas.shape();
    if n < MIN_FM_PERIODS {
        return Err(Error::Size(format!("{n} valid periods, need {MIN_FM_PERIODS}")));
    }
    let lags = hac_lags.unwrap_or_else(|| newey_west_bandwidth(n));
    let mut lambda_bar = Vec::with_capacity(p);
    let mut hac_se = Vec::with_capacity(p);
    for j in 0..p {
        let col: Vec<f64> = second.lambdas.column(j).iter().copied().collect();
        lambda_bar.push(col.iter().sum::<f64>() / n as f64);
        hac_se.push(newey_west_se(&col, lags));
    }
    let t_stats: Vec<f64> = lambda_bar
        .iter()
        .zip(&hac_se)
        .map(|(&b, &s)| t_ratio(b, s))
        .collect();
    let p_values = t_stats.iter().map(|&t| two_sided_p(t, (n - 1) as f64)).collect();
    Ok(FmResult {
        lambda_bar,
        lambdas: second.lambdas.clone(),
        hac_se,
        t_stats,
        p_values,
        hac_lags: lags,
        avg_r_squared: second.r_squared.iter().sum::<f64>() / n as f64,
        pricing_r_squared: None,
        n_periods: n,
        n_total: second.n_total,
    })
}

/// Both passes and the premia, plus the R² of average returns on betas.
pub fn fama_macbeth(
    returns: &Panel,
    factors: &DMatrix<f64>,
    hac_lags: Option<usize>,
) -> Result<(BetaMatrix, SecondPass, FmResult)> {
    let betas = first_pass_betas(returns, factors)?;
    let second = second_pass(returns, &betas)?;
    let mut fm = fm_premia(&second, hac_lags)?;
    let avg: Vec<f64> = betas
        .assets
        .iter()
        .map(|a| {
            returns
                .column(a)
                .map(|c| crate::stats::mean(&c.observed()))
                .unwrap_or(f64::NAN)
        })
        .collect();
    fm.pricing_r_squared = ols(&DVector::from_vec(avg), &with_intercept(&betas.betas))
        .ok()
        .map(|r| r.r_squared);
    Ok((betas, second, fm))
}

/// Fama–MacBeth results side by side, one column per specification, with
/// `coef(se)` cells.
pub fn fm_table(results: &[(usize, &FmResult)]) -> ReportTable {
    let mut headers = vec!["Variables".to_string()];
    headers.extend(results.iter().map(|(k, _)| format!("K={k}")));
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut t = ReportTable::new("Fama-MacBeth Regression Results", &header_refs);

    let row = |label: &str, f: &dyn Fn(&FmResult) -> Cell| {
        let mut r = vec![Cell::text(label)];
        r.extend(results.iter().map(|(_, fm)| f(fm)));
        r
    };
    let coef = |j: usize| {
        move |fm: &FmResult| {
            if j < fm.lambda_bar.len() {
                Cell::CoefSe {
                    coef: fm.lambda_bar[j],
                    se: fm.hac_se[j],
                    decimals: 4,
                }
            } else {
                Cell::Missing
            }
        }
    };
    t.push_row(row("Observations", &|fm| Cell::Int(fm.n_total as i64)));
    t.push_row(row("Intercept", &coef(0)));
    let kmax = results.iter().map(|(_, fm)| fm.n_factors()).max().unwrap_or(0);
    for j in 1..=kmax {
        t.push_row(row(&format!("Factor {j}"), &coef(j)));
    }
    t.push_row(row("R²", &|fm| Cell::fixed(fm.avg_r_squared, 3)));
    t.push_row(row("R² (average returns on betas)", &|fm| {
        Cell::opt_fixed(fm.pricing_r_squared, 3)
    }));
    t.push_note("Standard errors (in parentheses) are Newey–West HAC.");
    t.push_note("R² is the time-series average of per-period cross-sectional R².");
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Month;

    fn panel_from(data: &DMatrix<f64>) -> Panel {
        let names: Vec<String> = (0..data.ncols()).map(|i| format!("a{i}")).collect();
        Panel::from_matrix(&names, Month::new(2000, 1).unwrap(), data).unwrap()
    }

    fn factors(n: usize, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, k, |t, j| ((t * (j + 3)) as f64 * 0.37).sin() + 0.1 * j as f64)
    }

    #[test]
    fn noiseless_first_pass_recovers_betas() {
        let f = factors(80, 2);
        let b = DMatrix::from_row_slice(3, 2, &[0.5, 1.0, -0.3, 0.8, 1.2, 0.0]);
        let r = (&f * b.transpose()).add_scalar(0.001);
        let bm = first_pass_betas(&panel_from(&r), &f).unwrap();
        assert!((&bm.betas - &b).amax() < 1e-10);
        assert!(bm.intercepts.iter().all(|a| (a - 0.001).abs() < 1e-10));
    }

    #[test]
    fn zero_factors_are_singular() {
        let r = DMatrix::from_fn(40, 3, |t, i| (t + i) as f64);
        assert!(matches!(
            first_pass_betas(&panel_from(&r), &DMatrix::zeros(40, 2)),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn demeaning_factors_leaves_betas() {
        let f = factors(60, 2);
        let r = DMatrix::from_fn(60, 4, |t, i| ((t * (i + 1)) as f64).cos() * 0.1);
        let mut fd = f.clone();
        for j in 0..2 {
            let m = fd.column(j).mean();
            fd.column_mut(j).add_scalar_mut(-m);
        }
        let a = first_pass_betas(&panel_from(&r), &f).unwrap();
        let b = first_pass_betas(&panel_from(&r), &fd).unwrap();
        assert!((&a.betas - &b.betas).amax() < 1e-10);
    }

    #[test]
    fn exact_pricing_recovers_premia() {
        let n = 40;
        let betas = DMatrix::from_row_slice(5, 2, &[0.5, 1.0, -0.3, 0.8, 1.2, 0.0, 0.7, 0.7, 0.1, -0.4]);
        let lambda = [0.02, 0.3, 0.17];
        let r = DMatrix::from_fn(n, 5, |_, i| {
            lambda[0] + betas[(i, 0)] * lambda[1] + betas[(i, 1)] * lambda[2]
        });
        let bm = BetaMatrix {
            assets: (0..5).map(|i| format!("a{i}")).collect(),
            betas,
            intercepts: vec![0.0; 5],
            n_obs: vec![n; 5],
            excluded: vec![],
        };
        let sp = second_pass(&panel_from(&r), &bm).unwrap();
        for row in sp.lambdas.row_iter() {
            for j in 0..3 {
                assert!((row[j] - lambda[j]).abs() < 1e-10);
            }
        }
        assert!(sp.r_squared.iter().all(|&r| (r - 1.0).abs() < 1e-10));
        assert!(sp.residuals.iter().all(|u| u.abs() < 1e-10));
    }

    #[test]
    fn thin_periods_are_skipped() {
        let mut r = DMatrix::from_fn(30, 4, |t, i| ((t + 2 * i) as f64).sin());
        for i in 1..4 {
            r[(5, i)] = f64::NAN;
        }
        let bm = BetaMatrix {
            assets: (0..4).map(|i| format!("a{i}")).collect(),
            betas: DMatrix::from_row_slice(4, 1, &[0.2, 0.5, 0.9, 1.4]),
            intercepts: vec![0.0; 4],
            n_obs: vec![30; 4],
            excluded: vec![],
        };
        let sp = second_pass(&panel_from(&r), &bm).unwrap();
        assert_eq!(sp.skipped.len(), 1);
        assert_eq!(sp.skipped[0].0, 5);
        assert_eq!(sp.n_total, 29 * 4);
        assert_eq!(sp.periods.len(), 29);
    }

    #[test]
    fn premia_are_period_means() {
        let lambdas = DMatrix::from_fn(30, 2, |t, j| ((t * 7 + j) % 11) as f64 * 0.01);
        let sp = SecondPass {
            periods: (0..30).collect(),
            lambdas: lambdas.clone(),
            r_squared: vec![0.5; 30],
            residuals: DMatrix::zeros(30, 3),
            n_total: 90,
            skipped: vec![],
        };
        let fm = fm_premia(&sp, None).unwrap();
        for j in 0..2 {
            assert!((fm.lambda_bar[j] - lambdas.column(j).mean()).abs() < 1e-12);
        }
        assert_eq!(fm.hac_lags, 3);
        assert_eq!(fm.avg_r_squared, 0.5);

        let short = SecondPass {
            lambdas: lambdas.rows(0, 10).into_owned(),
            ..sp
        };
        assert!(matches!(fm_premia(&short, None), Err(Error::Size(_))));
    }

    #[test]
    fn constant_premia_have_zero_se() {
        let x = vec![0.25; 50];
        assert_eq!(newey_west_se(&x, 4), 0.0);
    }

    #[test]
    fn zero_lag_hac_is_classical() {
        let x: Vec<f64> = (0..77).map(|i| ((i * i) as f64 * 0.1).sin()).collect();
        let sd = crate::stats::sample_sd(&x).unwrap();
        assert!((newey_west_se(&x, 0) - sd / (77f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn table_layout() {
        let sp = SecondPass {
            periods: (0..30).collect(),
            lambdas: DMatrix::from_fn(30, 3, |t, j| (t + j) as f64 * 0.001),
            r_squared: vec![0.2; 30],
            residuals: DMatrix::zeros(30, 3),
            n_total: 300,
            skipped: vec![],
        };
        let fm2 = fm_premia(&sp, Some(0)).unwrap();
        let t = fm_table(&[(2, &fm2)]);
        assert_eq!(t.columns, vec!["Variables", "K=2"]);
        assert_eq!(t.cell(0, "K=2"), Some(&Cell::Int(300)));
        assert!(t.to_text().contains("Factor 2"));
    }
}

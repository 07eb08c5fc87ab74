use std::collections::BTreeMap;

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::capm::CapmRow;
use super::fama_macbeth::FmResult;
use crate::dfm::DfmFit;
use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::panel::TimeSeries;
use crate::report::{Cell, ReportTable};

/// Stability label for a condition number.
pub fn stability_label(condition: f64) -> &'static str {
    if condition < 1e6 {
        "Stable"
    } else if condition < 1e12 {
        "Moderate instability"
    } else {
        "Unstable"
    }
}

fn significance_label(n_sig: usize, n: usize) -> String {
    let word = if n_sig == 0 {
        "None significant"
    } else if n_sig == n {
        "All significant"
    } else if 2 * n_sig > n {
        "Most significant"
    } else {
        "Some significant"
    };
    format!("{word} ({n_sig}/{n})")
}

/// Condition number of the CAPM design `[1, market]` over the market's observed months.
pub fn capm_design_condition(market: &TimeSeries) -> f64 {
    let obs = market.observed();
    let x = DMatrix::from_fn(obs.len(), 2, |t, j| if j == 0 { 1.0 } else { obs[t] });
    condition_number(&x)
}

/// One row for CAPM and one per factor count: average R², how many premia
/// (or betas) are significant at level `alpha`, and a stability label.
pub fn model_comparison(
    capm: &[CapmRow],
    capm_condition: f64,
    fm: &BTreeMap<usize, FmResult>,
    fits: &BTreeMap<usize, DfmFit>,
    alpha: f64,
) -> Result<ReportTable> {
    if fm.is_empty() {
        return Err(Error::Parameter(
            "model comparison needs at least one Fama–MacBeth result".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let mut t = ReportTable::new(
        "Relative Performance of CAPM and Dynamic Factor Models",
        &[
            "Model",
            "Factors",
            "Avg. R²",
            "Significant Factors",
            "Stability",
            "Interpretation",
        ],
    );

    let fitted: Vec<_> = capm.iter().filter_map(|r| r.result.as_ref()).collect();
    if !fitted.is_empty() {
        let avg = fitted.iter().map(|r| r.r_squared).sum::<f64>() / fitted.len() as f64;
        let n_sig = fitted.iter().filter(|r| r.t_stats[1].abs() > z).count();
        let sig = if n_sig == fitted.len() {
            "Beta significant in all cases".to_string()
        } else {
            format!("Beta significant in {n_sig} of {} cases", fitted.len())
        };
        t.push_row(vec![
            Cell::text("CAPM"),
            Cell::text("1 (Market)"),
            Cell::fixed(avg, 3),
            Cell::text(sig),
            Cell::text(stability_label(capm_condition)),
            Cell::text(""),
        ]);
    }
    for (&k, res) in fm {
        let n_sig = res.t_stats[1..].iter().filter(|t| t.abs() > z).count();
        let stability = fits
            .get(&k)
            .map_or(Cell::Missing, |f| Cell::text(stability_label(f.condition_number)));
        t.push_row(vec![
            Cell::text(format!("DFM (k={k})")),
            Cell::text(format!("{k} latent factors")),
            Cell::fixed(res.avg_r_squared, 3),
            Cell::text(significance_label(n_sig, res.n_factors())),
            stability,
            Cell::text(""),
        ]);
    }
    t.push_note(format!("Significance: |t| > {z:.2}. Stability: condition number < 1e6 Stable, < 1e12 Moderate instability, otherwise Unstable."));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(t_stats: Vec<f64>, r2: f64) -> FmResult {
        let p = t_stats.len();
        FmResult {
            lambda_bar: vec![0.1; p],
            lambdas: DMatrix::zeros(30, p),
            hac_se: vec![0.1; p],
            t_stats,
            p_values: vec![0.5; p],
            hac_lags: 3,
            avg_r_squared: r2,
            pricing_r_squared: None,
            n_periods: 30,
            n_total: 300,
        }
    }

    #[test]
    fn labels_follow_thresholds() {
        assert_eq!(stability_label(10.0), "Stable");
        assert_eq!(stability_label(1e8), "Moderate instability");
        assert_eq!(stability_label(1e20), "Unstable");
        assert_eq!(stability_label(f64::INFINITY), "Unstable");
    }

    #[test]
    fn rows_mirror_significance() {
        let mut map = BTreeMap::new();
        map.insert(3, fm(vec![1.0, 0.5, 0.2, -1.1], 0.016));
        map.insert(4, fm(vec![1.0, 7.6, 9.7, 8.4, 10.4], 0.220));
        let t = model_comparison(&[], 1.0, &map, &BTreeMap::new(), 0.05).unwrap();
        assert_eq!(t.rows.len(), 2);
        let sig = |r: usize| t.rows[r][3].clone();
        assert_eq!(sig(0), Cell::text("None significant (0/3)"));
        assert_eq!(sig(1), Cell::text("All significant (4/4)"));
        assert_eq!(t.cell(0, "Avg. R²"), Some(&Cell::fixed(0.016, 3)));
    }

    #[test]
    fn empty_fm_map_is_an_error() {
        assert!(model_comparison(&[], 1.0, &BTreeMap::new(), &BTreeMap::new(), 0.05).is_err());
    }
}

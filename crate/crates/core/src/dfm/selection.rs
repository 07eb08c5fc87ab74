use super::DfmFit;
use crate::report::{Cell, ReportTable};

/// AIC, BIC and condition number for each fitted factor count, in the order given.
pub fn selection_table(fits: &[&DfmFit]) -> ReportTable {
    let mut t = ReportTable::new(
        "Comparison of AIC and BIC across Factor Specifications",
        &["No of factor(K)", "AIC", "BIC", "Condition Number"],
    );
    for f in fits {
        t.push_row(vec![
            Cell::Int(f.k as i64),
            Cell::fixed(f.aic, 0),
            Cell::fixed(f.bic, 0),
            Cell::sci(f.condition_number, 1),
        ]);
        if !f.converged {
            t.push_note(format!(
                "K={}: EM stopped after {} iterations without converging",
                f.k, f.iterations
            ));
        }
    }
    t.push_note("Condition number of the model-implied covariance of the observed panel.");
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfm::fit_mle_data;
    use nalgebra::DMatrix;

    #[test]
    fn one_row_per_fit() {
        let data = DMatrix::from_fn(60, 4, |t, i| ((t * (i + 2)) as f64 * 0.37).sin() + 0.1 * i as f64);
        let a = fit_mle_data(&data, 1, Default::default()).unwrap();
        let b = fit_mle_data(&data, 2, Default::default()).unwrap();
        let t = selection_table(&[&a, &b]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.cell(1, "No of factor(K)"), Some(&Cell::Int(2)));
        assert_eq!(t.cell(0, "AIC"), Some(&Cell::fixed(a.aic, 0)));
        assert!(t.to_text().contains("e+"));
    }
}

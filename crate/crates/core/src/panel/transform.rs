//! Stationarity-inducing transforms. Missing values propagate; nothing is imputed.

use serde::{Deserialize, Serialize};

use super::series::{Month, TimeSeries};
use crate::error::{Error, Result};

/// Transform recorded as provenance in panel sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    LogDiff { scale: f64 },
    FirstDiff,
    ExcessReturn { yield_series: String },
    None,
}

/// `scale · (ln v[t] − ln v[t−1])`.
pub fn log_diff(series: &TimeSeries, scale: f64) -> Result<TimeSeries> {
    if !(scale > 0.0) {
        return Err(Error::Parameter(format!(
            "log_diff scale must be positive, got {scale}"
        )));
    }
    if series.len() < 2 {
        return Err(Error::Size(format!(
            "log_diff of `{}` needs at least 2 observations",
            series.name()
        )));
    }
    let logs = positive_logs(series)?;
    let values = logs
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(scale * (b - a)),
            _ => None,
        })
        .collect();
    TimeSeries::new(series.name(), series.dates()[1..].to_vec(), values)
}

/// `v[t] − v[t−1]`.
pub fn first_diff(series: &TimeSeries) -> Result<TimeSeries> {
    if series.len() < 2 {
        return Err(Error::Size(format!(
            "first_diff of `{}` needs at least 2 observations",
            series.name()
        )));
    }
    let values = series
        .values()
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect();
    TimeSeries::new(series.name(), series.dates()[1..].to_vec(), values)
}

/// Log excess return of an index over the monthly risk-free rate implied by an
/// annualized percentage yield: `ln(P_t / P_{t−1}) − ln(1 + y_t / 1200)`.
pub fn excess_return(index: &TimeSeries, annual_yield_pct: &TimeSeries) -> Result<TimeSeries> {
    if index.dates() != annual_yield_pct.dates() {
        return Err(Error::Alignment(format!(
            "index `{}` and yield `{}` do not share a timestamp axis",
            index.name(),
            annual_yield_pct.name()
        )));
    }
    let log_ret = log_diff(index, 1.0)?;
    let values = log_ret
        .values()
        .iter()
        .zip(&annual_yield_pct.values()[1..])
        .zip(&index.dates()[1..])
        .map(|((r, y), d)| match (r, y) {
            (Some(r), Some(y)) => {
                let gross = 1.0 + y / 1200.0;
                if gross <= 0.0 {
                    Err(Error::Domain {
                        series: annual_yield_pct.name().to_string(),
                        date: d.to_string(),
                        message: format!("yield {y} implies non-positive gross risk-free return"),
                    })
                } else {
                    Ok(Some(r - gross.ln()))
                }
            }
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(index.name(), log_ret.dates().to_vec(), values)
}

/// Inverse of [`log_diff`] given the level preceding the first difference.
pub fn integrate_log_diff(diffs: &TimeSeries, initial: f64, scale: f64) -> Result<TimeSeries> {
    let first = diffs
        .first_date()
        .ok_or_else(|| Error::Size("cannot integrate an empty series".into()))?;
    let mut level = Some(initial);
    let mut values = vec![level];
    for d in diffs.values() {
        level = match (level, d) {
            (Some(l), Some(d)) => Some(l * (d / scale).exp()),
            _ => None,
        };
        values.push(level);
    }
    let start = Month::from_ordinal(first.ordinal() - 1);
    let dates = (0..values.len() as i64).map(|i| start.plus(i)).collect();
    TimeSeries::new(diffs.name(), dates, values)
}

/// Inverse of [`first_diff`] given the level preceding the first difference.
pub fn integrate_first_diff(diffs: &TimeSeries, initial: f64) -> Result<TimeSeries> {
    let first = diffs
        .first_date()
        .ok_or_else(|| Error::Size("cannot integrate an empty series".into()))?;
    let mut level = Some(initial);
    let mut values = vec![level];
    for d in diffs.values() {
        level = match (level, d) {
            (Some(l), Some(d)) => Some(l + d),
            _ => None,
        };
        values.push(level);
    }
    let start = Month::from_ordinal(first.ordinal() - 1);
    let dates = (0..values.len() as i64).map(|i| start.plus(i)).collect();
    TimeSeries::new(diffs.name(), dates, values)
}

fn positive_logs(series: &TimeSeries) -> Result<Vec<Option<f64>>> {
    series
        .values()
        .iter()
        .zip(series.dates())
        .map(|(v, d)| match v {
            Some(v) if *v > 0.0 => Ok(Some(v.ln())),
            Some(v) => Err(Error::Domain {
                series: series.name().to_string(),
                date: d.to_string(),
                message: format!("logarithm of non-positive value {v}"),
            }),
            None => Ok(None),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn start() -> Month {
        Month::new(2000, 1).unwrap()
    }

    fn series(v: &[f64]) -> TimeSeries {
        TimeSeries::from_values("s", start(), v).unwrap()
    }

    fn with_missing(v: &[Option<f64>]) -> TimeSeries {
        let dates = (0..v.len() as i64).map(|i| start().plus(i)).collect();
        TimeSeries::new("s", dates, v.to_vec()).unwrap()
    }

    #[test]
    fn log_diff_of_constant_is_zero() {
        let out = log_diff(&series(&[5.0, 5.0, 5.0]), 100.0).unwrap();
        assert_eq!(out.values(), &[Some(0.0), Some(0.0)]);
        assert_eq!(out.first_date(), Some(start().succ()));
    }

    #[test]
    fn log_diff_hand_value() {
        let out = log_diff(&series(&[100.0, 110.0]), 100.0).unwrap();
        let v = out.values()[0].unwrap();
        assert!((v - 9.531017980432493).abs() < 1e-12);
    }

    #[test]
    fn log_diff_rejects_zero() {
        let err = log_diff(&series(&[1.0, 0.0, 2.0]), 100.0).unwrap_err();
        match err {
            Error::Domain { series, date, .. } => {
                assert_eq!(series, "s");
                assert_eq!(date, "2000-02-29");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn first_diff_examples() {
        assert_eq!(
            first_diff(&series(&[1.0, 1.0, 1.0])).unwrap().values(),
            &[Some(0.0), Some(0.0)]
        );
        let d = first_diff(&series(&[0.50, 0.75, 0.25])).unwrap();
        assert_eq!(d.values(), &[Some(0.25), Some(-0.5)]);
        let d = first_diff(&with_missing(&[Some(1.0), None, Some(3.0)])).unwrap();
        assert_eq!(d.values(), &[None, None]);
        assert!(matches!(first_diff(&series(&[1.0])), Err(Error::Size(_))));
    }

    #[test]
    fn excess_return_examples() {
        let flat = excess_return(&series(&[100.0, 100.0]), &series(&[0.0, 0.0])).unwrap();
        assert_eq!(flat.values(), &[Some(0.0)]);

        let r = excess_return(&series(&[100.0, 105.0]), &series(&[12.0, 12.0])).unwrap();
        let expected = 1.05_f64.ln() - 1.01_f64.ln();
        assert!((r.values()[0].unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.03883983).abs() < 1e-8);

        let r = excess_return(&series(&[100.0, 100.0]), &series(&[12.0, 12.0])).unwrap();
        assert!((r.values()[0].unwrap() + 0.00995033).abs() < 1e-8);
    }

    #[test]
    fn excess_return_requires_alignment() {
        let y = TimeSeries::from_values("y", start().succ(), &[1.0, 1.0]).unwrap();
        assert!(matches!(
            excess_return(&series(&[1.0, 2.0]), &y),
            Err(Error::Alignment(_))
        ));
    }

    proptest! {
        #[test]
        fn log_diff_integrates_back(levels in prop::collection::vec(0.01f64..1e4, 2..60)) {
            let s = series(&levels);
            let d = log_diff(&s, 100.0).unwrap();
            let back = integrate_log_diff(&d, levels[0], 100.0).unwrap();
            prop_assert_eq!(back.dates(), s.dates());
            for (a, b) in back.values().iter().zip(&levels) {
                let a = a.unwrap();
                prop_assert!(((a - b) / b).abs() < 1e-10);
            }
        }

        #[test]
        fn zero_yield_excess_equals_log_return(levels in prop::collection::vec(0.01f64..1e4, 2..40)) {
            let s = series(&levels);
            let zero = series(&vec![0.0; levels.len()]);
            let ex = excess_return(&s, &zero).unwrap();
            let lr = log_diff(&s, 1.0).unwrap();
            prop_assert_eq!(ex.values(), lr.values());
        }

        #[test]
        fn diffs_at_most_double_missing(
            raw in prop::collection::vec(prop::option::weighted(0.8, 0.1f64..100.0), 2..50)
        ) {
            let s = with_missing(&raw);
            let k = s.missing_count();
            let fd = first_diff(&s).unwrap();
            let ld = log_diff(&s, 100.0).unwrap();
            prop_assert!(fd.missing_count() <= 2 * k);
            prop_assert!(ld.missing_count() <= 2 * k);
            prop_assert_eq!(fd.missing_mask(), ld.missing_mask());
        }
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::zivot_andrews::za_p_bracket;
use super::{adf_test, kpss_test, zivot_andrews};
use super::{AdfOptions, KpssTrend, UnitRootResult, Verdict, ZaOptions};
use crate::panel::{Panel, TimeSeries};
use crate::report::{Cell, ReportTable};

/// When to fall back to the Zivot–Andrews test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZaTrigger {
    /// Whenever ADF fails to reject a unit root at 5%.
    #[default]
    AdfUnitRoot,
    /// Only when ADF and KPSS reach opposite verdicts.
    Disagreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    pub adf: AdfOptions,
    pub kpss: KpssTrend,
    pub za: ZaOptions,
    pub trigger: ZaTrigger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub series: String,
    pub adf: Option<UnitRootResult>,
    pub kpss: Option<UnitRootResult>,
    pub zivot_andrews: Option<UnitRootResult>,
    pub conclusion: Option<Verdict>,
    pub error: Option<String>,
}

impl StationarityRow {
    fn run(series: &TimeSeries, opts: &PipelineOptions) -> Self {
        let mut row = StationarityRow {
            series: series.name().to_string(),
            adf: None,
            kpss: None,
            zivot_andrews: None,
            conclusion: None,
            error: None,
        };
        let (adf, kpss) = match (adf_test(series, opts.adf), kpss_test(series, opts.kpss)) {
            (Ok(a), Ok(k)) => (a, k),
            (Err(e), _) | (_, Err(e)) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        let adf_stationary = adf.verdict == Verdict::Stationary;
        let kpss_stationary = kpss.verdict == Verdict::Stationary;
        let needs_za = match opts.trigger {
            ZaTrigger::AdfUnitRoot => !adf_stationary,
            ZaTrigger::Disagreement => adf_stationary != kpss_stationary,
        };
        row.conclusion = Some(adf.verdict);
        row.adf = Some(adf);
        row.kpss = Some(kpss);
        if needs_za {
            match zivot_andrews(series, opts.za) {
                Ok(za) => {
                    row.conclusion = Some(za.verdict);
                    row.zivot_andrews = Some(za);
                }
                Err(e) => {
                    row.conclusion = None;
                    row.error = Some(e.to_string());
                }
            }
        }
        row
    }
}

/// ADF and KPSS on every column, with Zivot–Andrews where `opts.trigger` asks
/// for it. Column failures are recorded in the row rather than returned.
pub fn stationarity_pipeline(panel: &Panel, opts: &PipelineOptions) -> Vec<StationarityRow> {
    stationarity_rows(panel.columns(), opts)
}

/// As [`stationarity_pipeline`] for series that need not share a date axis.
pub fn stationarity_rows(series: &[TimeSeries], opts: &PipelineOptions) -> Vec<StationarityRow> {
    series.par_iter().map(|c| StationarityRow::run(c, opts)).collect()
}

impl StationarityRow {
    pub fn table(rows: &[StationarityRow], model: super::BreakModel) -> ReportTable {
        let mut t = ReportTable::new(
            "Unit Root Test Results",
            &[
                "Series",
                "ADF p-value",
                "KPSS p-value",
                "Zivot–Andrews Statistic",
                "Zivot–Andrews p-value",
                "Conclusion",
            ],
        );
        for r in rows {
            let p =
                |x: &Option<UnitRootResult>| x.as_ref().map_or(Cell::Missing, |u| Cell::fixed(u.p_value, 4));
            let (za_stat, za_p) = match &r.zivot_andrews {
                Some(z) => (Cell::fixed(z.statistic, 3), Cell::text(za_p_bracket(z, model))),
                None => (Cell::Missing, Cell::Missing),
            };
            let conclusion = match (&r.conclusion, &r.error) {
                (_, Some(e)) => format!("error: {e}"),
                (Some(v), None) => v.label().to_string(),
                (None, None) => String::new(),
            };
            t.push_row(vec![
                Cell::text(&r.series),
                p(&r.adf),
                p(&r.kpss),
                za_stat,
                za_p,
                Cell::text(conclusion),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Month;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn series(name: &str, v: &[f64]) -> TimeSeries {
        TimeSeries::from_values(name, Month::new(2000, 1).unwrap(), v).unwrap()
    }

    #[test]
    fn all_stationary_panel_never_runs_za() {
        let cols = (0..4).map(|i| series(&format!("c{i}"), &noise(i, 300))).collect();
        let panel = Panel::new(cols).unwrap();
        let rows = stationarity_pipeline(&panel, &PipelineOptions::default());
        assert!(rows.iter().all(|r| r.zivot_andrews.is_none()));
        assert!(rows.iter().all(|r| r.conclusion == Some(Verdict::Stationary)));
        let t = StationarityRow::table(&rows, Default::default());
        assert_eq!(t.cell(0, "Zivot–Andrews Statistic"), Some(&Cell::Missing));
        assert!(t.to_text().contains("–"));
    }

    #[test]
    fn unit_root_column_triggers_za_and_errors_are_captured() {
        let w: Vec<f64> = noise(9, 300)
            .iter()
            .scan(0.0, |a, e| {
                *a += e;
                Some(*a)
            })
            .collect();
        let panel = Panel::new(vec![series("walk", &w), series("flat", &[1.0; 300])]).unwrap();
        let rows = stationarity_pipeline(&panel, &PipelineOptions::default());
        assert!(rows[0].zivot_andrews.is_some());
        assert!(rows[1].error.as_deref().unwrap().contains("constant"));
        assert_eq!(rows[1].conclusion, None);
    }

    #[test]
    fn parallel_matches_sequential() {
        let cols: Vec<TimeSeries> = (0..6)
            .map(|i| series(&format!("c{i}"), &noise(100 + i, 200)))
            .collect();
        let panel = Panel::new(cols.clone()).unwrap();
        let opts = PipelineOptions::default();
        let par = stationarity_pipeline(&panel, &opts);
        let seq: Vec<_> = cols.iter().map(|c| StationarityRow::run(c, &opts)).collect();
        assert_eq!(
            serde_json::to_string(&par).unwrap(),
            serde_json::to_string(&seq).unwrap()
        );
    }
}

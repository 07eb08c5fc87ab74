use serde::{Deserialize, Serialize};

use super::series::{Month, TimeSeries};
use super::Panel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    /// Overlap of all date ranges; gaps inside it become missing.
    #[default]
    Intersection,
    /// Earliest start to latest end.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignOptions {
    pub max_missing_fraction: f64,
    pub mode: AlignMode,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            max_missing_fraction: 0.30,
            mode: AlignMode::Intersection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub panel: Panel,
    pub dropped: Vec<DroppedColumn>,
}

/// Put `series` on a common monthly axis and drop columns that are missing
/// more than `max_missing_fraction` of the axis. Column order follows input order.
pub fn align_and_assemble(series: &[TimeSeries], opts: AlignOptions) -> Result<Assembled> {
    if !(0.0..1.0).contains(&opts.max_missing_fraction) {
        return Err(Error::Parameter(format!(
            "max_missing_fraction must lie in [0, 1), got {}",
            opts.max_missing_fraction
        )));
    }
    let ranges: Vec<(Month, Month)> = series
        .iter()
        .filter_map(|s| Some((s.first_date()?, s.last_date()?)))
        .collect();
    if ranges.is_empty() {
        return Err(Error::Assembly("no non-empty series to assemble".into()));
    }
    let (start, end) = match opts.mode {
        AlignMode::Intersection => (
            ranges.iter().map(|r| r.0).max().unwrap(),
            ranges.iter().map(|r| r.1).min().unwrap(),
        ),
        AlignMode::Union => (
            ranges.iter().map(|r| r.0).min().unwrap(),
            ranges.iter().map(|r| r.1).max().unwrap(),
        ),
    };
    if start > end || series.iter().any(TimeSeries::is_empty) {
        return Err(Error::Assembly(format!(
            "date ranges do not overlap (latest start {start}, earliest end {end})"
        )));
    }
    let n = (end.ordinal() - start.ordinal() + 1) as usize;
    let dates: Vec<Month> = (0..n as i64).map(|i| start.plus(i)).collect();

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for s in series {
        let values: Vec<Option<f64>> = dates.iter().map(|&d| s.get(d)).collect();
        let missing = values.iter().filter(|v| v.is_none()).count();
        let fraction = missing as f64 / n as f64;
        if fraction > opts.max_missing_fraction {
            dropped.push(DroppedColumn {
                name: s.name().to_string(),
                missing_fraction: fraction,
            });
        } else {
            kept.push(TimeSeries::new(s.name(), dates.clone(), values)?);
        }
    }
    if kept.is_empty() {
        return Err(Error::Assembly(
            "every column exceeded the missing-value threshold".into(),
        ));
    }
    let panel = Panel::new(kept).map_err(|e| Error::Assembly(e.to_string()))?;
    Ok(Assembled { panel, dropped })
}

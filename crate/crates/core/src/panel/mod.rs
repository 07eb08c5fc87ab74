//! Panel construction: monthly series, transforms, alignment and summaries.

mod assemble;
pub mod io;
mod series;
pub mod transform;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use assemble::{align_and_assemble, AlignMode, AlignOptions, Assembled, DroppedColumn};
pub use series::{Month, TimeSeries};
pub use transform::{excess_return, first_diff, log_diff, Transform};

use crate::error::{Error, Result};
use crate::report::{Cell, ReportTable};
use crate::stats;

/// Columns sharing one monthly timestamp axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    columns: Vec<TimeSeries>,
}

impl Panel {
    pub fn new(columns: Vec<TimeSeries>) -> Result<Self> {
        let first = columns
            .first()
            .ok_or_else(|| Error::Size("panel needs at least one column".into()))?;
        if first.len() < 2 {
            return Err(Error::Size(format!(
                "panel needs at least 2 observations, got {}",
                first.len()
            )));
        }
        for c in &columns[1..] {
            if c.dates() != first.dates() {
                return Err(Error::Alignment(format!(
                    "column `{}` does not share the timestamp axis of `{}`",
                    c.name(),
                    first.name()
                )));
            }
        }
        Ok(Self { columns })
    }

    /// Build from a `T×M` matrix where `NaN` marks a missing entry.
    pub fn from_matrix(names: &[String], start: Month, data: &DMatrix<f64>) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(Error::Size(format!(
                "{} names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        let dates: Vec<Month> = (0..data.nrows() as i64).map(|i| start.plus(i)).collect();
        let columns = names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let values = data
                    .column(j)
                    .iter()
                    .map(|&v| if v.is_nan() { None } else { Some(v) })
                    .collect();
                TimeSeries::new(name.clone(), dates.clone(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(columns)
    }

    /// `(T_obs, M)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_obs(), self.columns.len())
    }

    pub fn n_obs(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn dates(&self) -> &[Month] {
        self.columns[0].dates()
    }

    pub fn columns(&self) -> &[TimeSeries] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&TimeSeries> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name().to_string()).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(TimeSeries::missing_count).sum()
    }

    /// `T×M` matrix with `NaN` for missing entries.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_obs(), self.n_cols(), |t, j| {
            self.columns[j].values()[t].unwrap_or(f64::NAN)
        })
    }

    /// Panel without the named column.
    pub fn without(&self, name: &str) -> Result<Self> {
        Self::new(
            self.columns
                .iter()
                .filter(|c| c.name() != name)
                .cloned()
                .collect(),
        )
    }

    /// Restrict to rows whose dates fall within `[from, to]`.
    pub fn slice_dates(&self, from: Month, to: Month) -> Result<Self> {
        let cols = self
            .columns
            .iter()
            .map(|c| {
                let (d, v): (Vec<_>, Vec<_>) = c
                    .dates()
                    .iter()
                    .zip(c.values())
                    .filter(|(d, _)| **d >= from && **d <= to)
                    .map(|(d, v)| (*d, *v))
                    .unzip();
                TimeSeries::new(c.name(), d, v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cols)
    }
}

/// Per-column location and scale used to standardize a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub columns: Vec<ColumnScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

impl StandardizationRecord {
    /// Undo [`standardize`].
    pub fn invert(&self, panel: &Panel) -> Result<Panel> {
        self.apply(panel, |v, s| v * s.sd + s.mean)
    }

    fn apply(&self, panel: &Panel, f: impl Fn(f64, &ColumnScale) -> f64) -> Result<Panel> {
        if panel.names() != self.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>() {
            return Err(Error::Consistency(
                "standardization record does not match panel columns".into(),
            ));
        }
        let cols = panel
            .columns()
            .iter()
            .zip(&self.columns)
            .map(|(c, s)| {
                TimeSeries::new(
                    c.name(),
                    c.dates().to_vec(),
                    c.values().iter().map(|v| v.map(|v| f(v, s))).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Panel::new(cols)
    }
}

/// Demean and scale each column to unit sample standard deviation over its
/// observed entries.
pub fn standardize(panel: &Panel) -> Result<(Panel, StandardizationRecord)> {
    let mut scales = Vec::with_capacity(panel.n_cols());
    for c in panel.columns() {
        let obs = c.observed();
        let sd = stats::sample_sd(&obs).ok_or_else(|| {
            Error::Size(format!(
                "column `{}` needs at least 2 observed values to standardize",
                c.name()
            ))
        })?;
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance {
                column: c.name().to_string(),
            });
        }
        scales.push(ColumnScale {
            name: c.name().to_string(),
            mean: stats::mean(&obs),
            sd,
        });
    }
    let record = StandardizationRecord { columns: scales };
    let out = record.apply(panel, |v, s| (v - s.mean) / s.sd)?;
    Ok((out, record))
}

/// Mean, standard deviation, minimum and maximum of each column.
pub fn descriptive_stats(panel: &Panel) -> ReportTable {
    let mut table = ReportTable::new(
        "Descriptive statistics of the panel data",
        &["Variable", "Mean", "Std Dev", "Min", "Max"],
    );
    for c in panel.columns() {
        let obs = c.observed();
        let (mean, min, max) = if obs.is_empty() {
            (None, None, None)
        } else {
            (
                Some(stats::mean(&obs)),
                Some(obs.iter().copied().fold(f64::INFINITY, f64::min)),
                Some(obs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            )
        };
        table.push_row(vec![
            Cell::text(c.name()),
            Cell::opt_fixed(mean, 3),
            Cell::opt_fixed(stats::sample_sd(&obs), 3),
            Cell::opt_fixed(min, 3),
            Cell::opt_fixed(max, 3),
        ]);
    }
    table
}

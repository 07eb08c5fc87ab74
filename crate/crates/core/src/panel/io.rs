//! CSV ingestion and panel serialization.
//!
//! Layout: header row, first column an ISO-8601 date, remaining columns
//! numeric, empty cell = missing.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DroppedColumn, Month, Panel, StandardizationRecord, TimeSeries, Transform};
use crate::error::{Error, Result};

/// Parse every numeric column of a CSV into a series. Months absent from the
/// file inside its date range become missing observations.
pub fn read_series_csv<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse(
            "CSV needs a date column and at least one value column".into(),
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows: BTreeMap<Month, Vec<Option<f64>>> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let date: Month = rec
            .get(0)
            .ok_or_else(|| Error::Parse(format!("row {} has no date", line + 2)))?
            .parse()?;
        let values = (1..headers.len())
            .map(|j| {
                let cell = rec.get(j).unwrap_or("");
                if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::Parse(format!("row {}: `{cell}` is not numeric", line + 2)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.insert(date, values).is_some() {
            return Err(Error::Parse(format!("duplicate date {date}")));
        }
    }
    let (first, last) = match (rows.keys().next(), rows.keys().next_back()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Parse("CSV has no data rows".into())),
    };
    let dates: Vec<Month> = (0..=(last.ordinal() - first.ordinal()))
        .map(|i| first.plus(i))
        .collect();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let values = dates.iter().map(|d| rows.get(d).and_then(|r| r[j])).collect();
            TimeSeries::new(name.clone(), dates.clone(), values)
        })
        .collect()
}

pub fn read_series_file(path: &Path) -> Result<Vec<TimeSeries>> {
    read_series_csv(std::fs::File::open(path)?)
}

/// Panel as CSV. Values use the shortest round-trip representation so that
/// reading the file back reproduces the panel bit-for-bit.
pub fn panel_to_csv(panel: &Panel) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["date".to_string()];
    header.extend(panel.names());
    w.write_record(&header).expect("in-memory write");
    for (t, d) in panel.dates().iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(
            panel
                .columns()
                .iter()
                .map(|c| c.values()[t].map_or(String::new(), |v| format!("{v:?}"))),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

pub fn panel_from_csv<R: Read>(reader: R) -> Result<Panel> {
    Panel::new(read_series_csv(reader)?)
}

/// Metadata written next to a serialized panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSidecar {
    pub shape: (usize, usize),
    pub start: Month,
    pub end: Month,
    pub columns: Vec<ColumnMeta>,
    pub dropped: Vec<DroppedColumn>,
    pub standardization: Option<StandardizationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub source: String,
    pub transform: Transform,
    pub missing: usize,
}

impl PanelSidecar {
    pub fn describe(
        panel: &Panel,
        provenance: &[(String, Transform)],
        dropped: Vec<DroppedColumn>,
        standardization: Option<StandardizationRecord>,
    ) -> Result<Self> {
        let columns = panel
            .columns()
            .iter()
            .map(|c| {
                let (source, transform) = provenance
                    .iter()
                    .find(|(n, _)| n == c.name())
                    .map(|(_, t)| (c.name().to_string(), t.clone()))
                    .ok_or_else(|| Error::Consistency(format!("no provenance for column `{}`", c.name())))?;
                Ok(ColumnMeta {
                    name: c.name().to_string(),
                    source,
                    transform,
                    missing: c.missing_count(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shape: panel.shape(),
            start: panel.dates()[0],
            end: *panel.dates().last().expect("non-empty panel"),
            columns,
            dropped,
            standardization,
        })
    }
}

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month. Serialized as the ISO-8601 month-end date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: i32,
    month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Parse(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// Months since year 0, used for arithmetic.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: (ord.rem_euclid(12) + 1) as u32,
        }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    pub fn plus(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    pub fn month_end(self) -> NaiveDate {
        let next = self.succ();
        NaiveDate::from_ymd_opt(next.year, next.month, 1)
            .and_then(|d| d.pred_opt())
            .expect("valid calendar month")
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.month_end().format("%Y-%m-%d"))
    }
}

impl FromStr for Month {
    type Err = Error;

    /// Accepts `YYYY-MM-DD` (any day of the month) or `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Month::new(d.year(), d.month());
        }
        let mut parts = s.splitn(2, '-');
        let (y, m) = (parts.next(), parts.next());
        match (y.and_then(|y| y.parse().ok()), m.and_then(|m| m.parse().ok())) {
            (Some(y), Some(m)) if s.len() == 7 => Month::new(y, m),
            _ => Err(Error::Parse(format!("cannot parse `{s}` as a date"))),
        }
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A named monthly series with explicit missing observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    dates: Vec<Month>,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    /// Build a series, checking that dates are consecutive months and that
    /// every present value is finite.
    pub fn new(name: impl Into<String>, dates: Vec<Month>, values: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        if dates.len() != values.len() {
            return Err(Error::Size(format!(
                "series `{name}` has {} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        for w in dates.windows(2) {
            if w[1].ordinal() != w[0].ordinal() + 1 {
                return Err(Error::Alignment(format!(
                    "series `{name}` is not consecutive monthly: {} followed by {}",
                    w[0], w[1]
                )));
            }
        }
        for (d, v) in dates.iter().zip(&values) {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Domain {
                        series: name,
                        date: d.to_string(),
                        message: "non-finite value".into(),
                    });
                }
            }
        }
        Ok(Self { name, dates, values })
    }

    /// A complete series starting at `start`.
    pub fn from_values(name: impl Into<String>, start: Month, values: &[f64]) -> Result<Self> {
        let dates = (0..values.len() as i64).map(|i| start.plus(i)).collect();
        Self::new(name, dates, values.iter().map(|&v| Some(v)).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dates(&self) -> &[Month] {
        &self.dates
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_date(&self) -> Option<Month> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<Month> {
        self.dates.last().copied()
    }

    /// `true` where the observation is missing.
    pub fn missing_mask(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_none).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn observed(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn get(&self, month: Month) -> Option<f64> {
        let first = self.first_date()?;
        let idx = month.ordinal() - first.ordinal();
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied().flatten()
    }

    /// Index range of the longest run of consecutive non-missing values.
    pub fn longest_observed_run(&self) -> std::ops::Range<usize> {
        let (mut best_start, mut best_len) = (0, 0);
        let mut start = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.is_none() {
                start = i + 1;
            } else if i + 1 - start > best_len {
                best_start = start;
                best_len = i + 1 - start;
            }
        }
        best_start..best_start + best_len
    }
}

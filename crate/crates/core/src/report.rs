//! Typed tables rendered as CSV, JSON and aligned plain text.

use serde_json::{json, Value};

/// A single table cell. Numeric cells keep their full-precision value for JSON
/// and carry the rendering precision used for CSV and text.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Fixed {
        value: f64,
        decimals: usize,
    },
    Sci {
        value: f64,
        digits: usize,
    },
    /// Estimate with its standard error, rendered `coef(se)`.
    CoefSe {
        coef: f64,
        se: f64,
        decimals: usize,
    },
    Missing,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn fixed(value: f64, decimals: usize) -> Self {
        Cell::Fixed { value, decimals }
    }

    pub fn sci(value: f64, digits: usize) -> Self {
        Cell::Sci { value, digits }
    }

    pub fn opt_fixed(value: Option<f64>, decimals: usize) -> Self {
        value.map_or(Cell::Missing, |v| Cell::fixed(v, decimals))
    }

    /// Fixed notation, switching to scientific below `1e-4` in magnitude.
    pub fn pvalue(value: f64, decimals: usize) -> Self {
        if value != 0.0 && value.abs() < 1e-4 {
            Cell::sci(value, decimals)
        } else {
            Cell::fixed(value, decimals)
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Fixed { value, .. } | Cell::Sci { value, .. } => Some(*value),
            Cell::CoefSe { coef, .. } => Some(*coef),
            _ => None,
        }
    }

    fn render(&self, missing: &str) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Fixed { value, decimals } => fmt_fixed(*value, *decimals),
            Cell::Sci { value, digits } => fmt_sci(*value, *digits),
            Cell::CoefSe { coef, se, decimals } => {
                format!("{}({})", fmt_fixed(*coef, *decimals), fmt_fixed(*se, *decimals))
            }
            Cell::Missing => missing.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Fixed { value, .. } | Cell::Sci { value, .. } => num(*value),
            Cell::CoefSe { coef, se, .. } => json!({ "coef": num(*coef), "se": num(*se) }),
            Cell::Missing => Value::Null,
        }
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn fmt_fixed(v: f64, decimals: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    let s = format!("{v:.decimals$}");
    // "-0.0000" reads as a sign error in tables.
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// `1.0e+20` style, matching common statistical output.
pub fn fmt_sci(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.digits$e}");
    match s.split_once('e') {
        Some((mant, exp)) if !exp.starts_with('-') => format!("{mant}e+{exp:0>2}"),
        Some((mant, exp)) => format!("{mant}e-{:0>2}", &exp[1..]),
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl ReportTable {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell at (row, named column).
    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        self.column_index(column).and_then(|c| self.rows.get(row)?.get(c))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render("")))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "title": self.title,
            "columns": self.columns,
            "rows": self.rows.iter()
                .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
                .collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }

    /// Aligned plain text with `–` for missing cells.
    pub fn to_text(&self) -> String {
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.render("–")).collect())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                rendered
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain(std::iter::once(self.columns[j].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| {
                    let pad = w - c.chars().count();
                    if j == 0 {
                        format!("{c}{}", " ".repeat(pad))
                    } else {
                        format!("{}{c}", " ".repeat(pad))
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        let header = line(&self.columns);
        out.push_str(&header);
        out.push('\n');
        out.push_str(&"-".repeat(header.chars().count()));
        out.push('\n');
        for r in &rendered {
            out.push_str(&line(r));
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str("Note: ");
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

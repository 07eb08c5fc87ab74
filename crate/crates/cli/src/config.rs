//! Pipeline configuration: a single TOML file, validated all at once.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};

use macroprice::panel::io::read_series_file;
use macroprice::panel::{AlignMode, TimeSeries};
use macroprice::pricing::MarketProxy;
use macroprice::stationarity::{AdfTrend, BreakModel, KpssTrend, ZaTrigger};

use crate::error::CliError;

pub const DEFAULT_DROP_THRESHOLD: f64 = 0.30;
pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_ZA_TRIM: f64 = 0.15;
pub const DEFAULT_OUTPUT_DIR: &str = "output";

/// Transform applied to a raw series before it enters a panel.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformSpec {
    LogDiff {
        scale: f64,
    },
    FirstDiff,
    ExcessReturn {
        yield_source: String,
        yield_column: String,
    },
    None,
}

impl TransformSpec {
    fn name(&self) -> &'static str {
        match self {
            TransformSpec::LogDiff { .. } => "log_diff",
            TransformSpec::FirstDiff => "first_diff",
            TransformSpec::ExcessReturn { .. } => "excess_return",
            TransformSpec::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub name: String,
    /// Key into [`PipelineConfig::data`].
    pub source: String,
    pub column: String,
    pub transform: TransformSpec,
    /// Whether the series enters the factor-model panel (macro series only).
    pub in_panel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityConfig {
    pub series: Vec<String>,
    pub trigger: ZaTrigger,
    pub adf_trend: AdfTrend,
    pub kpss_trend: KpssTrend,
    pub za_model: BreakModel,
    pub za_trim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfmConfig {
    pub factor_counts: Vec<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingConfig {
    pub factor_counts: Vec<usize>,
    pub hac_lags: Option<usize>,
    pub significance: f64,
    pub market: MarketProxy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Source key → CSV path as written in the file, and resolved against the config's directory.
    pub data: BTreeMap<String, (String, PathBuf)>,
    pub drop_threshold: f64,
    pub align: AlignMode,
    pub macro_series: Vec<SeriesSpec>,
    pub assets: Vec<SeriesSpec>,
    pub stationarity: StationarityConfig,
    pub dfm: DfmConfig,
    pub pricing: PricingConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Replaces both the fitted and the priced factor counts.
    pub factor_counts: Option<Vec<usize>>,
}

type Extra = BTreeMap<String, toml::Value>;

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    seed: Option<i64>,
    output_dir: Option<String>,
    #[serde(default)]
    data: BTreeMap<String, String>,
    #[serde(default)]
    panel: RawPanel,
    #[serde(default, rename = "macro")]
    macros: Vec<RawSeries>,
    #[serde(default, rename = "asset")]
    assets: Vec<RawSeries>,
    #[serde(default)]
    stationarity: RawStationarity,
    #[serde(default)]
    dfm: RawDfm,
    #[serde(default)]
    pricing: RawPricing,
    #[serde(flatten)]
    extra: Extra,
}

#[derive(Debug, Default, Deserialize)]
struct RawPanel {
    drop_threshold: Option<f64>,
    align: Option<String>,
    #[serde(flatten)]
    extra: Extra,
}

#[derive(Debug, Default, Deserialize)]
struct RawSeries {
    name: Option<String>,
    source: Option<String>,
    column: Option<String>,
    transform: Option<String>,
    scale: Option<f64>,
    yield_source: Option<String>,
    yield_column: Option<String>,
    panel: Option<bool>,
    #[serde(flatten)]
    extra: Extra,
}

#[derive(Debug, Default, Deserialize)]
struct RawStationarity {
    series: Option<Vec<String>>,
    za_trigger: Option<String>,
    adf_trend: Option<String>,
    kpss_trend: Option<String>,
    za_model: Option<String>,
    za_trim: Option<f64>,
    #[serde(flatten)]
    extra: Extra,
}

#[derive(Debug, Default, Deserialize)]
struct RawDfm {
    factor_counts: Option<Vec<i64>>,
    max_iter: Option<i64>,
    tol: Option<f64>,
    #[serde(flatten)]
    extra: Extra,
}

#[derive(Debug, Default, Deserialize)]
struct RawPricing {
    factor_counts: Option<Vec<i64>>,
    hac_lags: Option<i64>,
    significance: Option<f64>,
    market: Option<String>,
    #[serde(flatten)]
    extra: Extra,
}

/// Collects every problem found instead of stopping at the first.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn unknown(&mut self, table: &str, extra: &Extra) {
        for key in extra.keys() {
            let at = if table.is_empty() {
                key.clone()
            } else {
                format!("{table}.{key}")
            };
            self.push(format!("{at}: unknown key"));
        }
    }
}

fn choice<T: Copy>(p: &mut Problems, field: &str, raw: Option<&str>, default: T, options: &[(&str, T)]) -> T {
    match raw {
        None => default,
        Some(s) => match options.iter().find(|(n, _)| *n == s) {
            Some((_, v)) => *v,
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                p.push(format!("{field}: `{s}` is not one of {}", names.join(", ")));
                default
            }
        },
    }
}

fn counts(p: &mut Problems, field: &str, raw: &[i64], m: usize) -> Vec<usize> {
    if raw.is_empty() {
        p.push(format!("{field}: must list at least one factor count"));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &k in raw {
        if k < 1 || k as usize > m {
            p.push(format!(
                "{field}: factor count {k} must lie in [1, {m}] for {m} panel series"
            ));
        } else if !seen.insert(k) {
            p.push(format!("{field}: factor count {k} is listed twice"));
        } else {
            out.push(k as usize);
        }
    }
    out
}

/// Read, parse and validate a configuration file. Every failure is reported.
pub fn validate_config(path: &Path, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    validate_str(&text, &base, overrides)
}

/// Validate configuration text whose relative paths are taken from `base`.
pub fn validate_str(text: &str, base: &Path, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    let mut p = Problems::default();
    p.unknown("", &raw.extra);
    p.unknown("panel", &raw.panel.extra);
    p.unknown("stationarity", &raw.stationarity.extra);
    p.unknown("dfm", &raw.dfm.extra);
    p.unknown("pricing", &raw.pricing.extra);

    let seed = match (overrides.seed, raw.seed) {
        (Some(s), _) => s,
        (None, Some(s)) if s < 0 => {
            p.push(format!("seed: must be non-negative, got {s}"));
            0
        }
        (None, Some(s)) => s as u64,
        (None, None) => 0,
    };
    let output_dir = overrides
        .output_dir
        .clone()
        .unwrap_or_else(|| base.join(raw.output_dir.as_deref().unwrap_or(DEFAULT_OUTPUT_DIR)));

    if raw.data.is_empty() {
        p.push("data: at least one source file is required");
    }
    let mut data = BTreeMap::new();
    let mut files: BTreeMap<String, Vec<TimeSeries>> = BTreeMap::new();
    for (key, rel) in &raw.data {
        let full = base.join(rel);
        if !full.is_file() {
            p.push(format!("data.{key}: file `{}` does not exist", full.display()));
        } else {
            match read_series_file(&full) {
                Ok(s) => {
                    files.insert(key.clone(), s);
                }
                Err(e) => p.push(format!("data.{key}: cannot read `{}`: {e}", full.display())),
            }
        }
        data.insert(key.clone(), (rel.clone(), full));
    }

    let drop_threshold = raw.panel.drop_threshold.unwrap_or(DEFAULT_DROP_THRESHOLD);
    if !(0.0..1.0).contains(&drop_threshold) {
        p.push(format!(
            "panel.drop_threshold: must lie in [0, 1), got {drop_threshold}"
        ));
    }
    let align = choice(
        &mut p,
        "panel.align",
        raw.panel.align.as_deref(),
        AlignMode::Intersection,
        &[
            ("intersection", AlignMode::Intersection),
            ("union", AlignMode::Union),
        ],
    );

    let mut names = BTreeSet::new();
    let check_column = |p: &mut Problems, field: &str, source: &str, column: &str| {
        if !data.contains_key(source) {
            p.push(format!("{field}: source `{source}` is not listed under [data]"));
        } else if let Some(series) = files.get(source) {
            if !series.iter().any(|s| s.name() == column) {
                p.push(format!("{field}: column `{column}` is not in data.{source}"));
            }
        }
    };
    let mut parse_series = |p: &mut Problems, table: &str, i: usize, r: &RawSeries| -> Option<SeriesSpec> {
        let at = format!("{table}[{i}]");
        p.unknown(&at, &r.extra);
        let Some(name) = r.name.clone() else {
            p.push(format!("{at}.name: required"));
            return None;
        };
        let at = format!("{table} `{name}`");
        if !names.insert(name.clone()) {
            p.push(format!("{at}: name is used twice"));
        }
        let Some(source) = r.source.clone() else {
            p.push(format!("{at}.source: required"));
            return None;
        };
        let column = r.column.clone().unwrap_or_else(|| name.clone());
        check_column(p, &format!("{at}.column"), &source, &column);
        let transform = match r.transform.as_deref() {
            Some("log_diff") => {
                let scale = r.scale.unwrap_or(100.0);
                if !(scale > 0.0) {
                    p.push(format!("{at}.scale: must be positive, got {scale}"));
                }
                TransformSpec::LogDiff { scale }
            }
            Some("first_diff") => TransformSpec::FirstDiff,
            Some("excess_return") => match (&r.yield_source, &r.yield_column) {
                (Some(ys), Some(yc)) => {
                    check_column(p, &format!("{at}.yield_column"), ys, yc);
                    TransformSpec::ExcessReturn {
                        yield_source: ys.clone(),
                        yield_column: yc.clone(),
                    }
                }
                _ => {
                    p.push(format!("{at}: excess_return needs yield_source and yield_column"));
                    TransformSpec::None
                }
            },
            Some("none") => TransformSpec::None,
            Some(other) => {
                p.push(format!(
                    "{at}.transform: `{other}` is not one of log_diff, first_diff, excess_return, none"
                ));
                TransformSpec::None
            }
            None => {
                p.push(format!("{at}.transform: required"));
                TransformSpec::None
            }
        };
        if r.scale.is_some() && !matches!(transform, TransformSpec::LogDiff { .. }) {
            p.push(format!("{at}.scale: only applies to log_diff"));
        }
        if (r.yield_source.is_some() || r.yield_column.is_some())
            && !matches!(transform, TransformSpec::ExcessReturn { .. })
        {
            p.push(format!(
                "{at}: yield_source/yield_column only apply to excess_return"
            ));
        }
        Some(SeriesSpec {
            name,
            source,
            column,
            transform,
            in_panel: r.panel.unwrap_or(true),
        })
    };

    let macro_series: Vec<SeriesSpec> = raw
        .macros
        .iter()
        .enumerate()
        .filter_map(|(i, r)| parse_series(&mut p, "macro", i, r))
        .collect();
    let assets: Vec<SeriesSpec> = raw
        .assets
        .iter()
        .enumerate()
        .filter_map(|(i, r)| parse_series(&mut p, "asset", i, r))
        .collect();
    for a in raw.assets.iter().filter(|a| a.panel.is_some()) {
        p.push(format!(
            "asset `{}`.panel: only applies to macro series",
            a.name.as_deref().unwrap_or("?")
        ));
    }
    let m = macro_series.iter().filter(|s| s.in_panel).count();
    if m == 0 {
        p.push("macro: at least one series must enter the panel");
    }
    if assets.len() < 2 {
        p.push(format!(
            "asset: at least two assets are required, got {}",
            assets.len()
        ));
    }

    let stationarity_series = match &raw.stationarity.series {
        Some(list) => {
            for s in list {
                if !macro_series.iter().any(|m| &m.name == s) {
                    p.push(format!("stationarity.series: `{s}` is not a macro series"));
                }
            }
            list.clone()
        }
        None => macro_series.iter().map(|s| s.name.clone()).collect(),
    };
    let za_trim = raw.stationarity.za_trim.unwrap_or(DEFAULT_ZA_TRIM);
    if !(za_trim > 0.0 && za_trim < 0.5) {
        p.push(format!(
            "stationarity.za_trim: must lie in (0, 0.5), got {za_trim}"
        ));
    }
    let stationarity = StationarityConfig {
        series: stationarity_series,
        trigger: choice(
            &mut p,
            "stationarity.za_trigger",
            raw.stationarity.za_trigger.as_deref(),
            ZaTrigger::AdfUnitRoot,
            &[
                ("adf_unit_root", ZaTrigger::AdfUnitRoot),
                ("disagreement", ZaTrigger::Disagreement),
            ],
        ),
        adf_trend: choice(
            &mut p,
            "stationarity.adf_trend",
            raw.stationarity.adf_trend.as_deref(),
            AdfTrend::Constant,
            &[
                ("constant", AdfTrend::Constant),
                ("constant_trend", AdfTrend::ConstantTrend),
            ],
        ),
        kpss_trend: choice(
            &mut p,
            "stationarity.kpss_trend",
            raw.stationarity.kpss_trend.as_deref(),
            KpssTrend::Level,
            &[("level", KpssTrend::Level), ("trend", KpssTrend::Trend)],
        ),
        za_model: choice(
            &mut p,
            "stationarity.za_model",
            raw.stationarity.za_model.as_deref(),
            BreakModel::Intercept,
            &[
                ("intercept", BreakModel::Intercept),
                ("trend", BreakModel::Trend),
                ("both", BreakModel::Both),
            ],
        ),
        za_trim,
    };

    let raw_counts: Vec<i64> = match &overrides.factor_counts {
        Some(k) => k.iter().map(|&v| v as i64).collect(),
        None => raw
            .dfm
            .factor_counts
            .clone()
            .unwrap_or_else(|| (1..=m.min(7) as i64).collect()),
    };
    let factor_counts = counts(&mut p, "dfm.factor_counts", &raw_counts, m);
    let max_iter = raw.dfm.max_iter.unwrap_or(DEFAULT_MAX_ITER as i64);
    if max_iter < 1 {
        p.push(format!("dfm.max_iter: must be at least 1, got {max_iter}"));
    }
    let tol = raw.dfm.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        p.push(format!("dfm.tol: must be positive, got {tol}"));
    }

    let priced = match (&overrides.factor_counts, &raw.pricing.factor_counts) {
        (Some(_), _) | (None, None) => factor_counts.clone(),
        (None, Some(list)) => {
            let c = counts(&mut p, "pricing.factor_counts", list, m);
            for k in &c {
                if !factor_counts.contains(k) {
                    p.push(format!(
                        "pricing.factor_counts: K={k} is not in dfm.factor_counts"
                    ));
                }
            }
            c
        }
    };
    let hac_lags = match raw.pricing.hac_lags {
        Some(l) if l < 0 => {
            p.push(format!("pricing.hac_lags: must be non-negative, got {l}"));
            None
        }
        l => l.map(|l| l as usize),
    };
    let significance = raw.pricing.significance.unwrap_or(DEFAULT_SIGNIFICANCE);
    if !(significance > 0.0 && significance < 1.0) {
        p.push(format!(
            "pricing.significance: must lie in (0, 1), got {significance}"
        ));
    }
    let market = match raw.pricing.market.as_deref() {
        None => {
            let d = MarketProxy::default();
            if let MarketProxy::Series(name) = &d {
                if !assets.iter().any(|a| &a.name == name) {
                    p.push(format!(
                        "pricing.market: default market series `{name}` is not an asset; set `market`"
                    ));
                }
            }
            d
        }
        Some("equal_weighted") => MarketProxy::EqualWeighted,
        Some(name) => {
            if !assets.iter().any(|a| a.name == name) {
                p.push(format!(
                    "pricing.market: `{name}` is neither an asset nor `equal_weighted`"
                ));
            }
            MarketProxy::Series(name.to_string())
        }
    };

    if !p.0.is_empty() {
        return Err(CliError::Validation(p.0));
    }
    Ok(PipelineConfig {
        seed,
        output_dir,
        data,
        drop_threshold,
        align,
        macro_series,
        assets,
        stationarity,
        dfm: DfmConfig {
            factor_counts,
            max_iter: max_iter as usize,
            tol,
        },
        pricing: PricingConfig {
            factor_counts: priced,
            hac_lags,
            significance,
            market,
        },
    })
}

fn series_json(s: &SeriesSpec) -> Value {
    let mut v = json!({
        "name": s.name,
        "source": s.source,
        "column": s.column,
        "transform": s.transform.name(),
    });
    match &s.transform {
        TransformSpec::LogDiff { scale } => v["scale"] = json!(scale),
        TransformSpec::ExcessReturn {
            yield_source,
            yield_column,
        } => {
            v["yield_source"] = json!(yield_source);
            v["yield_column"] = json!(yield_column);
        }
        _ => {}
    }
    v
}

impl PipelineConfig {
    /// Every setting with defaults filled in. Paths appear as written and the
    /// output directory is left out, so the value does not depend on where a
    /// run writes.
    pub fn resolved(&self) -> Value {
        let macros: Vec<Value> = self
            .macro_series
            .iter()
            .map(|s| {
                let mut v = series_json(s);
                v["panel"] = json!(s.in_panel);
                v
            })
            .collect();
        json!({
            "seed": self.seed,
            "data": self.data.iter().map(|(k, (rel, _))| (k.clone(), json!(rel))).collect::<serde_json::Map<_, _>>(),
            "panel": {
                "drop_threshold": self.drop_threshold,
                "align": serde_json::to_value(self.align).expect("enum serializes"),
            },
            "macro": macros,
            "asset": self.assets.iter().map(series_json).collect::<Vec<_>>(),
            "stationarity": {
                "series": self.stationarity.series,
                "za_trigger": serde_json::to_value(self.stationarity.trigger).expect("enum serializes"),
                "adf_trend": serde_json::to_value(self.stationarity.adf_trend).expect("enum serializes"),
                "kpss_trend": serde_json::to_value(self.stationarity.kpss_trend).expect("enum serializes"),
                "za_model": serde_json::to_value(self.stationarity.za_model).expect("enum serializes"),
                "za_trim": self.stationarity.za_trim,
            },
            "dfm": {
                "factor_counts": self.dfm.factor_counts,
                "max_iter": self.dfm.max_iter,
                "tol": self.dfm.tol,
            },
            "pricing": {
                "factor_counts": self.pricing.factor_counts,
                "hac_lags": self.pricing.hac_lags,
                "significance": self.pricing.significance,
                "market": match &self.pricing.market {
                    MarketProxy::Series(s) => json!(s),
                    MarketProxy::EqualWeighted => json!("equal_weighted"),
                },
            },
        })
    }

    pub fn panel_series(&self) -> impl Iterator<Item = &SeriesSpec> {
        self.macro_series.iter().filter(|s| s.in_panel)
    }
}

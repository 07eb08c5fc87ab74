//! Pipeline stages. Each stage reads its inputs from the output directory and
//! writes its artifacts back, so a full run and stage-by-stage invocation
//! produce the same files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use macroprice::dfm::{fit_mle, selection_table, DfmFit, FitOptions};
use macroprice::panel::io::{panel_from_csv, panel_to_csv, read_series_file, PanelSidecar};
use macroprice::panel::{
    align_and_assemble, descriptive_stats, excess_return, first_diff, log_diff, standardize, AlignOptions,
    Month, Panel, TimeSeries, Transform,
};
use macroprice::pricing::{
    capm_design_condition, capm_table, fama_macbeth, fm_table, market_excess, model_comparison, run_capm,
    BetaMatrix, CapmRow, FmResult, MarketProxy,
};
use macroprice::report::ReportTable;
use macroprice::stationarity::{stationarity_rows, AdfOptions, PipelineOptions, StationarityRow, ZaOptions};

use crate::config::{PipelineConfig, SeriesSpec, TransformSpec};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Transform,
    TestStationarity,
    FitDfm,
    Price,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Transform,
        Stage::TestStationarity,
        Stage::FitDfm,
        Stage::Price,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Transform => "transform",
            Stage::TestStationarity => "test-stationarity",
            Stage::FitDfm => "fit-dfm",
            Stage::Price => "price",
            Stage::Report => "report",
        }
    }

    pub fn run(self, cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
        match self {
            Stage::Ingest => ingest(cfg, ws),
            Stage::Transform => transform(cfg, ws),
            Stage::TestStationarity => test_stationarity(cfg, ws),
            Stage::FitDfm => fit_dfm(cfg, ws),
            Stage::Price => price(cfg, ws),
            Stage::Report => report(cfg, ws),
        }
    }
}

/// The output directory, with a record of what has been written to it.
pub struct Workspace {
    root: PathBuf,
    written: Vec<String>,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| stage_err("serialize", e.into()))?;
        s.push('\n');
        self.write(rel, s)
    }

    /// `reports/<stem>.{csv,json,txt}`.
    pub fn write_table(&mut self, stem: &str, table: &ReportTable) -> Result<()> {
        self.write(&format!("reports/{stem}.csv"), table.to_csv())?;
        self.write_json(&format!("reports/{stem}.json"), &table.to_json())?;
        self.write(&format!("reports/{stem}.txt"), table.to_text())
    }

    pub fn read(&self, rel: &str) -> Result<String> {
        let path = self.root.join(rel);
        if !path.is_file() {
            return Err(CliError::MissingArtifact(rel.to_string()));
        }
        std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T> {
        serde_json::from_str(&self.read(rel)?).map_err(|e| stage_err(rel, e.into()))
    }

    pub fn read_panel(&self, rel: &str) -> Result<Panel> {
        panel_from_csv(self.read(rel)?.as_bytes()).map_err(|e| stage_err(rel, e))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn stage_err(stage: impl Into<String>, source: macroprice::Error) -> CliError {
    CliError::Stage {
        stage: stage.into(),
        source,
    }
}

pub const RAW_SERIES: &str = "raw/series.json";
pub const TRANSFORMED: &str = "panel/transformed.json";
pub const MACRO_PANEL: &str = "panel/macro.csv";
pub const STANDARDIZED_PANEL: &str = "panel/standardized.csv";
pub const RETURNS_PANEL: &str = "panel/returns.csv";
pub const CAPM: &str = "pricing/capm.json";

pub fn fit_path(k: usize) -> String {
    format!("dfm/fit_k{k}.json")
}

pub fn factors_path(k: usize) -> String {
    format!("dfm/factors_k{k}.csv")
}

pub fn fm_path(k: usize) -> String {
    format!("pricing/fm_k{k}.json")
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    source: String,
    column: String,
    series: TimeSeries,
}

fn ingest(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
    let mut wanted: Vec<(String, String)> = Vec::new();
    let mut want = |s: &str, c: &str| {
        let key = (s.to_string(), c.to_string());
        if !wanted.contains(&key) {
            wanted.push(key);
        }
    };
    for spec in cfg.macro_series.iter().chain(&cfg.assets) {
        want(&spec.source, &spec.column);
        if let TransformSpec::ExcessReturn {
            yield_source,
            yield_column,
        } = &spec.transform
        {
            want(yield_source, yield_column);
        }
    }
    let mut files: BTreeMap<&str, Vec<TimeSeries>> = BTreeMap::new();
    let mut entries = Vec::new();
    for (source, column) in &wanted {
        if !files.contains_key(source.as_str()) {
            let (_, path) = &cfg.data[source];
            let series = read_series_file(path).map_err(|e| match e {
                macroprice::Error::Io(io) => io_err(path, io),
                e => stage_err(format!("ingest {}", path.display()), e),
            })?;
            files.insert(source, series);
        }
        let series = files[source.as_str()]
            .iter()
            .find(|s| s.name() == column)
            .cloned()
            .ok_or_else(|| {
                CliError::Validation(vec![format!("column `{column}` is not in data.{source}")])
            })?;
        entries.push(RawEntry {
            source: source.clone(),
            column: column.clone(),
            series,
        });
    }
    ws.write_json(RAW_SERIES, &entries)?;
    Ok(Vec::new())
}

/// `s` restricted to `[from, to]`.
fn trim(s: &TimeSeries, from: Month, to: Month) -> macroprice::Result<TimeSeries> {
    let (dates, values): (Vec<Month>, Vec<Option<f64>>) = s
        .dates()
        .iter()
        .zip(s.values())
        .filter(|(d, _)| **d >= from && **d <= to)
        .map(|(d, v)| (*d, *v))
        .unzip();
    TimeSeries::new(s.name(), dates, values)
}

fn apply(spec: &SeriesSpec, raw: &BTreeMap<(String, String), TimeSeries>) -> Result<(TimeSeries, Transform)> {
    let lookup = |s: &str, c: &str| {
        raw.get(&(s.to_string(), c.to_string()))
            .ok_or_else(|| CliError::MissingArtifact(format!("{RAW_SERIES} entry {s}/{c}")))
    };
    let input = lookup(&spec.source, &spec.column)?;
    let context = format!("transform `{}`", spec.name);
    let (out, provenance) = match &spec.transform {
        TransformSpec::LogDiff { scale } => (log_diff(input, *scale), Transform::LogDiff { scale: *scale }),
        TransformSpec::FirstDiff => (first_diff(input), Transform::FirstDiff),
        TransformSpec::ExcessReturn {
            yield_source,
            yield_column,
        } => {
            let y = lookup(yield_source, yield_column)?;
            let from = input.dates()[0].max(y.dates()[0]);
            let to = input.dates()[input.len() - 1].min(y.dates()[y.len() - 1]);
            let out = if from > to {
                Err(macroprice::Error::Alignment(format!(
                    "`{}` and its yield `{yield_column}` do not overlap",
                    spec.name
                )))
            } else {
                trim(input, from, to).and_then(|i| excess_return(&i, &trim(y, from, to)?))
            };
            (
                out,
                Transform::ExcessReturn {
                    yield_series: format!("{yield_source}/{yield_column}"),
                },
            )
        }
        TransformSpec::None => (Ok(input.clone()), Transform::None),
    };
    Ok((
        out.map_err(|e| stage_err(context, e))?.with_name(&spec.name),
        provenance,
    ))
}

fn assemble(
    cfg: &PipelineConfig,
    what: &str,
    series: &[(TimeSeries, Transform)],
    warnings: &mut Vec<String>,
) -> Result<(Panel, PanelSidecarParts)> {
    let list: Vec<TimeSeries> = series.iter().map(|(s, _)| s.clone()).collect();
    let assembled = align_and_assemble(
        &list,
        AlignOptions {
            max_missing_fraction: cfg.drop_threshold,
            mode: cfg.align,
        },
    )
    .map_err(|e| stage_err(format!("assemble {what} panel"), e))?;
    for d in &assembled.dropped {
        warnings.push(format!(
            "{what} panel: dropped `{}` ({:.1}% missing, threshold {:.1}%)",
            d.name,
            100.0 * d.missing_fraction,
            100.0 * cfg.drop_threshold
        ));
    }
    let provenance = series
        .iter()
        .map(|(s, t)| (s.name().to_string(), t.clone()))
        .collect();
    Ok((
        assembled.panel,
        PanelSidecarParts {
            provenance,
            dropped: assembled.dropped,
        },
    ))
}

struct PanelSidecarParts {
    provenance: Vec<(String, Transform)>,
    dropped: Vec<macroprice::panel::DroppedColumn>,
}

fn transform(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
    let entries: Vec<RawEntry> = ws.read_json(RAW_SERIES)?;
    let raw: BTreeMap<(String, String), TimeSeries> = entries
        .into_iter()
        .map(|e| ((e.source, e.column), e.series))
        .collect();
    let mut warnings = Vec::new();

    let macros = cfg
        .macro_series
        .iter()
        .map(|s| apply(s, &raw))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<&TimeSeries> = macros.iter().map(|(s, _)| s).collect();
    ws.write_json(TRANSFORMED, &all)?;

    let in_panel: Vec<(TimeSeries, Transform)> = cfg
        .macro_series
        .iter()
        .zip(&macros)
        .filter(|(spec, _)| spec.in_panel)
        .map(|(_, m)| m.clone())
        .collect();
    let (panel, parts) = assemble(cfg, "macro", &in_panel, &mut warnings)?;
    let (standardized, record) = standardize(&panel).map_err(|e| stage_err("standardize", e))?;
    ws.write(MACRO_PANEL, panel_to_csv(&panel))?;
    ws.write(STANDARDIZED_PANEL, panel_to_csv(&standardized))?;
    let sidecar = PanelSidecar::describe(&panel, &parts.provenance, parts.dropped, Some(record))
        .map_err(|e| stage_err("transform", e))?;
    ws.write_json("panel/macro.json", &sidecar)?;
    ws.write_table("table3_descriptive", &descriptive_stats(&panel))?;

    let assets = cfg
        .assets
        .iter()
        .map(|s| apply(s, &raw))
        .collect::<Result<Vec<_>>>()?;
    let (returns, parts) = assemble(cfg, "return", &assets, &mut warnings)?;
    ws.write(RETURNS_PANEL, panel_to_csv(&returns))?;
    let sidecar = PanelSidecar::describe(&returns, &parts.provenance, parts.dropped, None)
        .map_err(|e| stage_err("transform", e))?;
    ws.write_json("panel/returns.json", &sidecar)?;
    Ok(warnings)
}

fn test_stationarity(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
    let transformed: Vec<TimeSeries> = ws.read_json(TRANSFORMED)?;
    let chosen = cfg
        .stationarity
        .series
        .iter()
        .map(|name| {
            transformed
                .iter()
                .find(|s| s.name() == name)
                .cloned()
                .ok_or_else(|| CliError::MissingArtifact(format!("{TRANSFORMED} series `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let st = &cfg.stationarity;
    let opts = PipelineOptions {
        adf: AdfOptions {
            trend: st.adf_trend,
            ..Default::default()
        },
        kpss: st.kpss_trend,
        za: ZaOptions {
            model: st.za_model,
            trim: st.za_trim,
            ..Default::default()
        },
        trigger: st.trigger,
    };
    let rows = stationarity_rows(&chosen, &opts);
    let warnings = rows
        .iter()
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("stationarity `{}`: {e}", r.series))
        })
        .collect();
    ws.write_json("stationarity/results.json", &rows)?;
    ws.write_table("table2_stationarity", &StationarityRow::table(&rows, st.za_model))?;
    Ok(warnings)
}

fn fit_dfm(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
    let panel = ws.read_panel(STANDARDIZED_PANEL)?;
    let opts = FitOptions {
        max_iter: cfg.dfm.max_iter,
        tol: cfg.dfm.tol,
        seed: cfg.seed,
    };
    let fits = cfg
        .dfm
        .factor_counts
        .par_iter()
        .map(|&k| fit_mle(&panel, k, opts).map_err(|e| stage_err(format!("fit-dfm K={k}"), e)))
        .collect::<Result<Vec<DfmFit>>>()?;
    let mut warnings = Vec::new();
    for fit in &fits {
        ws.write_json(&fit_path(fit.k), fit)?;
        let csv = fit
            .factors_csv(panel.dates())
            .map_err(|e| stage_err(format!("fit-dfm K={}", fit.k), e))?;
        ws.write(&factors_path(fit.k), csv)?;
        if !fit.converged {
            warnings.push(format!(
                "K={}: EM did not converge in {} iterations",
                fit.k, fit.iterations
            ));
        }
        warnings.extend(fit.warnings.iter().map(|w| format!("K={}: {w}", fit.k)));
    }
    let refs: Vec<&DfmFit> = fits.iter().collect();
    ws.write_table("table4_model_selection", &selection_table(&refs))?;
    Ok(warnings)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CapmArtifact {
    pub market: MarketProxy,
    pub design_condition: f64,
    pub rows: Vec<CapmRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FmArtifact {
    pub k: usize,
    pub start: Month,
    pub end: Month,
    pub betas: BetaMatrix,
    pub result: FmResult,
    pub skipped_periods: Vec<(Month, String)>,
}

/// Dates shared by two panels, as an inclusive range.
fn overlap(a: &Panel, b: &Panel) -> Option<(Month, Month)> {
    let from = a.dates()[0].max(b.dates()[0]);
    let to = a.dates()[a.n_obs() - 1].min(b.dates()[b.n_obs() - 1]);
    (from <= to).then_some((from, to))
}

fn price(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
    let returns = ws.read_panel(RETURNS_PANEL)?;
    let mut warnings = Vec::new();

    let proxy = &cfg.pricing.market;
    let market = market_excess(&returns, proxy).map_err(|e| stage_err("price CAPM", e))?;
    let rows = run_capm(&returns, proxy).map_err(|e| stage_err("price CAPM", e))?;
    for r in &rows {
        if let Some(e) = &r.error {
            warnings.push(format!("CAPM `{}`: {e}", r.country));
        }
    }
    let capm = CapmArtifact {
        market: proxy.clone(),
        design_condition: capm_design_condition(&market),
        rows,
    };
    ws.write_json(CAPM, &capm)?;
    ws.write_table("table6_capm", &capm_table(&capm.rows))?;

    let mut results = Vec::new();
    for &k in &cfg.pricing.factor_counts {
        let stage = format!("price K={k}");
        let factors = ws.read_panel(&factors_path(k))?;
        let (factors, _) = standardize(&factors).map_err(|e| stage_err(&stage, e))?;
        let (from, to) = overlap(&returns, &factors).ok_or_else(|| {
            stage_err(
                &stage,
                macroprice::Error::Alignment("returns and factors share no months".into()),
            )
        })?;
        let r = returns.slice_dates(from, to).map_err(|e| stage_err(&stage, e))?;
        let f = factors.slice_dates(from, to).map_err(|e| stage_err(&stage, e))?;
        let (betas, second, fm) =
            fama_macbeth(&r, &f.to_matrix(), cfg.pricing.hac_lags).map_err(|e| stage_err(&stage, e))?;
        for (asset, why) in &betas.excluded {
            warnings.push(format!(
                "K={k}: asset `{asset}` excluded from the first pass ({why})"
            ));
        }
        let skipped: Vec<(Month, String)> = second
            .skipped
            .iter()
            .map(|(t, why)| (r.dates()[*t], why.clone()))
            .collect();
        if !skipped.is_empty() {
            warnings.push(format!("K={k}: {} second-pass periods skipped", skipped.len()));
        }
        let artifact = FmArtifact {
            k,
            start: from,
            end: to,
            betas,
            result: fm,
            skipped_periods: skipped,
        };
        ws.write_json(&fm_path(k), &artifact)?;
        results.push(artifact);
    }
    let cols: Vec<(usize, &FmResult)> = results.iter().map(|a| (a.k, &a.result)).collect();
    ws.write_table("table5_fama_macbeth", &fm_table(&cols))?;
    Ok(warnings)
}

const SUMMARY_TABLES: [&str; 6] = [
    "table2_stationarity",
    "table3_descriptive",
    "table4_model_selection",
    "table5_fama_macbeth",
    "table6_capm",
    "table7_comparison",
];

fn report(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>> {
    let capm: CapmArtifact = ws.read_json(CAPM)?;
    let mut fm = BTreeMap::new();
    let mut fits = BTreeMap::new();
    for &k in &cfg.pricing.factor_counts {
        let a: FmArtifact = ws.read_json(&fm_path(k))?;
        fm.insert(k, a.result);
        let fit: DfmFit = ws.read_json(&fit_path(k))?;
        fits.insert(k, fit);
    }
    let table = model_comparison(
        &capm.rows,
        capm.design_condition,
        &fm,
        &fits,
        cfg.pricing.significance,
    )
    .map_err(|e| stage_err("report", e))?;
    ws.write_table("table7_comparison", &table)?;

    let mut summary = String::new();
    for stem in SUMMARY_TABLES {
        let text = ws.read(&format!("reports/{stem}.txt"))?;
        if !summary.is_empty() {
            summary.push('\n');
        }
        summary.push_str(&text);
    }
    ws.write("reports/summary.txt", summary)?;
    Ok(Vec::new())
}

//! Offline example data: monthly CSV files shaped like the real sources
//! (price levels, rates, index levels), generated from a three-factor model.
//!
//! The 19 panel series take the names and sample means and standard
//! deviations of the reference panel after transformation. A twentieth
//! series, France industrial production, is mostly missing so the panel
//! assembly drops it. Equity indices follow a one-factor market model whose
//! country betas, alphas and R² follow published CAPM estimates, plus a small
//! exposure to the macro factors.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use macroprice::dfm::{simulate_dfm, StateSpaceParams};
use macroprice::panel::Month;

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 2024;
pub const N_FACTORS: usize = 3;
/// Months of transformed data, 2000-01 to 2024-12.
pub const T_OBS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    LogDiff,
    FirstDiff,
}

/// A panel series: file, column, transform, target mean and sd of the
/// transformed values, and the level the series starts from.
struct MacroSpec {
    name: &'static str,
    file: &'static str,
    column: &'static str,
    kind: Kind,
    mean: f64,
    sd: f64,
    base: f64,
}

const fn spec(
    name: &'static str,
    file: &'static str,
    column: &'static str,
    kind: Kind,
    mean: f64,
    sd: f64,
    base: f64,
) -> MacroSpec {
    MacroSpec {
        name,
        file,
        column,
        kind,
        mean,
        sd,
        base,
    }
}

use Kind::{FirstDiff, LogDiff};

#[rustfmt::skip]
const PANEL: [MacroSpec; 20] = [
    spec("Brazil Inflation", "cpi", "Brazil", LogDiff, 0.497, 0.392, 100.0),
    spec("Canada Inflation", "cpi", "Canada", LogDiff, 0.184, 0.388, 100.0),
    spec("China Inflation", "cpi", "China", LogDiff, 0.165, 0.602, 100.0),
    spec("France Inflation", "cpi", "France", LogDiff, 0.139, 0.344, 100.0),
    spec("Germany Inflation", "cpi", "Germany", LogDiff, 0.157, 0.385, 100.0),
    spec("India Inflation", "cpi", "India", LogDiff, 0.495, 0.729, 100.0),
    spec("Industrial Production (India)", "industrial_production", "India", LogDiff, 1.871, 2.827, 100.0),
    spec("Industrial Production (Brazil)", "industrial_production", "Brazil", LogDiff, 0.079, 2.373, 100.0),
    spec("Interest Rate (US)", "policy_rate", "United States", FirstDiff, -0.002, 0.163, 6.0),
    spec("Interest Rate (Japan)", "policy_rate", "Japan", FirstDiff, -0.001, 0.035, 0.5),
    spec("US Bond Yield Diff", "gov_yields", "United States", FirstDiff, -0.008, 0.218, 6.5),
    spec("Germany Bond Yield Diff", "gov_yields", "Germany", FirstDiff, -0.011, 0.162, 5.3),
    spec("UK Bond Yield Diff", "gov_yields", "United Kingdom", FirstDiff, -0.005, 0.187, 5.0),
    spec("Brazil FX", "fx", "Brazil", LogDiff, -0.405, 4.834, 1.8),
    spec("India FX", "fx", "India", LogDiff, -0.223, 1.573, 46.0),
    spec("Japan FX", "fx", "Japan", LogDiff, -0.138, 2.687, 105.0),
    spec("UK FX", "fx", "United Kingdom", LogDiff, -0.092, 2.478, 0.62),
    spec("VIX Volatility", "vix", "VIX", LogDiff, -0.142, 21.385, 22.0),
    spec("WTI Oil Growth", "wti", "WTI", LogDiff, 0.355, 10.918, 25.0),
    spec("Industrial Production (France)", "industrial_production", "France", LogDiff, 0.05, 1.5, 100.0),
];

/// Index of the France IP series, of which only the last 40% is published.
const SPARSE: usize = 19;
const SPARSE_OBSERVED: f64 = 0.4;

/// Inflation series tested for stationarity but kept out of the panel:
/// country, mean, sd, and the month from which the mean shifts by `shift`.
const EXTRA_INFLATION: [(&str, f64, f64, Option<(i32, u32, f64)>); 4] = [
    ("Italy", 0.160, 0.320, None),
    ("Japan", 0.010, 0.250, Some((2013, 4, 0.35))),
    ("United Kingdom", 0.220, 0.330, None),
    ("United States", 0.200, 0.340, None),
];

/// Country, CAPM alpha, beta and R² for the equity indices. The United States
/// index is the market.
pub const MARKET: &str = "United States";
const EQUITY: [(&str, f64, f64, f64); 9] = [
    ("Brazil", 0.001938, 0.970369, 0.377384),
    ("Canada", -0.000389, 0.740115, 0.650136),
    ("China", -0.000434, 0.486563, 0.094174),
    ("France", -0.003724, 0.926618, 0.656569),
    ("Germany", -0.001459, 1.061175, 0.645754),
    ("India", 0.004933, 0.792812, 0.319029),
    ("Italy", -0.005351, 0.963611, 0.507620),
    ("Japan", -0.001764, 0.798898, 0.426629),
    ("United Kingdom", -0.002894, 0.682445, 0.615332),
];
const MARKET_MEAN: f64 = 0.005;
const MARKET_FACTOR_LOADINGS: [f64; N_FACTORS] = [0.015, 0.010, 0.008];
const MARKET_IDIO_SD: f64 = 0.035;
const COUNTRY_FACTOR_SD: f64 = 0.006;

fn first_month() -> Month {
    Month::new(2000, 1).expect("valid month")
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Affine rescaling to the given sample mean and sd.
fn rescale(x: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    let (m, s) = mean_sd(x);
    x.iter().map(|v| mean + sd * (v - m) / s).collect()
}

/// Levels whose transform gives back `changes`; one more entry than `changes`.
fn integrate(changes: &[f64], kind: Kind, base: f64) -> Vec<f64> {
    let mut level = base;
    let mut out = vec![base];
    for c in changes {
        level = match kind {
            LogDiff => level * (c / 100.0).exp(),
            FirstDiff => level + c,
        };
        out.push(level);
    }
    out
}

fn true_params(seed: u64) -> Result<StateSpaceParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = PANEL.len();
    let loadings = DMatrix::from_fn(m, N_FACTORS, |_, _| normal(&mut rng));
    let transition = DMatrix::from_diagonal(&DVector::from_vec(vec![0.8, 0.6, 0.4]));
    let obs_var = DVector::from_element(m, 0.5);
    let state_cov = DMatrix::identity(N_FACTORS, N_FACTORS);
    StateSpaceParams::new(loadings, transition, obs_var, state_cov).map_err(|e| CliError::Stage {
        stage: "synthetic".into(),
        source: e,
    })
}

/// One CSV: a start month and named columns of equal length.
#[derive(Default)]
struct CsvFile {
    start: Option<Month>,
    columns: Vec<(String, Vec<Option<f64>>)>,
}

impl CsvFile {
    fn push(&mut self, start: Month, name: &str, values: Vec<Option<f64>>) {
        let start_ = *self.start.get_or_insert(start);
        assert_eq!(start_, start, "columns of one file share a start month");
        if let Some((_, first)) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "columns of one file share a length");
        }
        self.columns.push((name.to_string(), values));
    }

    fn render(&self) -> String {
        let mut out = String::from("date");
        for (name, _) in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        let start = self.start.expect("file has columns");
        for t in 0..self.columns[0].1.len() {
            write!(out, "{}", start.plus(t as i64)).expect("string write");
            for (_, v) in &self.columns {
                out.push(',');
                if let Some(v) = v[t] {
                    write!(out, "{v:.6}").expect("string write");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Every file of the bundle, keyed by file stem, plus `config.toml`.
pub fn bundle(seed: u64) -> Result<Vec<(String, String)>> {
    let params = true_params(seed)?;
    let sim = simulate_dfm(&params, T_OBS, seed.wrapping_add(1), None).map_err(|e| CliError::Stage {
        stage: "synthetic".into(),
        source: e,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut files: std::collections::BTreeMap<&str, CsvFile> = Default::default();
    let level_start = first_month().plus(-1);

    for (i, s) in PANEL.iter().enumerate() {
        let raw: Vec<f64> = sim.observations.column(i).iter().copied().collect();
        let levels = integrate(&rescale(&raw, s.mean, s.sd), s.kind, s.base);
        let hidden = if i == SPARSE {
            ((1.0 - SPARSE_OBSERVED) * levels.len() as f64).round() as usize
        } else {
            0
        };
        let values = levels
            .iter()
            .enumerate()
            .map(|(t, &v)| (t >= hidden).then_some(v))
            .collect();
        files
            .entry(s.file)
            .or_default()
            .push(level_start, s.column, values);
    }

    let break_index = |y: i32, m: u32| {
        (Month::new(y, m).expect("valid month").ordinal() - first_month().ordinal()) as usize
    };
    for (country, mean, sd, shift) in EXTRA_INFLATION {
        let mut e = normal(&mut rng) / (1.0f64 - 0.25).sqrt();
        let mut x = Vec::with_capacity(T_OBS);
        for t in 0..T_OBS {
            if t > 0 {
                e = 0.5 * e + normal(&mut rng);
            }
            let jump = match shift {
                Some((y, m, size)) if t >= break_index(y, m) => size,
                _ => 0.0,
            };
            x.push(mean + sd * e * (1.0f64 - 0.25).sqrt() + jump);
        }
        let levels = integrate(&x, LogDiff, 100.0);
        files
            .entry("cpi")
            .or_default()
            .push(level_start, country, levels.into_iter().map(Some).collect());
    }

    let mut tbill = Vec::with_capacity(T_OBS);
    let mut y = 5.5f64;
    for _ in 0..T_OBS {
        tbill.push(y);
        y = (y + 0.15 * normal(&mut rng)).max(0.05);
    }

    let factors = DMatrix::from_columns(
        &(0..N_FACTORS)
            .map(|j| {
                let f: Vec<f64> = sim.factors.column(j).iter().copied().collect();
                DVector::from_vec(rescale(&f, 0.0, 1.0))
            })
            .collect::<Vec<_>>(),
    );
    let market: Vec<f64> = (1..T_OBS)
        .map(|t| {
            let common: f64 = (0..N_FACTORS)
                .map(|j| MARKET_FACTOR_LOADINGS[j] * factors[(t, j)])
                .sum();
            MARKET_MEAN + common + MARKET_IDIO_SD * normal(&mut rng)
        })
        .collect();
    let market_var: f64 =
        MARKET_FACTOR_LOADINGS.iter().map(|c| c * c).sum::<f64>() + MARKET_IDIO_SD * MARKET_IDIO_SD;
    let price = |excess: &[f64]| -> Vec<Option<f64>> {
        let mut p = 100.0f64;
        let mut out = vec![Some(p)];
        for (t, r) in excess.iter().enumerate() {
            p *= (r + (1.0 + tbill[t + 1] / 1200.0).ln()).exp();
            out.push(Some(p));
        }
        out
    };
    for (country, alpha, beta, r2) in EQUITY {
        let gamma: Vec<f64> = (0..N_FACTORS)
            .map(|_| COUNTRY_FACTOR_SD * normal(&mut rng))
            .collect();
        let gamma_var: f64 = gamma.iter().map(|g| g * g).sum();
        let noise_var = (beta * beta * market_var * (1.0 / r2 - 1.0) - gamma_var).max(1e-6);
        let excess: Vec<f64> = market
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let t = i + 1;
                let macro_part: f64 = (0..N_FACTORS).map(|j| gamma[j] * factors[(t, j)]).sum();
                alpha + beta * m + macro_part + noise_var.sqrt() * normal(&mut rng)
            })
            .collect();
        files
            .entry("equity")
            .or_default()
            .push(first_month(), country, price(&excess));
    }
    files
        .entry("equity")
        .or_default()
        .push(first_month(), MARKET, price(&market));
    files
        .entry("tbill")
        .or_default()
        .push(first_month(), "US 3M", tbill.into_iter().map(Some).collect());

    let mut out: Vec<(String, String)> = files
        .into_iter()
        .map(|(stem, f)| (format!("{stem}.csv"), f.render()))
        .collect();
    out.push(("config.toml".into(), config_toml(seed)));
    Ok(out)
}

/// Write the bundle into `dir`.
pub fn write_bundle(dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for (name, contents) in bundle(seed)? {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io { path, source: e })?;
    }
    Ok(())
}

fn config_toml(seed: u64) -> String {
    let mut s = format!(
        "# Synthetic example: 3 true macro factors, 10 equity markets.\n\
         seed = {seed}\n\
         output_dir = \"output\"\n\n\
         [data]\n\
         cpi = \"cpi.csv\"\n\
         industrial_production = \"industrial_production.csv\"\n\
         policy_rate = \"policy_rate.csv\"\n\
         gov_yields = \"gov_yields.csv\"\n\
         fx = \"fx.csv\"\n\
         vix = \"vix.csv\"\n\
         wti = \"wti.csv\"\n\
         equity = \"equity.csv\"\n\
         tbill = \"tbill.csv\"\n\n\
         [panel]\n\
         drop_threshold = 0.30\n\
         align = \"intersection\"\n"
    );
    let transform = |k: Kind| match k {
        LogDiff => "log_diff",
        FirstDiff => "first_diff",
    };
    for p in &PANEL {
        write!(
            s,
            "\n[[macro]]\nname = \"{}\"\nsource = \"{}\"\ncolumn = \"{}\"\ntransform = \"{}\"\n",
            p.name,
            p.file,
            p.column,
            transform(p.kind)
        )
        .expect("string write");
    }
    for (country, ..) in EXTRA_INFLATION {
        write!(
            s,
            "\n[[macro]]\nname = \"{country} Inflation\"\nsource = \"cpi\"\ncolumn = \"{country}\"\n\
             transform = \"log_diff\"\npanel = false\n"
        )
        .expect("string write");
    }
    let mut countries: Vec<&str> = EQUITY.iter().map(|e| e.0).collect();
    countries.push(MARKET);
    for c in &countries {
        write!(
            s,
            "\n[[asset]]\nname = \"{c}\"\nsource = \"equity\"\ntransform = \"excess_return\"\n\
             yield_source = \"tbill\"\nyield_column = \"US 3M\"\n"
        )
        .expect("string write");
    }
    let inflation: Vec<String> = ["Brazil", "Canada", "China", "France", "Germany", "India"]
        .iter()
        .chain(EXTRA_INFLATION.iter().map(|e| &e.0))
        .map(|c| format!("\"{c} Inflation\""))
        .collect();
    write!(
        s,
        "\n[stationarity]\nseries = [{}]\nza_trigger = \"disagreement\"\n\n\
         [dfm]\nfactor_counts = [1, 2, 3, 4, 5, 6, 7]\nmax_iter = 500\ntol = 1e-6\n\n\
         [pricing]\nfactor_counts = [3, 4, 5]\nsignificance = 0.05\nmarket = \"{MARKET}\"\n",
        inflation.join(", ")
    )
    .expect("string write");
    s
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use macroprice::dfm::DfmFit;
use macroprice::pricing::MarketProxy;
use macroprice_cli::config::{validate_config, validate_str, Overrides, TransformSpec};
use macroprice_cli::manifest::{RunManifest, INCOMPLETE_MANIFEST, MANIFEST};
use macroprice_cli::stages::fit_path;
use macroprice_cli::synthetic::{bundle, write_bundle, DEFAULT_SEED};
use macroprice_cli::{run_pipeline, run_stage, CliError, RunOptions, Stage};
use tempfile::TempDir;

fn bundled_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

/// Every file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn synthetic_copy() -> TempDir {
    let dir = TempDir::new().unwrap();
    write_bundle(dir.path(), DEFAULT_SEED).unwrap();
    dir
}

fn validation_messages(err: CliError) -> Vec<String> {
    match err {
        CliError::Validation(m) => m,
        other => panic!("expected a validation error, got {other}"),
    }
}

const MINIMAL: &str = r#"
[data]
eq = "equity.csv"
cpi = "cpi.csv"
tbill = "tbill.csv"

[[macro]]
name = "Canada Inflation"
source = "cpi"
column = "Canada"
transform = "log_diff"

[[macro]]
name = "China Inflation"
source = "cpi"
column = "China"
transform = "log_diff"

[[asset]]
name = "US"
source = "eq"
column = "United States"
transform = "excess_return"
yield_source = "tbill"
yield_column = "US 3M"

[[asset]]
name = "Canada"
source = "eq"
transform = "excess_return"
yield_source = "tbill"
yield_column = "US 3M"
"#;

#[test]
fn bundled_data_matches_generator() {
    for (name, contents) in bundle(DEFAULT_SEED).unwrap() {
        let on_disk = std::fs::read_to_string(bundled_dir().join(&name))
            .unwrap_or_else(|e| panic!("data/synthetic/{name}: {e}"));
        assert!(
            on_disk == contents,
            "data/synthetic/{name} is stale; rerun the make_synthetic example"
        );
    }
}

#[test]
fn bundled_config_validates_with_reference_layout() {
    let cfg = validate_config(&bundled_dir().join("config.toml"), &Overrides::default()).unwrap();
    assert_eq!(cfg.assets.len(), 10);
    assert_eq!(cfg.panel_series().count(), 20);
    assert_eq!(cfg.stationarity.series.len(), 10);
    assert_eq!(cfg.dfm.factor_counts, (1..=7).collect::<Vec<_>>());
    assert_eq!(cfg.pricing.factor_counts, vec![3, 4, 5]);
    assert_eq!(cfg.pricing.market, MarketProxy::Series("United States".into()));
    assert_eq!(cfg.output_dir, bundled_dir().join("output"));
}

#[test]
fn minimal_config_gets_defaults() {
    let cfg = validate_str(MINIMAL, &bundled_dir(), &Overrides::default()).unwrap();
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.drop_threshold, 0.30);
    assert_eq!(cfg.dfm.factor_counts, vec![1, 2]);
    assert_eq!(cfg.pricing.factor_counts, vec![1, 2]);
    assert_eq!(cfg.dfm.max_iter, 500);
    assert_eq!(cfg.dfm.tol, 1e-6);
    assert_eq!(cfg.pricing.hac_lags, None);
    assert_eq!(cfg.pricing.significance, 0.05);
    assert_eq!(cfg.pricing.market, MarketProxy::Series("US".into()));
    assert_eq!(
        cfg.stationarity.series,
        vec!["Canada Inflation", "China Inflation"]
    );
    assert_eq!(cfg.stationarity.za_trim, 0.15);
    assert_eq!(
        cfg.macro_series[0].transform,
        TransformSpec::LogDiff { scale: 100.0 }
    );
    assert_eq!(cfg.assets[1].column, "Canada");
    let resolved = cfg.resolved();
    assert_eq!(resolved["dfm"]["factor_counts"], serde_json::json!([1, 2]));
    assert!(resolved.get("output_dir").is_none());
}

#[test]
fn zero_factor_count_names_the_field() {
    let text = format!("{MINIMAL}\n[dfm]\nfactor_counts = [0, 1]\n");
    let msgs = validation_messages(validate_str(&text, &bundled_dir(), &Overrides::default()).unwrap_err());
    assert_eq!(msgs.len(), 1, "{msgs:?}");
    assert!(msgs[0].starts_with("dfm.factor_counts"), "{msgs:?}");
}

#[test]
fn every_problem_is_reported() {
    let text = "bogus = 1\n".to_string()
        + &MINIMAL.replace("cpi = \"cpi.csv\"", "cpi = \"nowhere.csv\"")
        .replace(
            "transform = \"excess_return\"\nyield_source = \"tbill\"\nyield_column = \"US 3M\"\n\n[[asset]]",
            "transform = \"excess\"\n\n[[asset]]",
        )
        + "\n[dfm]\nfactor_counts = [3]\nmax_iter = 0\nwobble = true\n\n[pricing]\nsignificance = 1.5\nmarket = \"Mars\"\n";
    let msgs = validation_messages(validate_str(&text, &bundled_dir(), &Overrides::default()).unwrap_err());
    let has = |needle: &str| msgs.iter().any(|m| m.contains(needle));
    assert!(has("bogus: unknown key"), "{msgs:?}");
    assert!(has("nowhere.csv"), "{msgs:?}");
    assert!(has("`excess` is not one of"), "{msgs:?}");
    assert!(has("dfm.factor_counts: factor count 3"), "{msgs:?}");
    assert!(has("dfm.max_iter"), "{msgs:?}");
    assert!(has("dfm.wobble: unknown key"), "{msgs:?}");
    assert!(has("pricing.significance"), "{msgs:?}");
    assert!(has("pricing.market: `Mars`"), "{msgs:?}");
    assert!(msgs.len() >= 8);
}

#[test]
fn command_line_overrides_win() {
    let overrides = Overrides {
        seed: Some(9),
        output_dir: Some("/tmp/elsewhere".into()),
        factor_counts: Some(vec![2]),
    };
    let cfg = validate_config(&bundled_dir().join("config.toml"), &overrides).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.output_dir, PathBuf::from("/tmp/elsewhere"));
    assert_eq!(cfg.dfm.factor_counts, vec![2]);
    assert_eq!(cfg.pricing.factor_counts, vec![2]);
}

#[test]
fn stages_compose_to_the_full_run() {
    let data = synthetic_copy();
    let config = data.path().join("config.toml");
    let full = TempDir::new().unwrap();
    let staged = TempDir::new().unwrap();
    let overrides = |out: &Path| Overrides {
        output_dir: Some(out.to_path_buf()),
        factor_counts: Some(vec![2, 3]),
        ..Default::default()
    };
    let cfg = validate_config(&config, &overrides(full.path())).unwrap();
    run_pipeline(&cfg, &std::fs::read(&config).unwrap(), RunOptions::default()).unwrap();

    let cfg = validate_config(&config, &overrides(staged.path())).unwrap();
    for stage in Stage::ALL {
        run_stage(&cfg, stage).unwrap();
    }
    let mut full_tree = tree(full.path());
    full_tree.remove(MANIFEST).expect("full run writes a manifest");
    assert_eq!(full_tree, tree(staged.path()));

    // Re-running one stage alone on saved inputs rewrites identical files.
    for stage in [Stage::TestStationarity, Stage::FitDfm] {
        run_stage(&cfg, stage).unwrap();
        assert_eq!(full_tree, tree(staged.path()), "{}", stage.name());
    }
}

#[test]
fn synthetic_run_prefers_three_factors() {
    let data = synthetic_copy();
    let out = TempDir::new().unwrap();
    let config = data.path().join("config.toml");
    let cfg = validate_config(
        &config,
        &Overrides {
            output_dir: Some(out.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    let manifest = run_pipeline(&cfg, &std::fs::read(&config).unwrap(), RunOptions::default()).unwrap();
    assert_eq!(manifest.completed_stages, Stage::ALL.to_vec());
    assert!(manifest.timings_ms.is_none());
    assert!(manifest
        .warnings
        .iter()
        .any(|w| w.contains("dropped `Industrial Production (France)`")));

    let aic = |k: usize| {
        let fit: DfmFit =
            serde_json::from_str(&std::fs::read_to_string(out.path().join(fit_path(k))).unwrap()).unwrap();
        fit.aic
    };
    assert!(
        aic(3) < aic(2) && aic(3) < aic(1),
        "AIC by K: {:?}",
        (1..=4).map(aic).collect::<Vec<_>>()
    );

    let on_disk: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(out.path().join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    for (rel, hash) in &manifest.outputs {
        let bytes = std::fs::read(out.path().join(rel)).unwrap();
        assert_eq!(&macroprice_cli::manifest::sha256_hex(&bytes), hash, "{rel}");
    }
    let table4 = std::fs::read_to_string(out.path().join("reports/table4_model_selection.csv")).unwrap();
    assert!(table4.starts_with("No of factor(K),AIC,BIC,Condition Number"));
    assert_eq!(table4.lines().count(), 8);
}

#[test]
fn failed_run_leaves_an_incomplete_manifest() {
    let data = synthetic_copy();
    let tbill = data.path().join("tbill.csv");
    let text = std::fs::read_to_string(&tbill).unwrap();
    // A yield below -1200% has no log gross return.
    let broken: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 5 {
                format!("{},-1500", l.split(',').next().unwrap())
            } else {
                l.to_string()
            }
        })
        .collect();
    std::fs::write(&tbill, broken.join("\n") + "\n").unwrap();
    let out = TempDir::new().unwrap();
    std::fs::write(out.path().join(MANIFEST), "stale").unwrap();
    let config = data.path().join("config.toml");
    let cfg = validate_config(
        &config,
        &Overrides {
            output_dir: Some(out.path().to_path_buf()),
            factor_counts: Some(vec![1]),
            ..Default::default()
        },
    )
    .unwrap();
    let err = run_pipeline(&cfg, &std::fs::read(&config).unwrap(), RunOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::Stage { .. }), "{err}");
    assert!(!out.path().join(MANIFEST).exists());
    let partial: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(out.path().join(INCOMPLETE_MANIFEST)).unwrap())
            .unwrap();
    assert_eq!(partial.completed_stages, vec![Stage::Ingest]);
    assert!(partial.error.unwrap().starts_with("transform"));
    assert!(partial.outputs.contains_key("raw/series.json"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_macroprice");
    let config = bundled_dir().join("config.toml");
    let out = TempDir::new().unwrap();

    let status = Command::new(bin)
        .args(["fit-dfm", "--k", "0,2", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = Command::new(bin)
        .args(["price", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));

    let status = Command::new(bin)
        .args(["ingest", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.path().join("raw/series.json").is_file());

    let help = Command::new(bin).arg("--help").output().unwrap();
    let text = String::from_utf8(help.stdout).unwrap();
    for default in ["drop_threshold", "0.30", "max_iter", "500", "Exit codes"] {
        assert!(text.contains(default), "--help lacks `{default}`");
    }
}

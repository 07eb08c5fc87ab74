use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::stages::{Stage, Workspace};

pub const MANIFEST: &str = "manifest.json";
pub const INCOMPLETE_MANIFEST: &str = "manifest.incomplete.json";

/// Record of a pipeline run. Written as `manifest.json` only when every
/// stage completed; a failed run leaves `manifest.incomplete.json` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// SHA-256 of the configuration file as read.
    pub config_hash: String,
    /// Configuration with every default filled in.
    pub config: Value,
    pub completed_stages: Vec<Stage>,
    pub warnings: Vec<String>,
    /// SHA-256 of every artifact, keyed by path relative to the output directory.
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; only recorded on request because it
    /// breaks byte-for-byte reproducibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub record_timings: bool,
}

/// Run every stage in order.
pub fn run_pipeline(cfg: &PipelineConfig, config_bytes: &[u8], opts: RunOptions) -> Result<RunManifest> {
    let mut ws = Workspace::new(&cfg.output_dir);
    for stale in [MANIFEST, INCOMPLETE_MANIFEST] {
        let p = ws.root().join(stale);
        if p.exists() {
            std::fs::remove_file(&p).map_err(|e| crate::error::CliError::Io { path: p, source: e })?;
        }
    }
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(config_bytes),
        config: cfg.resolved(),
        completed_stages: Vec::new(),
        warnings: Vec::new(),
        outputs: BTreeMap::new(),
        timings_ms: opts.record_timings.then(BTreeMap::new),
        error: None,
    };
    for stage in Stage::ALL {
        let started = Instant::now();
        match stage.run(cfg, &mut ws) {
            Ok(warnings) => {
                manifest.completed_stages.push(stage);
                manifest.warnings.extend(warnings);
                if let Some(t) = manifest.timings_ms.as_mut() {
                    t.insert(stage.name().to_string(), started.elapsed().as_millis() as u64);
                }
            }
            Err(e) => {
                manifest.error = Some(format!("{}: {e}", stage.name()));
                hash_outputs(&mut manifest, &ws)?;
                ws.write_json(INCOMPLETE_MANIFEST, &manifest)?;
                return Err(e);
            }
        }
    }
    hash_outputs(&mut manifest, &ws)?;
    ws.write_json(MANIFEST, &manifest)?;
    Ok(manifest)
}

fn hash_outputs(manifest: &mut RunManifest, ws: &Workspace) -> Result<()> {
    for rel in ws.written() {
        let path = ws.root().join(rel);
        let bytes = std::fs::read(&path).map_err(|e| crate::error::CliError::Io { path, source: e })?;
        manifest.outputs.insert(rel.clone(), sha256_hex(&bytes));
    }
    Ok(())
}

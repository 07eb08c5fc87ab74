//! Configuration, stage orchestration and run manifests for the `macroprice`
//! command-line pipeline, plus the generator for the bundled synthetic data.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;
pub mod synthetic;

pub use config::{validate_config, Overrides, PipelineConfig};
pub use error::{CliError, Result};
pub use manifest::{run_pipeline, RunManifest, RunOptions};
pub use stages::{Stage, Workspace};

/// Run a single stage against the output directory named in `cfg`.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<Vec<String>> {
    let mut ws = Workspace::new(&cfg.output_dir);
    stage.run(cfg, &mut ws)
}

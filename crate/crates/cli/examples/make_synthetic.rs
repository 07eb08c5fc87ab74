//! Regenerate the bundled example data: `cargo run --example make_synthetic [dir]`.

use std::path::PathBuf;

use macroprice_cli::synthetic::{write_bundle, DEFAULT_SEED};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic"));
    if let Err(e) = write_bundle(&dir, DEFAULT_SEED) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
    println!("wrote {}", dir.display());
}

//! Runs every scenario file in a directory in parallel and prints the
//! summary report. Defaults to the repository's `scenarios/` directory.

use std::path::PathBuf;

use dynbhs::harness::batch;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios")));
    let report = std::env::temp_dir().join("dynbhs-report.txt");
    for line in batch(&dir, &report)? {
        println!("{line}");
    }
    println!("report written to {}", report.display());
    Ok(())
}

//! Runs the 27-configuration desk sweep, prints the summary table and writes
//! the CSV, JSON and violin plot.
//!
//!     cargo run --release --example desk_sweep -- out/

use std::fs::{self, File};
use std::path::PathBuf;

use simtmap::sweep::render_distribution;
use simtmap::{run_sweep, summarize, MappingStrategy, SweepGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "desk_sweep".into()));
    fs::create_dir_all(&dir)?;

    let grid = SweepGrid::desk();
    let strategies = [
        MappingStrategy::Optimal,
        MappingStrategy::Naive,
        MappingStrategy::Fixed(32),
    ];
    let report = run_sweep(&grid, &strategies)?;
    print!("{}", summarize(&report));

    report.write_csv(File::create(dir.join("sweep.csv"))?)?;
    report.write_json(File::create(dir.join("sweep.json"))?)?;
    fs::write(dir.join("distribution.svg"), render_distribution(&report)?)?;
    println!("\n{} rows written to {}", report.rows.len(), dir.display());
    Ok(())
}

//! Runs a small phase-transition experiment from a config file and writes
//! the CSV, JSON and plot files.
//!
//! `cargo run --release --example experiment -- examples/phase_transition.json out/`

use std::path::PathBuf;

use ripless::harness::{run, write_outputs, ExperimentConfig};

fn main() -> ripless::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/phase_transition.json")), PathBuf::from);
    let out = args.next().map_or_else(std::env::temp_dir, PathBuf::from);
    let cfg = ExperimentConfig::from_path(&config)?;
    let result = run(&cfg)?;
    for c in &result.records {
        println!("n {} s {} m {:>3}: success {}", c.n, c.s, c.m, c.metric("success_rate").unwrap_or(f64::NAN));
    }
    let paths = write_outputs(&result, &cfg, &out)?;
    println!("wrote {}", paths.csv.display());
    Ok(())
}

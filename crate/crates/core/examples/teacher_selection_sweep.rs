//! Compare teacher and query selection strategies end to end and plot the
//! learning curves.
//!
//! cargo run --release --example teacher_selection_sweep [steps] [seeds] [out_dir]
//!
//! Defaults: 30000 steps, 3 seeds, a temporary directory.

use std::path::PathBuf;

use multiteacher::harness::{self, ExperimentConfig};

fn main() -> multiteacher::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map(|s| s.parse().expect("steps")).unwrap_or(30_000);
    let seeds: u64 = args.next().map(|s| s.parse().expect("seeds")).unwrap_or(3);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("multiteacher_sweep"));

    let mut config = ExperimentConfig::default();
    config.run.total_steps = steps;
    let seeds: Vec<u64> = (0..seeds).collect();

    println!("{:<24} {:>14} over {} seeds, {steps} steps", "combo", "final return", seeds.len());
    for s in harness::run_sweep(&config, &seeds, &out)? {
        println!("{:<24} {:>7.2} ± {:<5.2}", s.combo, s.final_return_mean, s.final_return_std);
    }
    let plot = out.join("curves.svg");
    harness::plot_dir(&out, &plot)?;
    println!("curves: {}", plot.display());
    Ok(())
}

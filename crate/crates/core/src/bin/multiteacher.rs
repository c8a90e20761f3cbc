use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multiteacher::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "multiteacher", version, about = "Multi-teacher preference learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed and write metrics.csv and manifest.toml.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override a config key, e.g. `--set selection.teacher=max_beta`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every strategy combination over a seed range.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `a..b` (inclusive) or a comma list; defaults to `run.seeds`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Plot learning curves from a run or sweep directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the calibrated teacher width and coverage.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(path: Option<&Path>, overrides: &[String]) -> multiteacher::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p, overrides),
        None => ExperimentConfig::from_toml_with_overrides("", overrides),
    }
}

fn execute(cli: Cli) -> multiteacher::Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => {
            let config = load(config.as_deref(), &overrides)?;
            let outcome = harness::write_run(&config, seed, &out)?;
            let last = outcome.metrics.rows.last().expect("runs emit at least one row");
            println!(
                "seed {seed}: final return {:.3} after {} steps, {} labels -> {}",
                last.ground_truth_return,
                last.env_step,
                outcome.dataset.len(),
                out.display()
            );
        }
        Command::Sweep {
            config,
            seeds,
            out,
            overrides,
        } => {
            let config = load(config.as_deref(), &overrides)?;
            let seeds = match seeds {
                Some(s) => harness::parse_seeds(&s)?,
                None => config.run.seeds.clone(),
            };
            for s in harness::run_sweep(&config, &seeds, &out)? {
                println!(
                    "{:<24} {:>8.3} ± {:.3} over {} seeds",
                    s.combo, s.final_return_mean, s.final_return_std, s.seeds
                );
            }
        }
        Command::Plot { input, out } => {
            harness::plot_dir(&input, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Calibrate { config, overrides } => {
            let config = load(config.as_deref(), &overrides)?;
            let (teachers, calibration) = harness::build_teachers(&config)?;
            match calibration {
                Some(c) => println!(
                    "width {:.6} reaches coverage {:.6} (floor {})",
                    c.width, c.coverage, c.beta_floor
                ),
                None => println!("width fixed by config"),
            }
            for t in teachers.iter() {
                println!("teacher {} centre {:?}", t.id, t.kernel.center);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{parse_combo, ExperimentConfig};
use crate::harness::experiment::{run_experiment_full, RunOutcome};
use crate::harness::metrics::{aggregate, emit_csv, read_csv, RunMetrics};
use crate::harness::plot::render_svg;
use crate::reward_model::population_std;
use crate::teachers::{Calibration, TeacherSet};

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const PREFERENCES_FILE: &str = "preferences.txt";
pub const REWARD_MODEL_FILE: &str = "reward_model.txt";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeacherEntry {
    pub id: usize,
    pub center: Vec<f64>,
    pub width: Vec<f64>,
    pub scale: f64,
}

/// Everything needed to reproduce a run, written next to its metrics.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub calibration: Option<Calibration>,
    pub teachers: Vec<TeacherEntry>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, seeds: Vec<u64>, teachers: &TeacherSet, calibration: Option<Calibration>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            config: config.clone(),
            calibration,
            teachers: teachers
                .iter()
                .map(|t| TeacherEntry {
                    id: t.id,
                    center: t.kernel.center.clone(),
                    width: t.kernel.width.clone(),
                    scale: t.kernel.scale,
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Runs one seed and writes its metrics, manifest, preference dataset and
/// reward-model checkpoint into `out`.
pub fn write_run(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<RunOutcome> {
    let outcome = run_experiment_full(config, seed, |r| r)?;
    create_dir(out)?;
    emit_csv(&outcome.metrics, &out.join(METRICS_FILE))?;
    let manifest = Manifest::new(config, vec![seed], &outcome.teachers, outcome.calibration);
    write_file(&out.join(MANIFEST_FILE), manifest.to_toml())?;

    let mut prefs = Vec::new();
    outcome.dataset.write_to(&mut prefs).expect("write to memory");
    write_file(&out.join(PREFERENCES_FILE), prefs)?;
    let mut model = Vec::new();
    outcome.ensemble.write_checkpoint(&mut model).expect("write to memory");
    write_file(&out.join(REWARD_MODEL_FILE), model)?;
    Ok(outcome)
}

/// Final-performance summary of one strategy combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub combo: String,
    pub seeds: usize,
    pub final_return_mean: f64,
    pub final_return_std: f64,
}

/// Per-seed final returns (mean of the last `window` evaluations).
pub fn final_returns(metrics: &RunMetrics, window: usize) -> Vec<f64> {
    metrics.by_seed().values().map(|m| m.final_return(window)).collect()
}

/// Runs every combination in `config.sweep.combos` over `seeds`. Each
/// combination gets a subdirectory holding the concatenated metrics of all
/// its seeds; `summary.csv` collects final performance.
pub fn run_sweep(config: &ExperimentConfig, seeds: &[u64], out: &Path) -> Result<Vec<SweepSummary>> {
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    create_dir(out)?;
    let mut summaries = Vec::new();
    for combo in &config.sweep.combos {
        let (teacher, sampling) = parse_combo(combo)?;
        let mut c = config.clone();
        c.selection.teacher = teacher;
        c.selection.sampling = sampling;
        let mut metrics = RunMetrics::new();
        let mut manifest = None;
        for &seed in seeds {
            let outcome = run_experiment_full(&c, seed, |r| r)?;
            metrics.extend(outcome.metrics);
            manifest.get_or_insert_with(|| Manifest::new(&c, seeds.to_vec(), &outcome.teachers, outcome.calibration));
        }
        let dir = out.join(combo);
        create_dir(&dir)?;
        emit_csv(&metrics, &dir.join(METRICS_FILE))?;
        write_file(&dir.join(MANIFEST_FILE), manifest.expect("at least one seed").to_toml())?;

        let finals = final_returns(&metrics, c.run.final_window);
        summaries.push(SweepSummary {
            combo: combo.clone(),
            seeds: finals.len(),
            final_return_mean: finals.iter().sum::<f64>() / finals.len() as f64,
            final_return_std: population_std(&finals),
        });
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    for s in &summaries {
        writer.serialize(s).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    write_file(&out.join(SUMMARY_FILE), bytes)?;
    Ok(summaries)
}

/// Metrics files under `dir`: `dir/metrics.csv` itself, else one per
/// immediate subdirectory, sorted by name.
pub fn find_metrics(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let direct = dir.join(METRICS_FILE);
    if direct.is_file() {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        return Ok(vec![(name, direct)]);
    }
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path().join(METRICS_FILE);
        if path.is_file() {
            found.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(Error::EmptyMetrics);
    }
    Ok(found)
}

/// Renders the learning curves found under `input` to an SVG at `out`.
pub fn plot_dir(input: &Path, out: &Path) -> Result<()> {
    let series = find_metrics(input)?
        .into_iter()
        .map(|(name, path)| Ok((name, aggregate(&read_csv(&path)?)?)))
        .collect::<Result<Vec<_>>>()?;
    write_file(out, render_svg(&series, "ground-truth return"))
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward_model::population_std;

/// One evaluation point of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub env_step: u64,
    pub ground_truth_return: f64,
    /// Mean over members of the last update's final-epoch loss; NaN before
    /// the first update.
    pub reward_model_loss: f64,
    /// Running mean of the true β of the teacher asked, over all labels.
    pub mean_selected_beta: f64,
    /// Running fraction of labelled queries that were inter-domain.
    pub inter_domain_fraction: f64,
    /// Mean disagreement over the most recent candidate pool.
    pub disagreement_mean: f64,
}

impl MetricsRow {
    pub fn same_bits(&self, other: &MetricsRow) -> bool {
        self.seed == other.seed
            && self.env_step == other.env_step
            && [
                (self.ground_truth_return, other.ground_truth_return),
                (self.reward_model_loss, other.reward_model_loss),
                (self.mean_selected_beta, other.mean_selected_beta),
                (self.inter_domain_fraction, other.inter_domain_fraction),
                (self.disagreement_mean, other.disagreement_mean),
            ]
            .iter()
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub const CSV_HEADER: &str =
    "seed,env_step,ground_truth_return,reward_model_loss,mean_selected_beta,inter_domain_fraction,disagreement_mean";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub rows: Vec<MetricsRow>,
}

impl RunMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: MetricsRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: RunMetrics) {
        self.rows.extend(other.rows);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Row-by-row bit equality, treating matching NaNs as equal.
    pub fn same_bits(&self, other: &RunMetrics) -> bool {
        self.len() == other.len() && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_bits(b))
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mean ground-truth return over the last `window` rows.
    pub fn final_return(&self, window: usize) -> f64 {
        let tail = &self.rows[self.rows.len().saturating_sub(window)..];
        tail.iter().map(|r| r.ground_truth_return).sum::<f64>() / tail.len() as f64
    }

    /// Rows grouped by seed, in seed order.
    pub fn by_seed(&self) -> BTreeMap<u64, RunMetrics> {
        let mut out: BTreeMap<u64, RunMetrics> = BTreeMap::new();
        for row in &self.rows {
            out.entry(row.seed).or_default().push(*row);
        }
        out
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        if self.rows.is_empty() {
            return Err(Error::EmptyMetrics);
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer
                .serialize(row)
                .map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        writer
            .into_inner()
            .map_err(|e| Error::Config(format!("csv: {e}")))
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(bytes);
        let rows = reader
            .deserialize()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| Error::parse(i + 2, e.to_string())))
            .collect::<Result<Vec<MetricsRow>>>()?;
        Ok(Self { rows })
    }
}

pub fn emit_csv(metrics: &RunMetrics, path: &Path) -> Result<()> {
    let bytes = metrics.to_csv_bytes()?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<RunMetrics> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    RunMetrics::from_csv_bytes(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub env_step: u64,
    pub mean: f64,
    /// Population standard deviation across seeds.
    pub std: f64,
    pub seeds: usize,
}

/// Per-step mean and population standard deviation of ground-truth return
/// across seeds. Every seed must share the same evaluation grid.
pub fn aggregate(metrics: &RunMetrics) -> Result<Vec<AggregatePoint>> {
    let runs = metrics.by_seed();
    let first = runs.values().next().ok_or(Error::EmptyMetrics)?;
    let grid: Vec<u64> = first.rows.iter().map(|r| r.env_step).collect();
    for run in runs.values() {
        if run.rows.iter().map(|r| r.env_step).ne(grid.iter().copied()) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &env_step)| {
            let values: Vec<f64> = runs.values().map(|r| r.rows[i].ground_truth_return).collect();
            AggregatePoint {
                env_step,
                mean: values.iter().sum::<f64>() / values.len() as f64,
                std: population_std(&values),
                seeds: values.len(),
            }
        })
        .collect())
}

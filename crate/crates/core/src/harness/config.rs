use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::{EnvSpec, LINE_WORLD};
use crate::error::{Error, Result};
use crate::learner::LearnerConfig;
use crate::reward_model::TrainConfig;
use crate::selection::{SamplingStrategy, TeacherStrategy};

/// Full description of an experiment.
///
/// Loaded from a TOML file of `[section]` headers and `key = value` lines.
/// Every key has a default, and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub teachers: TeacherConfig,
    pub reward_model: TrainConfig,
    pub selection: SelectionConfig,
    pub learner: LearnerConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub name: String,
    pub segment_len: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            name: LINE_WORLD.to_string(),
            segment_len: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeacherConfig {
    pub count: usize,
    /// Peak rationality `a` of every teacher.
    pub scale: f64,
    /// Diagonal coverage target used to calibrate widths; also the threshold
    /// below which a query counts as inter-domain.
    pub beta_floor: f64,
    /// Explicit uniform width; skips calibration when set.
    pub width: Option<f64>,
    pub probe_points: usize,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            count: 4,
            scale: 1.0,
            beta_floor: 0.5,
            width: None,
            probe_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub sampling: SamplingStrategy,
    pub teacher: TeacherStrategy,
    pub pool_size: usize,
    pub queries_per_session: usize,
    /// Episodes rolled out under the current behaviour policy to supply
    /// candidate segments for each session.
    pub rollout_episodes: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            sampling: SamplingStrategy::Disagreement,
            teacher: TeacherStrategy::Uniform,
            pool_size: 100,
            queries_per_session: 10,
            rollout_episodes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub total_steps: u64,
    pub session_every: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Evaluation rows averaged into the final-performance figure.
    pub final_window: usize,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            total_steps: 100_000,
            session_every: 2_000,
            eval_every: 1_000,
            eval_episodes: 10,
            final_window: 3,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

/// Strategy grid for `sweep`: entries are `<teacher>+<sampling>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub combos: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            combos: vec![
                "uniform+disagreement".into(),
                "max_beta+disagreement".into(),
                "max_beta+similarity".into(),
                "max_beta+hybrid".into(),
            ],
        }
    }
}

pub fn parse_combo(combo: &str) -> Result<(TeacherStrategy, SamplingStrategy)> {
    let (teacher, sampling) = combo
        .split_once('+')
        .ok_or_else(|| Error::Config(format!("combo `{combo}` is not `<teacher>+<sampling>`")))?;
    Ok((teacher.parse()?, sampling.parse()?))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `section.key=value` overrides before
    /// validation. Override values are read as TOML when possible and as
    /// bare strings otherwise.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn env_spec(&self) -> Result<EnvSpec> {
        EnvSpec::by_name(&self.env.name, self.env.segment_len)
    }

    pub fn validate(&self) -> Result<()> {
        self.env_spec()?;
        let t = &self.teachers;
        if t.count == 0 {
            return Err(Error::Config("teachers.count must be at least 1".into()));
        }
        if !(t.scale > 0.0) || !t.scale.is_finite() {
            return Err(Error::Config("teachers.scale must be positive".into()));
        }
        if !(t.beta_floor > 0.0) {
            return Err(Error::Config("teachers.beta_floor must be positive".into()));
        }
        match t.width {
            Some(w) if !(w >= 0.0) || !w.is_finite() => {
                return Err(Error::Config("teachers.width must be non-negative".into()))
            }
            None if t.beta_floor > t.scale => {
                return Err(Error::InfeasibleFloor {
                    floor: t.beta_floor,
                    scale: t.scale,
                })
            }
            _ => {}
        }
        if t.probe_points < 2 {
            return Err(Error::Config("teachers.probe_points must be at least 2".into()));
        }
        self.reward_model.validate()?;
        self.learner.validate()?;
        let s = &self.selection;
        if s.pool_size == 0 || s.rollout_episodes == 0 {
            return Err(Error::Config("selection.pool_size and rollout_episodes must be positive".into()));
        }
        if s.queries_per_session == 0 || s.queries_per_session > s.pool_size {
            return Err(Error::Config(
                "selection.queries_per_session must be in 1..=pool_size".into(),
            ));
        }
        let r = &self.run;
        if r.session_every == 0 || r.eval_every == 0 || r.eval_episodes == 0 || r.final_window == 0 {
            return Err(Error::Config(
                "run.session_every, eval_every, eval_episodes and final_window must be positive".into(),
            ));
        }
        for combo in &self.sweep.combos {
            parse_combo(combo)?;
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut cursor = table;
    for key in parents {
        cursor = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Parses a seed list: `a..b` (inclusive), `a..=b`, or `a,b,c`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list `{text}`"));
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

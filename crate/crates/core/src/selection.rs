//! Query sampling (uniform, disagreement, similarity, hybrid) and teacher
//! selection (uniform, max-β).

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::reward_model::RewardEnsemble;
use crate::teachers::TeacherSet;
use crate::types::{Query, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    Uniform,
    Disagreement,
    Similarity,
    Hybrid,
}

impl SamplingStrategy {
    pub const ALL: [SamplingStrategy; 4] = [
        SamplingStrategy::Uniform,
        SamplingStrategy::Disagreement,
        SamplingStrategy::Similarity,
        SamplingStrategy::Hybrid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingStrategy::Uniform => "uniform",
            SamplingStrategy::Disagreement => "disagreement",
            SamplingStrategy::Similarity => "similarity",
            SamplingStrategy::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown sampling strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherStrategy {
    Uniform,
    MaxBeta,
}

impl TeacherStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            TeacherStrategy::Uniform => "uniform",
            TeacherStrategy::MaxBeta => "max_beta",
        }
    }
}

impl fmt::Display for TeacherStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TeacherStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(TeacherStrategy::Uniform),
            "max_beta" => Ok(TeacherStrategy::MaxBeta),
            other => Err(Error::Config(format!("unknown teacher strategy `{other}`"))),
        }
    }
}

/// A candidate query with both segments' expertise coordinates cached.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub query: Query,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

impl PoolEntry {
    pub fn new(query: Query, env: &EnvSpec) -> Self {
        let g1 = env.map_segment(&query.first);
        let g2 = env.map_segment(&query.second);
        Self { query, g1, g2 }
    }

    /// Euclidean distance between the two segments' expertise coordinates.
    pub fn similarity_distance(&self) -> f64 {
        self.g1
            .iter()
            .zip(&self.g2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryPool {
    entries: Vec<PoolEntry>,
}

impl QueryPool {
    pub fn from_entries(entries: Vec<PoolEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &PoolEntry {
        &self.entries[i]
    }
}

/// Draws `pool_size` queries, each pairing two distinct segments. Pairs may
/// repeat across queries.
pub fn build_pool<R: Rng + ?Sized>(
    segments: &[Segment],
    env: &EnvSpec,
    pool_size: usize,
    rng: &mut R,
) -> Result<QueryPool> {
    if segments.len() < 2 {
        return Err(Error::TooFewSegments(segments.len()));
    }
    let n = segments.len();
    let entries = (0..pool_size)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let query = Query::new(segments[i].clone(), segments[j].clone())?;
            Ok(PoolEntry::new(query, env))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryPool { entries })
}

/// Per-query disagreement and similarity distance over a pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolScores {
    pub disagreement: Vec<f64>,
    pub distance: Vec<f64>,
}

impl PoolScores {
    pub fn compute(pool: &QueryPool, ensemble: &RewardEnsemble) -> Result<Self> {
        let disagreement = pool
            .entries
            .iter()
            .map(|e| ensemble.disagreement_score(&e.query))
            .collect::<Result<Vec<_>>>()?;
        let distance = pool.entries.iter().map(PoolEntry::similarity_distance).collect();
        Ok(Self {
            disagreement,
            distance,
        })
    }
}

/// Min-max normalisation to `[0, 1]`; an all-equal input maps to zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Normalised disagreement minus normalised distance.
pub fn hybrid_scores(disagreement: &[f64], distance: &[f64]) -> Vec<f64> {
    min_max_normalize(disagreement)
        .into_iter()
        .zip(min_max_normalize(distance))
        .map(|(d, s)| d - s)
        .collect()
}

/// Indices of the `n` largest scores, ties to the lower index.
fn top_n(scores: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// Picks `n` pool indices given precomputed scores.
pub fn select_with_scores<R: Rng + ?Sized>(
    scores: &PoolScores,
    strategy: SamplingStrategy,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let available = scores.distance.len();
    if n > available {
        return Err(Error::PoolTooSmall {
            requested: n,
            available,
        });
    }
    Ok(match strategy {
        SamplingStrategy::Uniform => index::sample(rng, available, n).into_vec(),
        SamplingStrategy::Disagreement => top_n(&scores.disagreement, n),
        SamplingStrategy::Similarity => {
            let negated: Vec<f64> = scores.distance.iter().map(|d| -d).collect();
            top_n(&negated, n)
        }
        SamplingStrategy::Hybrid => top_n(&hybrid_scores(&scores.disagreement, &scores.distance), n),
    })
}

/// Picks `n` pool indices under `strategy`, best first for the scored
/// strategies.
pub fn select_queries<R: Rng + ?Sized>(
    pool: &QueryPool,
    strategy: SamplingStrategy,
    n: usize,
    ensemble: &RewardEnsemble,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n > pool.len() {
        return Err(Error::PoolTooSmall {
            requested: n,
            available: pool.len(),
        });
    }
    let scores = match strategy {
        SamplingStrategy::Disagreement | SamplingStrategy::Hybrid => PoolScores::compute(pool, ensemble)?,
        _ => PoolScores {
            disagreement: vec![0.0; pool.len()],
            distance: pool.entries.iter().map(PoolEntry::similarity_distance).collect(),
        },
    };
    select_with_scores(&scores, strategy, n, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeacherChoice {
    pub id: usize,
    /// The chosen teacher's true β on the query. Known to the simulator
    /// only.
    pub beta: f64,
}

/// First index of the maximum.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn select_teacher<R: Rng + ?Sized>(
    teachers: &TeacherSet,
    g1: &[f64],
    g2: &[f64],
    strategy: TeacherStrategy,
    rng: &mut R,
) -> Result<TeacherChoice> {
    let betas = teachers.betas(g1, g2)?;
    let id = match strategy {
        TeacherStrategy::Uniform => rng.gen_range(0..teachers.len()),
        TeacherStrategy::MaxBeta => argmax_lowest(&betas),
    };
    Ok(TeacherChoice { id, beta: betas[id] })
}

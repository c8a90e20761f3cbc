//! Tabular value learner trained on the learned reward, with a replay buffer
//! that is relabelled whenever the reward model changes.
//!
//! The buffer only ever stores model-assigned rewards, so nothing on the
//! update path can read the environment's ground truth.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::reward_model::RewardEnsemble;
use crate::selection::argmax_lowest;

#[derive(Debug, Clone, PartialEq)]
pub struct StoredTransition {
    pub state: Vec<f64>,
    pub action: usize,
    pub next_state: Vec<f64>,
    pub labeled_reward: f64,
}

/// Fixed-capacity ring buffer; the oldest entry is overwritten when full.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<StoredTransition>,
    next: usize,
    max_reward: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            max_reward: f64::NEG_INFINITY,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Largest reward pushed since the last relabel; an upper bound on the
    /// rewards currently stored.
    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn push(&mut self, transition: StoredTransition) {
        self.max_reward = self.max_reward.max(transition.labeled_reward);
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredTransition> {
        self.items.iter()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &StoredTransition {
        &self.items[rng.gen_range(0..self.items.len())]
    }
}

/// Memoised ensemble-mean reward. Identical (state, action) inputs map to
/// the same bits as a fresh prediction, so a cache hit is exact.
#[derive(Debug, Default)]
pub struct RewardCache {
    values: HashMap<(Vec<u64>, usize), f64>,
}

impl RewardCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }

    pub fn get(&mut self, ensemble: &RewardEnsemble, state: &[f64], action: usize) -> Result<f64> {
        let key = (state.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), action);
        if let Some(v) = self.values.get(&key) {
            return Ok(*v);
        }
        let v = ensemble.mean_reward(state, action)?;
        self.values.insert(key, v);
        Ok(v)
    }
}

/// Rewrites every stored reward with the ensemble-mean prediction. Returns
/// the number of entries rewritten.
pub fn relabel_buffer(buffer: &mut ReplayBuffer, ensemble: &RewardEnsemble) -> Result<usize> {
    let mut cache = RewardCache::new();
    let mut max_reward = f64::NEG_INFINITY;
    for item in buffer.items.iter_mut() {
        item.labeled_reward = cache.get(ensemble, &item.state, item.action)?;
        max_reward = max_reward.max(item.labeled_reward);
    }
    buffer.max_reward = max_reward;
    Ok(buffer.items.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps over which ε decays linearly from start to end.
    pub epsilon_decay_steps: u64,
    pub replay_capacity: usize,
    /// Backups per environment step.
    pub batch_size: usize,
    /// Back up rewards relative to the largest reward in the buffer. Every
    /// shifted reward is then non-positive, so the zero-initialised entries of
    /// untried actions look at least as good as anything seen, whatever the
    /// scale or offset of the reward. A constant shift leaves the greedy
    /// policy unchanged.
    pub optimistic: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 20_000,
            replay_capacity: 50_000,
            batch_size: 32,
            optimistic: true,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must be in (0, 1]".into()));
        }
        if !unit(self.gamma) {
            return Err(Error::Config("gamma must be in [0, 1]".into()));
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) || self.epsilon_end > self.epsilon_start {
            return Err(Error::Config("need 0 <= epsilon_end <= epsilon_start <= 1".into()));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 {
            return Err(Error::Config("replay_capacity and batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// ε-greedy tabular action-value learner over an environment's cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueLearner {
    env: EnvSpec,
    config: LearnerConfig,
    q: Vec<f64>,
    steps: u64,
}

impl ValueLearner {
    pub fn new(env: &EnvSpec, config: LearnerConfig) -> Self {
        Self {
            q: vec![0.0; env.cell_count() * env.action_count],
            env: env.clone(),
            config,
            steps: 0,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        let c = &self.config;
        if c.epsilon_decay_steps == 0 {
            return c.epsilon_end;
        }
        if self.steps >= c.epsilon_decay_steps {
            return c.epsilon_end;
        }
        let frac = self.steps as f64 / c.epsilon_decay_steps as f64;
        c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac
    }

    /// Advances the exploration schedule by one environment step.
    pub fn tick(&mut self) {
        self.steps += 1;
    }

    pub fn values(&self, observation: &[f64]) -> &[f64] {
        let n = self.env.action_count;
        let cell = self.env.cell_index(observation);
        &self.q[cell * n..(cell + 1) * n]
    }

    pub fn values_mut(&mut self, observation: &[f64]) -> &mut [f64] {
        let n = self.env.action_count;
        let cell = self.env.cell_index(observation);
        &mut self.q[cell * n..(cell + 1) * n]
    }

    pub fn table(&self) -> &[f64] {
        &self.q
    }

    pub fn act<R: Rng + ?Sized>(&self, observation: &[f64], rng: &mut R) -> usize {
        let explore: f64 = rng.gen();
        if explore < self.epsilon() {
            rng.gen_range(0..self.env.action_count)
        } else {
            argmax_lowest(self.values(observation))
        }
    }

    /// One-step Q-learning backups on `batch_size` transitions drawn with
    /// replacement. Returns the mean absolute TD error.
    pub fn learn_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<f64> {
        if buffer.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = self.env.action_count;
        let shift = if self.config.optimistic { buffer.max_reward } else { 0.0 };
        let mut total = 0.0;
        for _ in 0..batch_size {
            let t = buffer.sample(rng);
            let next_cell = self.env.cell_index(&t.next_state);
            let best_next = self.q[next_cell * n..(next_cell + 1) * n]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let idx = self.env.cell_index(&t.state) * n + t.action;
            let td = t.labeled_reward - shift + self.config.gamma * best_next - self.q[idx];
            self.q[idx] += self.config.alpha * td;
            total += td.abs();
        }
        Ok(total / batch_size as f64)
    }

    pub fn policy_snapshot(&self) -> GreedyPolicy {
        GreedyPolicy {
            env: self.env.clone(),
            q: self.q.clone(),
        }
    }
}

/// Frozen greedy policy; ties go to the lowest action index.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPolicy {
    env: EnvSpec,
    q: Vec<f64>,
}

impl GreedyPolicy {
    pub fn action(&self, observation: &[f64]) -> usize {
        let n = self.env.action_count;
        let cell = self.env.cell_index(observation);
        argmax_lowest(&self.q[cell * n..(cell + 1) * n])
    }
}

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::net::RewardNet;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{PreferenceDataset, PreferenceRecord, Query};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub ensemble_size: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs_per_update: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 3,
            hidden: vec![32, 32],
            learning_rate: 3e-4,
            batch_size: 32,
            epochs_per_update: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be finite and non-negative".into()));
        }
        if self.batch_size == 0 || self.epochs_per_update == 0 {
            return Err(Error::Config("batch_size and epochs_per_update must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Member {
    net: RewardNet,
    optimizer: Adam,
}

/// Independently initialised reward predictors trained on the same labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardEnsemble {
    members: Vec<Member>,
}

impl RewardEnsemble {
    pub fn new(obs_dim: usize, action_count: usize, config: &TrainConfig, rng: &mut RngStream) -> Self {
        let members = (0..config.ensemble_size)
            .map(|i| {
                let mut init = rng.fork(i as u64);
                let net = RewardNet::random(obs_dim, action_count, &config.hidden, &mut init);
                let optimizer = Adam::new(net.params().len());
                Member { net, optimizer }
            })
            .collect();
        Self { members }
    }

    pub fn from_nets(nets: Vec<RewardNet>) -> Result<Self> {
        if nets.is_empty() {
            return Err(Error::Config("an ensemble needs at least one member".into()));
        }
        if nets.iter().any(|n| n.sizes() != nets[0].sizes()) {
            return Err(Error::Config("ensemble members must share an architecture".into()));
        }
        Ok(Self {
            members: nets
                .into_iter()
                .map(|net| Member {
                    optimizer: Adam::new(net.params().len()),
                    net,
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, i: usize) -> &RewardNet {
        &self.members[i].net
    }

    pub fn nets(&self) -> impl Iterator<Item = &RewardNet> {
        self.members.iter().map(|m| &m.net)
    }

    pub fn mean_reward(&self, state: &[f64], action: usize) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.members {
            total += m.net.predict_reward(state, action)?;
        }
        Ok(total / self.members.len() as f64)
    }

    /// Population standard deviation of the members' preference
    /// probabilities on `query`. Lies in `[0, 0.5]`.
    pub fn disagreement_score(&self, query: &Query) -> Result<f64> {
        let probs = self
            .members
            .iter()
            .map(|m| m.net.pref_prob_hat(query))
            .collect::<Result<Vec<_>>>()?;
        Ok(population_std(&probs))
    }

    /// Trains every member for `epochs_per_update` epochs over its own
    /// shuffle of the dataset. Returns each member's mean loss over its last
    /// epoch.
    pub fn train_update(
        &mut self,
        dataset: &PreferenceDataset,
        config: &TrainConfig,
        rng: &mut RngStream,
    ) -> Result<Vec<f64>> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let records: Vec<&PreferenceRecord> = dataset.iter().collect();
        let mut losses = Vec::with_capacity(self.members.len());
        for (i, member) in self.members.iter_mut().enumerate() {
            let mut member_rng = rng.fork(i as u64);
            let mut order: Vec<usize> = (0..records.len()).collect();
            let mut last_epoch = 0.0;
            for _ in 0..config.epochs_per_update {
                order.shuffle(&mut member_rng);
                let mut epoch_loss = 0.0;
                for chunk in order.chunks(config.batch_size) {
                    let batch: Vec<&PreferenceRecord> = chunk.iter().map(|&j| records[j]).collect();
                    let (loss, grad) = member.net.loss_and_grad(&batch)?;
                    member
                        .optimizer
                        .step(member.net.params_mut(), &grad, config.learning_rate);
                    epoch_loss += loss * batch.len() as f64;
                }
                last_epoch = epoch_loss / records.len() as f64;
            }
            losses.push(last_epoch);
        }
        Ok(losses)
    }

    /// Writes every member as a header line followed by its parameters.
    ///
    /// ```text
    /// rewardnet member=0 obs_dim=1 action_count=3 sizes=4,32,32,1
    /// 0.12,-0.5,...
    /// ```
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, net) in self.nets().enumerate() {
            let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
            writeln!(
                out,
                "rewardnet member={i} obs_dim={} action_count={} sizes={}",
                net.obs_dim(),
                net.action_count(),
                sizes.join(",")
            )?;
            let params: Vec<String> = net.params().iter().map(|p| p.to_string()).collect();
            writeln!(out, "{}", params.join(","))?;
        }
        Ok(())
    }

    /// Reads a checkpoint written by [`write_checkpoint`](Self::write_checkpoint).
    /// Optimiser state is not stored and starts fresh.
    pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Self> {
        let lines: Vec<String> = input
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::parse(0, e.to_string()))?;
        let mut nets = Vec::new();
        for (pair_idx, pair) in lines.chunks(2).enumerate() {
            let lineno = pair_idx * 2 + 1;
            if pair.len() != 2 {
                return Err(Error::parse(lineno, "header without parameters"));
            }
            let fields: HashMap<&str, &str> = pair[0]
                .split_whitespace()
                .skip(1)
                .filter_map(|kv| kv.split_once('='))
                .collect();
            if !pair[0].starts_with("rewardnet ") {
                return Err(Error::parse(lineno, "expected `rewardnet` header"));
            }
            let get = |key: &str| {
                fields
                    .get(key)
                    .copied()
                    .ok_or_else(|| Error::parse(lineno, format!("missing `{key}`")))
            };
            let member: usize = get("member")?
                .parse()
                .map_err(|_| Error::parse(lineno, "bad member index"))?;
            if member != nets.len() {
                return Err(Error::parse(lineno, "members out of order"));
            }
            let obs_dim = get("obs_dim")?
                .parse()
                .map_err(|_| Error::parse(lineno, "bad obs_dim"))?;
            let action_count = get("action_count")?
                .parse()
                .map_err(|_| Error::parse(lineno, "bad action_count"))?;
            let sizes = get("sizes")?
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<Vec<usize>, _>>()
                .map_err(|_| Error::parse(lineno, "bad sizes"))?;
            let params = pair[1]
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::parse(lineno + 1, e.to_string()))?;
            nets.push(RewardNet::from_params(obs_dim, action_count, sizes, params)?);
        }
        Self::from_nets(nets)
    }
}

pub(crate) fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::teachers::pref_prob;
use crate::types::{PreferenceRecord, Query, Segment};

/// Lower bound applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Feed-forward reward predictor r̂(s, a).
///
/// Input is the observation followed by a one-hot action. Hidden layers use
/// tanh; the output is a single linear unit. All weights and biases live in
/// one flat vector, layer by layer, each layer as a row-major `out × in`
/// weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardNet {
    obs_dim: usize,
    action_count: usize,
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl RewardNet {
    pub fn zeros(obs_dim: usize, action_count: usize, hidden: &[usize]) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(obs_dim + action_count);
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Self {
            obs_dim,
            action_count,
            sizes,
            params: vec![0.0; n],
        }
    }

    /// Uniform fan-in initialisation, `U(−1/√fan_in, 1/√fan_in)`.
    pub fn random<R: Rng + ?Sized>(
        obs_dim: usize,
        action_count: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(obs_dim, action_count, hidden);
        let mut offset = 0;
        for w in net.sizes.clone().windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out + fan_out] {
                *p = rng.gen_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn from_params(
        obs_dim: usize,
        action_count: usize,
        sizes: Vec<usize>,
        params: Vec<f64>,
    ) -> Result<Self> {
        let mut net = Self::zeros(obs_dim, action_count, &sizes[1..sizes.len().saturating_sub(1)]);
        if net.sizes != sizes {
            return Err(Error::Config(format!("unsupported layer sizes {sizes:?}")));
        }
        if params.len() != net.params.len() {
            return Err(Error::Dimension {
                expected: net.params.len(),
                actual: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    fn encode(&self, state: &[f64], action: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(state);
        out.extend((0..self.action_count).map(|a| if a == action { 1.0 } else { 0.0 }));
    }

    fn check_input(&self, state: &[f64], action: usize) -> Result<()> {
        if state.len() != self.obs_dim {
            return Err(Error::Dimension {
                expected: self.obs_dim,
                actual: state.len(),
            });
        }
        if action >= self.action_count {
            return Err(Error::Dimension {
                expected: self.action_count,
                actual: action + 1,
            });
        }
        Ok(())
    }

    /// Forward pass writing every layer's activation (input included) into
    /// `acts`, which must hold `sizes.iter().sum()` values.
    fn forward_into(&self, acts: &mut [f64]) {
        let mut offset = 0;
        let mut act_off = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let (prev, rest) = acts[act_off..].split_at_mut(n_in);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            for (o, out) in rest[..n_out].iter_mut().enumerate() {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let z = row.iter().zip(prev.iter()).map(|(a, b)| a * b).sum::<f64>() + biases[o];
                *out = if l == last { z } else { z.tanh() };
            }
            offset += n_in * n_out + n_out;
            act_off += n_in;
        }
    }

    /// Accumulates `d_out · ∂r̂/∂θ` into `grad` given stored activations.
    fn backward_into(&self, acts: &[f64], d_out: f64, grad: &mut [f64], delta: &mut Vec<f64>, next: &mut Vec<f64>) {
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut act_offsets = Vec::with_capacity(n_layers + 1);
        let (mut p, mut a) = (0, 0);
        for w in self.sizes.windows(2) {
            offsets.push(p);
            act_offsets.push(a);
            p += w[0] * w[1] + w[1];
            a += w[0];
        }
        act_offsets.push(a);

        delta.clear();
        delta.push(d_out);
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[act_offsets[l]..act_offsets[l] + n_in];
            let w_off = offsets[l];
            let b_off = w_off + n_in * n_out;
            for (o, &d) in delta.iter().enumerate() {
                grad[b_off + o] += d;
                let g_row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (g, x) in g_row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            next.clear();
            next.resize(n_in, 0.0);
            let weights = &self.params[w_off..w_off + n_in * n_out];
            for (o, &d) in delta.iter().enumerate() {
                for (acc, w) in next.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                    *acc += d * w;
                }
            }
            // tanh'(z) = 1 − tanh(z)²
            for (acc, h) in next.iter_mut().zip(input) {
                *acc *= 1.0 - h * h;
            }
            std::mem::swap(delta, next);
        }
    }

    pub fn predict_reward(&self, state: &[f64], action: usize) -> Result<f64> {
        self.check_input(state, action)?;
        Ok(self.predict_unchecked(state, action))
    }

    pub(crate) fn predict_unchecked(&self, state: &[f64], action: usize) -> f64 {
        let total: usize = self.sizes.iter().sum();
        let mut acts = vec![0.0; total];
        let mut input = Vec::with_capacity(self.sizes[0]);
        self.encode(state, action, &mut input);
        acts[..input.len()].copy_from_slice(&input);
        self.forward_into(&mut acts);
        acts[total - 1]
    }

    /// Sum of per-step predictions over the segment.
    pub fn predict_segment_return(&self, segment: &Segment) -> Result<f64> {
        segment
            .iter()
            .map(|s| self.predict_reward(&s.state, s.action))
            .sum()
    }

    /// Predicted probability that `query.first` is preferred, with unit
    /// rationality.
    pub fn pref_prob_hat(&self, query: &Query) -> Result<f64> {
        let r1 = self.predict_segment_return(&query.first)?;
        let r2 = self.predict_segment_return(&query.second)?;
        Ok(pref_prob(1.0, r1, r2))
    }

    /// Mean cross-entropy over the batch.
    pub fn ce_loss<'a, I>(&self, batch: I) -> Result<f64>
    where
        I: IntoIterator<Item = &'a PreferenceRecord>,
    {
        let mut total = 0.0;
        let mut n = 0usize;
        for record in batch {
            let r1 = self.predict_segment_return(&record.query.first)?;
            let r2 = self.predict_segment_return(&record.query.second)?;
            total += record_loss(record, r1 - r2).0;
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(total / n as f64)
    }

    /// Mean cross-entropy over the batch and its gradient w.r.t. every
    /// parameter.
    ///
    /// Repeated (state, action) inputs are evaluated once: their output
    /// gradients are summed and backpropagated together, which gives the
    /// same gradient as per-step backprop.
    pub fn loss_and_grad(&self, batch: &[&PreferenceRecord]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let total_acts: usize = self.sizes.iter().sum();
        let in_dim = self.sizes[0];

        let mut index: HashMap<(Vec<u64>, usize), usize> = HashMap::new();
        let mut acts: Vec<f64> = Vec::new();
        let mut step_ids: Vec<usize> = Vec::new();
        let mut input = Vec::with_capacity(in_dim);
        for record in batch {
            for segment in [&record.query.first, &record.query.second] {
                for step in segment.iter() {
                    self.check_input(&step.state, step.action)?;
                    let key = (
                        step.state.iter().map(|v| v.to_bits()).collect(),
                        step.action,
                    );
                    let next_id = index.len();
                    let id = *index.entry(key).or_insert_with(|| {
                        self.encode(&step.state, step.action, &mut input);
                        let start = acts.len();
                        acts.resize(start + total_acts, 0.0);
                        acts[start..start + in_dim].copy_from_slice(&input);
                        self.forward_into(&mut acts[start..]);
                        next_id
                    });
                    step_ids.push(id);
                }
            }
        }

        let out_of = |id: usize| acts[id * total_acts + total_acts - 1];
        let mut d_outputs = vec![0.0; index.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let mut cursor = 0;
        for record in batch {
            let k1 = record.query.first.len();
            let k2 = record.query.second.len();
            let ids1 = &step_ids[cursor..cursor + k1];
            let ids2 = &step_ids[cursor + k1..cursor + k1 + k2];
            cursor += k1 + k2;
            let r1: f64 = ids1.iter().map(|&i| out_of(i)).sum();
            let r2: f64 = ids2.iter().map(|&i| out_of(i)).sum();
            let (l, d_diff) = record_loss(record, r1 - r2);
            loss += l * scale;
            for &i in ids1 {
                d_outputs[i] += d_diff * scale;
            }
            for &i in ids2 {
                d_outputs[i] -= d_diff * scale;
            }
        }

        let mut grad = vec![0.0; self.params.len()];
        let mut delta = Vec::new();
        let mut next = Vec::new();
        for (id, &d) in d_outputs.iter().enumerate() {
            if d != 0.0 {
                self.backward_into(&acts[id * total_acts..(id + 1) * total_acts], d, &mut grad, &mut delta, &mut next);
            }
        }
        Ok((loss, grad))
    }
}

/// Loss of one record given `diff = r̂(σ1) − r̂(σ2)`, and its derivative with
/// respect to `diff`. A clamped log term contributes no gradient.
fn record_loss(record: &PreferenceRecord, diff: f64) -> (f64, f64) {
    let p1 = pref_prob(1.0, diff, 0.0);
    let p2 = pref_prob(1.0, 0.0, diff);
    let (mu1, mu2) = (record.label.mu1(), record.label.mu2());
    let mut loss = 0.0;
    let mut d = 0.0;
    if mu1 != 0.0 {
        loss -= mu1 * p1.max(PROB_CLAMP).ln();
        if p1 > PROB_CLAMP {
            d -= mu1 * p2;
        }
    }
    if mu2 != 0.0 {
        loss -= mu2 * p2.max(PROB_CLAMP).ln();
        if p2 > PROB_CLAMP {
            d += mu2 * p1;
        }
    }
    (loss, d)
}

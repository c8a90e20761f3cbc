//! Small discrete environments with exact ground-truth reward.
//!
//! Both environments observe normalised coordinates in `[0, 1]`, start in the
//! lower-left corner and reward proximity to the far end, so the optimal
//! episode return has a closed form.

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{Segment, Transition};

pub const LINE_WORLD: &str = "line_world";
pub const GRID_NAV: &str = "grid_nav";

/// LineWorld actions.
pub const LEFT: usize = 0;
pub const STAY: usize = 1;
pub const RIGHT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    /// `cells` positions on a line; actions {LEFT, STAY, RIGHT}.
    LineWorld { cells: usize },
    /// `side`×`side` grid; actions {LEFT, RIGHT, DOWN, UP, STAY}; goal at the
    /// far corner.
    GridNav { side: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: String,
    pub kind: EnvKind,
    pub obs_dim: usize,
    pub action_count: usize,
    pub episode_len: usize,
    pub g_dim: usize,
    pub segment_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub observation: Vec<f64>,
    pub step_index: usize,
    pub done: bool,
    coords: [usize; 2],
}

impl EnvState {
    pub fn coords(&self) -> [usize; 2] {
        self.coords
    }
}

impl EnvSpec {
    pub fn line_world() -> Self {
        Self {
            name: LINE_WORLD.to_string(),
            kind: EnvKind::LineWorld { cells: 21 },
            obs_dim: 1,
            action_count: 3,
            episode_len: 50,
            g_dim: 1,
            segment_len: 10,
        }
    }

    pub fn grid_nav() -> Self {
        Self {
            name: GRID_NAV.to_string(),
            kind: EnvKind::GridNav { side: 11 },
            obs_dim: 2,
            action_count: 5,
            episode_len: 50,
            g_dim: 2,
            segment_len: 10,
        }
    }

    pub fn by_name(name: &str, segment_len: usize) -> Result<Self> {
        let spec = match name {
            LINE_WORLD => Self::line_world(),
            GRID_NAV => Self::grid_nav(),
            other => return Err(Error::UnknownEnv(other.to_string())),
        };
        spec.with_segment_len(segment_len)
    }

    pub fn with_segment_len(mut self, k: usize) -> Result<Self> {
        if k == 0 || !self.episode_len.is_multiple_of(k) {
            return Err(Error::Config(format!(
                "episode length {} is not a multiple of segment length {k}",
                self.episode_len
            )));
        }
        self.segment_len = k;
        Ok(self)
    }

    fn side(&self) -> usize {
        match self.kind {
            EnvKind::LineWorld { cells } => cells,
            EnvKind::GridNav { side } => side,
        }
    }

    fn observe(&self, coords: [usize; 2]) -> Vec<f64> {
        let scale = (self.side() - 1) as f64;
        coords[..self.obs_dim]
            .iter()
            .map(|&c| c as f64 / scale)
            .collect()
    }

    fn coords_of(&self, observation: &[f64]) -> [usize; 2] {
        let scale = (self.side() - 1) as f64;
        let mut coords = [0; 2];
        for (c, &o) in coords.iter_mut().zip(observation) {
            *c = (o * scale).round().clamp(0.0, scale) as usize;
        }
        coords
    }

    fn apply(&self, coords: [usize; 2], action: usize) -> [usize; 2] {
        let max = self.side() - 1;
        let [x, y] = coords;
        match self.kind {
            EnvKind::LineWorld { .. } => match action {
                LEFT => [x.saturating_sub(1), y],
                STAY => [x, y],
                _ => [(x + 1).min(max), y],
            },
            EnvKind::GridNav { .. } => match action {
                0 => [x.saturating_sub(1), y],
                1 => [(x + 1).min(max), y],
                2 => [x, y.saturating_sub(1)],
                3 => [x, (y + 1).min(max)],
                _ => [x, y],
            },
        }
    }

    /// Reward of the cell reached by taking `action` from `coords`.
    fn reward_at(&self, coords: [usize; 2]) -> f64 {
        let max = (self.side() - 1) as f64;
        match self.kind {
            EnvKind::LineWorld { .. } => coords[0] as f64 / max,
            EnvKind::GridNav { .. } => {
                let distance = (max - coords[0] as f64) + (max - coords[1] as f64);
                1.0 - distance / (2.0 * max)
            }
        }
    }

    pub fn reset<R: Rng + ?Sized>(&self, _rng: &mut R) -> EnvState {
        let coords = [0, 0];
        EnvState {
            observation: self.observe(coords),
            step_index: 0,
            done: false,
            coords,
        }
    }

    /// Advances one step and returns the ground-truth reward, which is meant
    /// for evaluation only.
    ///
    /// Panics if `state` is done or `action` is out of range.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &EnvState,
        action: usize,
        _rng: &mut R,
    ) -> (EnvState, f64) {
        assert!(!state.done, "stepped a finished episode");
        assert!(
            action < self.action_count,
            "action {action} out of range for {}",
            self.name
        );
        let coords = self.apply(state.coords, action);
        let step_index = state.step_index + 1;
        let next = EnvState {
            observation: self.observe(coords),
            step_index,
            done: step_index >= self.episode_len,
            coords,
        };
        (next, self.reward_at(coords))
    }

    /// Ground-truth reward r(s, a) on an observation.
    pub fn ground_truth(&self, observation: &[f64], action: usize) -> f64 {
        self.reward_at(self.apply(self.coords_of(observation), action))
    }

    /// Number of distinct observations; observations index cells exactly.
    pub fn cell_count(&self) -> usize {
        self.side().pow(self.obs_dim as u32)
    }

    pub fn cell_index(&self, observation: &[f64]) -> usize {
        let [x, y] = self.coords_of(observation);
        x + y * self.side()
    }

    /// Every reachable (observation, action) pair, cell-major.
    pub fn state_actions(&self) -> Vec<(Vec<f64>, usize)> {
        let side = self.side();
        let mut out = Vec::with_capacity(self.cell_count() * self.action_count);
        for cell in 0..self.cell_count() {
            let coords = [cell % side, cell / side];
            let obs = self.observe(coords);
            for a in 0..self.action_count {
                out.push((obs.clone(), a));
            }
        }
        out
    }

    /// Return of the optimal policy: head straight for the far end, then stay.
    pub fn optimal_return(&self) -> f64 {
        let max = self.side() - 1;
        let distance = max * self.obs_dim;
        (1..=self.episode_len)
            .map(|t| t.min(distance) as f64 / distance as f64)
            .sum()
    }

    /// Mean of the segment's states, per coordinate. Observations are already
    /// normalised, so the result lies in `[0, 1]^g_dim`.
    ///
    /// Panics on a segment whose observation size does not match.
    pub fn map_segment(&self, segment: &Segment) -> Vec<f64> {
        assert_eq!(segment.obs_dim(), self.obs_dim, "segment from another env");
        let mut g = vec![0.0; self.g_dim];
        for step in segment.iter() {
            for (acc, v) in g.iter_mut().zip(&step.state) {
                *acc += v;
            }
        }
        let k = segment.len() as f64;
        g.iter_mut().for_each(|v| *v /= k);
        g
    }
}

/// Runs `n_episodes` episodes under `policy` and cuts each one into
/// `episode_len / segment_len` chained segments.
pub fn rollout_segments<R, P>(
    spec: &EnvSpec,
    mut policy: P,
    rng: &mut R,
    n_episodes: usize,
) -> Vec<Segment>
where
    R: Rng + ?Sized,
    P: FnMut(&[f64], &mut R) -> usize,
{
    let per_episode = spec.episode_len / spec.segment_len;
    let mut segments = Vec::with_capacity(n_episodes * per_episode);
    for _ in 0..n_episodes {
        let mut state = spec.reset(rng);
        let mut steps = Vec::with_capacity(spec.segment_len);
        while !state.done {
            let action = policy(&state.observation, rng);
            let (next, _) = spec.step(&state, action, rng);
            steps.push(Transition::new(
                state.observation.clone(),
                action,
                next.observation.clone(),
            ));
            if steps.len() == spec.segment_len {
                let segment = Segment::new(std::mem::take(&mut steps))
                    .expect("rollout produces chained segments");
                segments.push(segment);
            }
            state = next;
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::RngStream;
    use crate::types::segment_return;

    fn at_cell(spec: &EnvSpec, x: usize, y: usize) -> EnvState {
        let coords = [x, y];
        EnvState {
            observation: spec.observe(coords),
            step_index: 0,
            done: false,
            coords,
        }
    }

    fn constant_segment(value: f64, k: usize) -> Segment {
        Segment::new(
            (0..k)
                .map(|_| Transition::new(vec![value], STAY, vec![value]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn line_world_resets_to_origin() {
        let spec = EnvSpec::line_world();
        let s = spec.reset(&mut RngStream::new(0, 0));
        assert_eq!(s.observation, vec![0.0]);
        assert_eq!(s.step_index, 0);
        assert!(!s.done);
    }

    #[test]
    fn line_world_right_from_three() {
        let spec = EnvSpec::line_world();
        let mut rng = RngStream::new(0, 0);
        let (next, r) = spec.step(&at_cell(&spec, 3, 0), RIGHT, &mut rng);
        assert_eq!(next.coords()[0], 4);
        assert_eq!(r, 4.0 / 20.0);
        assert_eq!(spec.ground_truth(&[3.0 / 20.0], RIGHT), 4.0 / 20.0);
    }

    #[test]
    fn line_world_clamps_at_left_wall() {
        let spec = EnvSpec::line_world();
        let (next, r) = spec.step(&at_cell(&spec, 0, 0), LEFT, &mut RngStream::new(0, 0));
        assert_eq!(next.coords()[0], 0);
        assert_eq!(r, 0.0);
    }

    #[test]
    #[should_panic]
    fn stepping_done_state_panics() {
        let spec = EnvSpec::line_world();
        let mut s = at_cell(&spec, 0, 0);
        s.done = true;
        spec.step(&s, RIGHT, &mut RngStream::new(0, 0));
    }

    #[test]
    fn episode_terminates_at_episode_len() {
        let spec = EnvSpec::line_world();
        let mut rng = RngStream::new(0, 0);
        let mut s = spec.reset(&mut rng);
        for _ in 0..spec.episode_len {
            s = spec.step(&s, RIGHT, &mut rng).0;
        }
        assert!(s.done);
        assert_eq!(s.step_index, 50);
    }

    #[test]
    fn grid_nav_reward_and_optimum() {
        let spec = EnvSpec::grid_nav();
        assert_eq!(spec.ground_truth(&[1.0, 1.0], 4), 1.0);
        assert_eq!(spec.ground_truth(&[0.0, 0.0], 4), 0.0);
        let (next, r) = spec.step(&at_cell(&spec, 5, 5), 1, &mut RngStream::new(0, 0));
        assert_eq!(next.coords(), [6, 5]);
        assert!((r - (1.0 - 9.0 / 20.0)).abs() < 1e-15);
        assert!((spec.optimal_return() - 40.5).abs() < 1e-12);
    }

    #[test]
    fn line_world_optimum_is_clamped_ramp() {
        // 20 ramp steps sum to 210/20, then 30 steps at the wall earn 1 each.
        let expected: f64 = (1..=50).map(|t: usize| t.min(20) as f64 / 20.0).sum();
        assert_eq!(expected, 210.0 / 20.0 + 30.0);
        assert_eq!(EnvSpec::line_world().optimal_return(), expected);
    }

    #[test]
    fn segments_per_episode() {
        let spec = EnvSpec::line_world().with_segment_len(10).unwrap();
        let mut rng = RngStream::new(1, 0);
        let segs = rollout_segments(&spec, |_, _| RIGHT, &mut rng, 3);
        assert_eq!(segs.len(), 15);
        assert!(segs.iter().all(|s| s.len() == 10));

        let mut short = spec.clone();
        short.episode_len = 20;
        let segs = rollout_segments(&short, |_, _| RIGHT, &mut rng, 1);
        assert_eq!(segs.len(), 2);
        assert!(rollout_segments(&spec, |_, _| RIGHT, &mut rng, 0).is_empty());
    }

    #[test]
    fn rollouts_are_deterministic() {
        let spec = EnvSpec::grid_nav();
        let run = || {
            let mut rng = RngStream::new(9, 5);
            rollout_segments(&spec, |_, r: &mut RngStream| r.gen_range(0..5), &mut rng, 4)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn consecutive_rollout_segments_chain() {
        let spec = EnvSpec::line_world();
        let mut rng = RngStream::new(3, 5);
        let segs = rollout_segments(&spec, |_, r: &mut RngStream| r.gen_range(0..3), &mut rng, 1);
        for pair in segs.windows(2) {
            assert_eq!(
                pair[0].steps().last().unwrap().next_state,
                pair[1].steps()[0].state
            );
        }
    }

    #[test]
    fn map_segment_means() {
        let spec = EnvSpec::line_world();
        assert_eq!(spec.map_segment(&constant_segment(0.5, 10)), vec![0.5]);
        assert_eq!(spec.map_segment(&constant_segment(0.0, 10)), vec![0.0]);
        let two = Segment::new(vec![
            Transition::new(vec![0.2], RIGHT, vec![0.6]),
            Transition::new(vec![0.6], STAY, vec![0.6]),
        ])
        .unwrap();
        let g = spec.map_segment(&two);
        assert!((g[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn map_segment_rejects_foreign_segment() {
        EnvSpec::grid_nav().map_segment(&constant_segment(0.5, 10));
    }

    #[test]
    fn bad_segment_len_rejected() {
        assert!(EnvSpec::by_name(LINE_WORLD, 7).is_err());
        assert!(EnvSpec::by_name("cartpole", 10).is_err());
        assert_eq!(EnvSpec::by_name(GRID_NAV, 25).unwrap().segment_len, 25);
    }

    #[test]
    fn cell_indices_cover_state_space() {
        for spec in [EnvSpec::line_world(), EnvSpec::grid_nav()] {
            let pairs = spec.state_actions();
            assert_eq!(pairs.len(), spec.cell_count() * spec.action_count);
            for (i, (obs, _)) in pairs.iter().enumerate().step_by(spec.action_count) {
                assert_eq!(spec.cell_index(obs), i / spec.action_count);
            }
        }
    }

    #[test]
    fn segment_return_matches_env_rewards() {
        let spec = EnvSpec::line_world();
        let mut rng = RngStream::new(0, 0);
        let seg = &rollout_segments(&spec, |_, _| RIGHT, &mut rng, 1)[0];
        let ret = segment_return(seg, |s, a| spec.ground_truth(s, a));
        let expected: f64 = (1..=10).map(|t| t as f64 / 20.0).sum();
        assert!((ret - expected).abs() < 1e-12);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn g_stays_in_unit_box(seed in 0u64..500, grid in any::<bool>()) {
            let spec = if grid { EnvSpec::grid_nav() } else { EnvSpec::line_world() };
            let n = spec.action_count;
            let mut rng = RngStream::new(seed, 5);
            for seg in rollout_segments(&spec, |_, r: &mut RngStream| r.gen_range(0..n), &mut rng, 2) {
                for v in spec.map_segment(&seg) {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}

use rand::Rng;

use crate::envs::{rollout_segments, EnvSpec};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::metrics::{MetricsRow, RunMetrics};
use crate::learner::{relabel_buffer, GreedyPolicy, LearnerConfig, ReplayBuffer, RewardCache, StoredTransition, ValueLearner};
use crate::reward_model::RewardEnsemble;
use crate::rng::{streams, RngStream};
use crate::selection::{build_pool, select_teacher, select_with_scores, PoolScores};
use crate::teachers::{calibrate_widths, make_teacher_grid, Calibration, TeacherSet};
use crate::types::{PreferenceDataset, PreferenceRecord};

/// Builds the teacher grid for `config`, calibrating the shared width unless
/// one is given explicitly.
pub fn build_teachers(config: &ExperimentConfig) -> Result<(TeacherSet, Option<Calibration>)> {
    let env = config.env_spec()?;
    let t = &config.teachers;
    let width_dims = 2 * env.g_dim;
    match t.width {
        Some(w) => Ok((make_teacher_grid(t.count, env.g_dim, t.scale, &vec![w; width_dims])?, None)),
        None => {
            let template = make_teacher_grid(t.count, env.g_dim, t.scale, &vec![1.0; width_dims])?;
            let calibration = calibrate_widths(&template, t.beta_floor, t.probe_points)?;
            Ok((template.with_uniform_width(calibration.width), Some(calibration)))
        }
    }
}

/// Mean ground-truth return of `policy` over `episodes` episodes.
pub fn evaluate_policy<R, P>(env: &EnvSpec, mut policy: P, episodes: usize, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    P: FnMut(&[f64]) -> usize,
{
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut state = env.reset(rng);
        while !state.done {
            let action = policy(&state.observation);
            let (next, reward) = env.step(&state, action, rng);
            total += reward;
            state = next;
        }
    }
    total / episodes as f64
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub dataset: PreferenceDataset,
    pub ensemble: RewardEnsemble,
    pub policy: GreedyPolicy,
    pub teachers: TeacherSet,
    pub calibration: Option<Calibration>,
}

#[derive(Default)]
struct LabelStats {
    beta_sum: f64,
    inter_domain: usize,
    labels: usize,
    last_loss: Option<f64>,
    last_disagreement: Option<f64>,
}

impl LabelStats {
    fn mean_beta(&self) -> f64 {
        ratio(self.beta_sum, self.labels)
    }

    fn inter_domain_fraction(&self) -> f64 {
        ratio(self.inter_domain as f64, self.labels)
    }
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num / den as f64
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs one seed of `config` and returns its metrics.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunMetrics> {
    Ok(run_experiment_full(config, seed, |r| r)?.metrics)
}

/// Runs one seed of `config`.
///
/// Each environment step's true reward is passed through `observe_reward`
/// and then dropped. The agent only ever trains on the reward model's
/// output, so whatever the hook returns cannot change the run.
pub fn run_experiment_full<F>(config: &ExperimentConfig, seed: u64, mut observe_reward: F) -> Result<RunOutcome>
where
    F: FnMut(f64) -> f64,
{
    config.validate()?;
    let env = config.env_spec()?;
    let (teachers, calibration) = build_teachers(config)?;
    let sel = &config.selection;
    let run = &config.run;

    let mut env_rng = RngStream::new(seed, streams::ENV);
    let mut teacher_rng = RngStream::new(seed, streams::TEACHERS);
    let mut sampler_rng = RngStream::new(seed, streams::SAMPLER);
    let mut learner_rng = RngStream::new(seed, streams::LEARNER);
    let mut init_rng = RngStream::new(seed, streams::MODEL_INIT);
    let mut rollout_rng = RngStream::new(seed, streams::ROLLOUT);
    let mut eval_rng = RngStream::new(seed, streams::EVAL);
    let mut train_rng = RngStream::new(seed, streams::TRAIN);

    let mut ensemble = RewardEnsemble::new(env.obs_dim, env.action_count, &config.reward_model, &mut init_rng);
    let mut learner = ValueLearner::new(&env, config.learner.clone());
    let mut buffer = ReplayBuffer::new(config.learner.replay_capacity);
    let mut cache = RewardCache::new();
    let mut dataset = PreferenceDataset::new();
    let mut stats = LabelStats::default();
    let mut metrics = RunMetrics::new();
    let mut state = env.reset(&mut env_rng);

    for step in 0..=run.total_steps {
        if step < run.total_steps && step % run.session_every == 0 {
            let segments = rollout_segments(&env, |obs, rng| learner.act(obs, rng), &mut rollout_rng, sel.rollout_episodes);
            let pool = build_pool(&segments, &env, sel.pool_size, &mut sampler_rng)?;
            let scores = PoolScores::compute(&pool, &ensemble)?;
            stats.last_disagreement = Some(mean(&scores.disagreement));
            let chosen = select_with_scores(&scores, sel.sampling, sel.queries_per_session, &mut sampler_rng)?;
            for i in chosen {
                let entry = pool.get(i);
                let choice = select_teacher(&teachers, &entry.g1, &entry.g2, sel.teacher, &mut teacher_rng)?;
                let label = teachers.get(choice.id).sample_label(&entry.query, &env, &mut teacher_rng)?;
                stats.beta_sum += choice.beta;
                stats.labels += 1;
                if teachers.is_inter_domain(&entry.g1, &entry.g2, config.teachers.beta_floor)? {
                    stats.inter_domain += 1;
                }
                dataset.append(PreferenceRecord {
                    query: entry.query.clone(),
                    label,
                    teacher_id: choice.id,
                    step_collected: step,
                });
            }
            let losses = ensemble.train_update(&dataset, &config.reward_model, &mut train_rng)?;
            stats.last_loss = Some(mean(&losses));
            cache.clear();
            relabel_buffer(&mut buffer, &ensemble)?;
        }

        if step % run.eval_every == 0 || step == run.total_steps {
            let policy = learner.policy_snapshot();
            let ret = evaluate_policy(&env, |obs| policy.action(obs), run.eval_episodes, &mut eval_rng);
            metrics.push(MetricsRow {
                seed,
                env_step: step,
                ground_truth_return: ret,
                reward_model_loss: stats.last_loss.unwrap_or(f64::NAN),
                mean_selected_beta: stats.mean_beta(),
                inter_domain_fraction: stats.inter_domain_fraction(),
                disagreement_mean: stats.last_disagreement.unwrap_or(f64::NAN),
            });
        }
        if step == run.total_steps {
            break;
        }

        let action = learner.act(&state.observation, &mut learner_rng);
        learner.tick();
        let (next, true_reward) = env.step(&state, action, &mut env_rng);
        observe_reward(true_reward);
        let labeled_reward = cache.get(&ensemble, &state.observation, action)?;
        buffer.push(StoredTransition {
            state: state.observation.clone(),
            action,
            next_state: next.observation.clone(),
            labeled_reward,
        });
        learner.learn_step(&buffer, config.learner.batch_size, &mut learner_rng)?;
        state = if next.done { env.reset(&mut env_rng) } else { next };
    }

    Ok(RunOutcome {
        metrics,
        dataset,
        ensemble,
        policy: learner.policy_snapshot(),
        teachers,
        calibration,
    })
}

/// Trains the value learner on the true reward for `steps` steps; a reference
/// for what the learner can reach when the reward model is perfect.
pub fn train_oracle_learner(env: &EnvSpec, config: &LearnerConfig, seed: u64, steps: u64) -> Result<ValueLearner> {
    let mut env_rng = RngStream::new(seed, streams::ENV);
    let mut learner_rng = RngStream::new(seed, streams::LEARNER);
    let mut learner = ValueLearner::new(env, config.clone());
    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let mut state = env.reset(&mut env_rng);
    for _ in 0..steps {
        let action = learner.act(&state.observation, &mut learner_rng);
        learner.tick();
        let (next, reward) = env.step(&state, action, &mut env_rng);
        buffer.push(StoredTransition {
            state: state.observation.clone(),
            action,
            next_state: next.observation.clone(),
            labeled_reward: reward,
        });
        learner.learn_step(&buffer, config.batch_size, &mut learner_rng)?;
        state = if next.done { env.reset(&mut env_rng) } else { next };
    }
    Ok(learner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::RIGHT;

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.run.total_steps = 600;
        c.run.session_every = 200;
        c.run.eval_every = 250;
        c.run.eval_episodes = 2;
        c.selection.rollout_episodes = 2;
        c.selection.pool_size = 20;
        c.selection.queries_per_session = 4;
        c.reward_model.epochs_per_update = 2;
        c
    }

    #[test]
    fn always_right_scores_optimal_return() {
        let env = EnvSpec::line_world();
        let ret = evaluate_policy(&env, |_| RIGHT, 3, &mut RngStream::new(0, 0));
        assert_eq!(ret, 40.5);
    }

    #[test]
    fn evaluation_grid_includes_final_step() {
        let m = run_experiment(&small_config(), 1).unwrap();
        let steps: Vec<u64> = m.rows.iter().map(|r| r.env_step).collect();
        assert_eq!(steps, vec![0, 250, 500, 600]);
        assert!(m.rows[0].reward_model_loss.is_finite());
        assert!(m.rows.iter().all(|r| r.seed == 1));
    }

    #[test]
    fn label_count_follows_schedule() {
        let out = run_experiment_full(&small_config(), 0, |r| r).unwrap();
        assert_eq!(out.dataset.len(), 3 * 4);
        let collected: Vec<u64> = out.dataset.iter().map(|r| r.step_collected).collect();
        assert_eq!(&collected[..4], &[0; 4]);
        assert_eq!(collected[11], 400);
    }

    #[test]
    fn same_seed_same_rows() {
        let a = run_experiment(&small_config(), 3).unwrap();
        let b = run_experiment(&small_config(), 3).unwrap();
        assert!(a.rows.iter().zip(&b.rows).all(|(x, y)| x.same_bits(y)));
    }

    #[test]
    fn max_beta_never_picks_a_worse_teacher() {
        let mut c = small_config();
        c.selection.teacher = crate::selection::TeacherStrategy::MaxBeta;
        let out = run_experiment_full(&c, 0, |r| r).unwrap();
        let env = c.env_spec().unwrap();
        for rec in out.dataset.iter() {
            let g1 = env.map_segment(&rec.query.first);
            let g2 = env.map_segment(&rec.query.second);
            let betas = out.teachers.betas(&g1, &g2).unwrap();
            assert!(betas.iter().all(|b| *b <= betas[rec.teacher_id]));
        }
    }

    #[test]
    fn explicit_width_skips_calibration() {
        let mut c = ExperimentConfig::default();
        c.teachers.width = Some(2.0);
        let (set, cal) = build_teachers(&c).unwrap();
        assert!(cal.is_none());
        assert!(set.iter().all(|t| t.kernel.width.iter().all(|w| *w == 2.0)));
        let (_, cal) = build_teachers(&ExperimentConfig::default()).unwrap();
        assert!(cal.unwrap().coverage >= 0.5);
    }
}

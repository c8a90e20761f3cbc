//! Train a reward ensemble on labels from one highly rational teacher and
//! check that it ranks (state, action) pairs like the true reward does.
//!
//! cargo run --release --example reward_model_training

use multiteacher::envs::{rollout_segments, EnvSpec, RIGHT};
use multiteacher::harness::spearman;
use multiteacher::reward_model::{RewardEnsemble, TrainConfig};
use multiteacher::rng::RngStream;
use multiteacher::teachers::{BetaKernel, Teacher};
use multiteacher::types::{PreferenceDataset, PreferenceRecord, Query};
use rand::Rng;

fn main() -> multiteacher::Result<()> {
    let env = EnvSpec::line_world();
    let mut rng = RngStream::new(7, 0);

    // Episodes with a random rightward drift, so segments cover the whole line.
    let mut segments = Vec::new();
    for _ in 0..100 {
        let drift: f64 = rng.gen();
        let policy = |_: &[f64], r: &mut RngStream| {
            if r.gen::<f64>() < drift {
                RIGHT
            } else {
                r.gen_range(0..env.action_count)
            }
        };
        segments.extend(rollout_segments(&env, policy, &mut rng, 1));
    }

    // Width zero makes β constant everywhere.
    let teacher = Teacher {
        id: 0,
        kernel: BetaKernel::new(vec![0.5, 0.5], vec![0.0, 0.0], 50.0)?,
    };
    let mut dataset = PreferenceDataset::new();
    while dataset.len() < 1000 {
        let i = rng.gen_range(0..segments.len());
        let j = rng.gen_range(0..segments.len());
        if i == j {
            continue;
        }
        let query = Query::new(segments[i].clone(), segments[j].clone())?;
        let label = teacher.sample_label(&query, &env, &mut rng)?;
        dataset.append(PreferenceRecord {
            query,
            label,
            teacher_id: 0,
            step_collected: 0,
        });
    }

    let config = TrainConfig::default();
    let mut ensemble = RewardEnsemble::new(env.obs_dim, env.action_count, &config, &mut RngStream::new(7, 4));
    let pairs = env.state_actions();
    let truth: Vec<f64> = pairs.iter().map(|(s, a)| env.ground_truth(s, *a)).collect();
    for update in 1..=10 {
        let losses = ensemble.train_update(&dataset, &config, &mut rng)?;
        let predicted = pairs
            .iter()
            .map(|(s, a)| ensemble.mean_reward(s, *a))
            .collect::<multiteacher::Result<Vec<_>>>()?;
        println!(
            "update {update:2}: loss {:.4}  spearman {:.4}",
            losses.iter().sum::<f64>() / losses.len() as f64,
            spearman(&predicted, &truth)
        );
    }
    Ok(())
}

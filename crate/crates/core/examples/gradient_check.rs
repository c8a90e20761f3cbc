//! Compare the reward network's backprop gradient with central finite
//! differences on random networks and random preference records.
//!
//! cargo run --release --example gradient_check

use multiteacher::envs::{rollout_segments, EnvSpec};
use multiteacher::reward_model::{gradient_check, RewardNet};
use multiteacher::rng::RngStream;
use multiteacher::types::{LabelDistribution, PreferenceRecord, Query};
use rand::Rng;

fn main() -> multiteacher::Result<()> {
    let env = EnvSpec::grid_nav();
    let mut rng = RngStream::new(11, 0);
    let segments = rollout_segments(&env, |_, r: &mut RngStream| r.gen_range(0..5), &mut rng, 4);
    let mut worst: f64 = 0.0;
    for n in 0..5 {
        let net = RewardNet::random(env.obs_dim, env.action_count, &[32, 32], &mut rng);
        for _ in 0..5 {
            let i = rng.gen_range(0..segments.len());
            let j = (i + 1 + rng.gen_range(0..segments.len() - 1)) % segments.len();
            let record = PreferenceRecord {
                query: Query::new(segments[i].clone(), segments[j].clone())?,
                label: LabelDistribution::soft(rng.gen())?,
                teacher_id: 0,
                step_collected: 0,
            };
            let check = gradient_check(&net, &record, 1e-4, &mut rng)?;
            worst = worst.max(check.max_rel_error);
            println!(
                "net {n}: {} params checked, max relative error {:.2e}",
                check.checked, check.max_rel_error
            );
        }
    }
    println!("worst {worst:.2e}");
    Ok(())
}

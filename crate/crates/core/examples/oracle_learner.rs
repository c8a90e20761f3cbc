//! Train the value learner on the true reward and compare its greedy policy
//! with the analytic optimum. This isolates the learner from the preference
//! machinery.
//!
//! cargo run --release --example oracle_learner [steps]

use multiteacher::envs::EnvSpec;
use multiteacher::harness::{evaluate_policy, train_oracle_learner};
use multiteacher::learner::LearnerConfig;
use multiteacher::rng::RngStream;

fn main() -> multiteacher::Result<()> {
    let steps: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("steps must be an integer"))
        .unwrap_or(20_000);
    let config = LearnerConfig::default();
    for env in [EnvSpec::line_world(), EnvSpec::grid_nav()] {
        let optimum = env.optimal_return();
        println!("{} (optimum {optimum})", env.name);
        for seed in 0..5 {
            let learner = train_oracle_learner(&env, &config, seed, steps)?;
            let policy = learner.policy_snapshot();
            let ret = evaluate_policy(&env, |obs| policy.action(obs), 10, &mut RngStream::new(seed, 6));
            println!("  seed {seed}: return {ret:.2} ({:.1}% of optimum)", 100.0 * ret / optimum);
        }
    }
    Ok(())
}

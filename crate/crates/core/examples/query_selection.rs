//! Score one candidate pool under every sampling strategy and compare what
//! each picks: how far apart the two segments sit in expertise space, how
//! often no teacher is confident, and how much the ensemble disagrees.
//!
//! cargo run --release --example query_selection

use multiteacher::envs::{rollout_segments, EnvSpec};
use multiteacher::reward_model::{RewardEnsemble, TrainConfig};
use multiteacher::rng::RngStream;
use multiteacher::selection::{build_pool, select_with_scores, PoolScores, SamplingStrategy};
use multiteacher::teachers::{calibrate_widths, make_teacher_grid};
use rand::Rng;

fn main() -> multiteacher::Result<()> {
    let env = EnvSpec::line_world();
    let beta_floor = 0.5;
    let template = make_teacher_grid(4, env.g_dim, 1.0, &[1.0, 1.0])?;
    let calibration = calibrate_widths(&template, beta_floor, 101)?;
    let teachers = template.with_uniform_width(calibration.width);

    let mut rng = RngStream::new(3, 5);
    let segments = rollout_segments(&env, |_, r: &mut RngStream| r.gen_range(0..3), &mut rng, 10);
    let pool = build_pool(&segments, &env, 100, &mut rng)?;
    let ensemble = RewardEnsemble::new(env.obs_dim, env.action_count, &TrainConfig::default(), &mut rng);
    let scores = PoolScores::compute(&pool, &ensemble)?;

    println!("{:<13} {:>10} {:>12} {:>13}", "strategy", "distance", "inter-domain", "disagreement");
    for strategy in SamplingStrategy::ALL {
        let picked = select_with_scores(&scores, strategy, 10, &mut rng)?;
        let mut inter = 0;
        for &i in &picked {
            let e = pool.get(i);
            if teachers.is_inter_domain(&e.g1, &e.g2, beta_floor)? {
                inter += 1;
            }
        }
        let n = picked.len() as f64;
        println!(
            "{:<13} {:>10.4} {:>12.2} {:>13.5}",
            strategy.as_str(),
            picked.iter().map(|&i| scores.distance[i]).sum::<f64>() / n,
            inter as f64 / n,
            picked.iter().map(|&i| scores.disagreement[i]).sum::<f64>() / n,
        );
    }
    Ok(())
}

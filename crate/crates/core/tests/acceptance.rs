//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use multiteacher::envs::{rollout_segments, EnvSpec, RIGHT};
use multiteacher::harness::{
    build_teachers, evaluate_policy, final_returns, run_experiment, spearman, train_oracle_learner,
    welch_one_sided, ExperimentConfig, RunMetrics,
};
use multiteacher::learner::{relabel_buffer, LearnerConfig, ReplayBuffer, StoredTransition};
use multiteacher::reward_model::{gradient_check, RewardEnsemble, RewardNet, TrainConfig};
use multiteacher::rng::RngStream;
use multiteacher::selection::{build_pool, select_with_scores, PoolScores, SamplingStrategy, TeacherStrategy};
use multiteacher::teachers::{BetaKernel, Teacher};
use multiteacher::types::{LabelDistribution, PreferenceDataset, PreferenceRecord, Query, Segment};
use rand::Rng;

const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Segments from episodes that drift right at a random per-episode rate, so
/// the whole line gets covered.
fn drifting_segments(env: &EnvSpec, episodes: usize, rng: &mut RngStream) -> Vec<Segment> {
    let mut out = Vec::new();
    for _ in 0..episodes {
        let drift: f64 = rng.gen();
        let policy = |_: &[f64], r: &mut RngStream| {
            if r.gen::<f64>() < drift {
                RIGHT
            } else {
                r.gen_range(0..env.action_count)
            }
        };
        out.extend(rollout_segments(env, policy, rng, 1));
    }
    out
}

fn random_query(segments: &[Segment], rng: &mut RngStream) -> Query {
    let i = rng.gen_range(0..segments.len());
    let j = (i + 1 + rng.gen_range(0..segments.len() - 1)) % segments.len();
    Query::new(segments[i].clone(), segments[j].clone()).unwrap()
}

struct StrategyRuns {
    uniform: Vec<f64>,
    max_beta: Vec<f64>,
    hybrid: Vec<f64>,
}

fn finals(teacher: TeacherStrategy, sampling: SamplingStrategy) -> Vec<f64> {
    let mut config = ExperimentConfig::default();
    config.selection.teacher = teacher;
    config.selection.sampling = sampling;
    let mut metrics = RunMetrics::new();
    for seed in 0..SEEDS {
        metrics.extend(run_experiment(&config, seed).expect("run succeeds"));
    }
    final_returns(&metrics, config.run.final_window)
}

fn strategy_runs() -> StrategyRuns {
    StrategyRuns {
        uniform: finals(TeacherStrategy::Uniform, SamplingStrategy::Disagreement),
        max_beta: finals(TeacherStrategy::MaxBeta, SamplingStrategy::Disagreement),
        hybrid: finals(TeacherStrategy::MaxBeta, SamplingStrategy::Hybrid),
    }
}

fn teacher_selection(runs: &StrategyRuns) -> Outcome {
    let (mu, mm) = (mean(&runs.uniform), mean(&runs.max_beta));
    let welch = welch_one_sided(&runs.max_beta, &runs.uniform);
    outcome(
        mm >= 1.15 * mu && welch.p_value < 0.05,
        format!(
            "max_beta {mm:.2} vs uniform {mu:.2} (ratio {:.3}, need >= 1.15), Welch t {:.3}, p {:.4} (need < 0.05)",
            mm / mu,
            welch.t,
            welch.p_value
        ),
    )
}

fn hybrid_sampling(runs: &StrategyRuns) -> Outcome {
    let (md, mh) = (mean(&runs.max_beta), mean(&runs.hybrid));
    outcome(
        mh >= 0.95 * md,
        format!("hybrid {mh:.2} vs disagreement {md:.2} (need >= {:.2})", 0.95 * md),
    )
}

fn label_fidelity() -> Outcome {
    let env = EnvSpec::line_world();
    let mut rng = RngStream::new(101, 0);
    let segments = drifting_segments(&env, 40, &mut rng);
    let draws = 100_000;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let target = 0.01 * (50.0f64 / 0.01).powf(k as f64 / 19.0);
        let query = random_query(&segments, &mut rng);
        let g: Vec<f64> = [env.map_segment(&query.first), env.map_segment(&query.second)].concat();
        let center: Vec<f64> = g.iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
        let width: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..3.0)).collect();
        let unit = BetaKernel::new(center.clone(), width.clone(), 1.0).unwrap();
        let scale = target / unit.value(&g[..1], &g[1..]).unwrap();
        let teacher = Teacher {
            id: k,
            kernel: BetaKernel::new(center, width, scale).unwrap(),
        };
        let p = teacher.query_pref_prob(&query, &env).unwrap();
        let wins = (0..draws)
            .filter(|_| teacher.sample_label(&query, &env, &mut rng).unwrap().mu1() == 1.0)
            .count();
        worst = worst.max((wins as f64 / draws as f64 - p).abs());
    }
    outcome(
        worst <= 0.01,
        format!("20 pairs, beta 0.01..50, 1e5 draws each: max |freq - p| {worst:.5} (need <= 0.01)"),
    )
}

fn gradient_correctness() -> Outcome {
    let env = EnvSpec::line_world();
    let mut rng = RngStream::new(202, 0);
    let segments = drifting_segments(&env, 10, &mut rng);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..10 {
        let net = RewardNet::random(env.obs_dim, env.action_count, &[32, 32], &mut rng);
        for _ in 0..10 {
            let record = PreferenceRecord {
                query: random_query(&segments, &mut rng),
                label: LabelDistribution::soft(rng.gen()).unwrap(),
                teacher_id: 0,
                step_collected: 0,
            };
            let check = gradient_check(&net, &record, 1e-4, &mut rng).unwrap();
            worst = worst.max(check.max_rel_error);
            checked += check.checked;
        }
    }
    outcome(
        worst <= 1e-4,
        format!("10 nets x 10 records, {checked} entries: max relative error {worst:.3e} (need <= 1e-4)"),
    )
}

fn reward_identifiability() -> Outcome {
    let env = EnvSpec::line_world();
    let mut rng = RngStream::new(303, 0);
    let segments = drifting_segments(&env, 100, &mut rng);
    let teacher = Teacher {
        id: 0,
        kernel: BetaKernel::new(vec![0.5, 0.5], vec![0.0, 0.0], 50.0).unwrap(),
    };
    let mut dataset = PreferenceDataset::new();
    for _ in 0..1000 {
        let query = random_query(&segments, &mut rng);
        let label = teacher.sample_label(&query, &env, &mut rng).unwrap();
        dataset.append(PreferenceRecord {
            query,
            label,
            teacher_id: 0,
            step_collected: 0,
        });
    }
    let config = TrainConfig::default();
    let mut ensemble = RewardEnsemble::new(env.obs_dim, env.action_count, &config, &mut RngStream::new(303, 4));
    for _ in 0..5 {
        ensemble.train_update(&dataset, &config, &mut rng).unwrap();
    }
    let pairs = env.state_actions();
    let truth: Vec<f64> = pairs.iter().map(|(s, a)| env.ground_truth(s, *a)).collect();
    let predicted: Vec<f64> = pairs.iter().map(|(s, a)| ensemble.mean_reward(s, *a).unwrap()).collect();
    let rho = spearman(&predicted, &truth);
    outcome(
        rho >= 0.9,
        format!("1000 labels at beta 50, {} pairs: Spearman {rho:.4} (need >= 0.9)", pairs.len()),
    )
}

fn similarity_geometry() -> Outcome {
    let config = ExperimentConfig::default();
    let env = config.env_spec().unwrap();
    let (teachers, _) = build_teachers(&config).unwrap();
    let floor = config.teachers.beta_floor;
    let ensemble = RewardEnsemble::new(env.obs_dim, env.action_count, &config.reward_model, &mut RngStream::new(0, 4));
    let (mut inter_u, mut inter_s, mut dist_u, mut dist_s) = (vec![], vec![], vec![], vec![]);
    for seed in 0..10 {
        let mut rng = RngStream::new(seed, 2);
        let segments = rollout_segments(&env, |_, r: &mut RngStream| r.gen_range(0..3), &mut rng, 10);
        let pool = build_pool(&segments, &env, 100, &mut rng).unwrap();
        let scores = PoolScores::compute(&pool, &ensemble).unwrap();
        for (strategy, inter, dist) in [
            (SamplingStrategy::Uniform, &mut inter_u, &mut dist_u),
            (SamplingStrategy::Similarity, &mut inter_s, &mut dist_s),
        ] {
            let picked = select_with_scores(&scores, strategy, 10, &mut rng).unwrap();
            let n = picked.len() as f64;
            let crossing = picked
                .iter()
                .filter(|&&i| teachers.is_inter_domain(&pool.get(i).g1, &pool.get(i).g2, floor).unwrap())
                .count();
            inter.push(crossing as f64 / n);
            dist.push(picked.iter().map(|&i| scores.distance[i]).sum::<f64>() / n);
        }
    }
    let (iu, is, du, ds) = (mean(&inter_u), mean(&inter_s), mean(&dist_u), mean(&dist_s));
    outcome(
        is < iu && ds < du,
        format!("10 pools: inter-domain {is:.3} vs {iu:.3}, g-distance {ds:.4} vs {du:.4} (similarity vs uniform, need strictly lower)"),
    )
}

fn relabel_contract() -> Outcome {
    let env = EnvSpec::line_world();
    let mut rng = RngStream::new(404, 0);
    let segments = drifting_segments(&env, 40, &mut rng);
    let config = TrainConfig::default();
    let mut ensemble = RewardEnsemble::new(env.obs_dim, env.action_count, &config, &mut rng);
    let mut buffer = ReplayBuffer::new(500);
    for seg in &segments {
        for t in seg.iter() {
            buffer.push(StoredTransition {
                state: t.state.clone(),
                action: t.action,
                next_state: t.next_state.clone(),
                labeled_reward: f64::NAN,
            });
        }
    }
    let teacher = Teacher {
        id: 0,
        kernel: BetaKernel::new(vec![0.5, 0.5], vec![0.0, 0.0], 1.0).unwrap(),
    };
    let mut dataset = PreferenceDataset::new();
    let (mut total, mut exact) = (0, 0);
    for _ in 0..3 {
        for _ in 0..20 {
            let query = random_query(&segments, &mut rng);
            let label = teacher.sample_label(&query, &env, &mut rng).unwrap();
            dataset.append(PreferenceRecord {
                query,
                label,
                teacher_id: 0,
                step_collected: 0,
            });
        }
        ensemble.train_update(&dataset, &config, &mut rng).unwrap();
        relabel_buffer(&mut buffer, &ensemble).unwrap();
        for t in buffer.iter() {
            total += 1;
            let fresh = ensemble.mean_reward(&t.state, t.action).unwrap();
            if fresh.to_bits() == t.labeled_reward.to_bits() {
                exact += 1;
            }
        }
    }
    outcome(
        exact == total,
        format!("3 updates x {} entries: {exact}/{total} bit-exact", buffer.len()),
    )
}

fn oracle_learner() -> Outcome {
    let env = EnvSpec::line_world();
    let optimum = env.optimal_return();
    let mut returns = Vec::new();
    for seed in 0..5 {
        let learner = train_oracle_learner(&env, &LearnerConfig::default(), seed, 20_000).unwrap();
        let policy = learner.policy_snapshot();
        returns.push(evaluate_policy(&env, |o| policy.action(o), 10, &mut RngStream::new(seed, 6)));
    }
    let worst = returns.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        worst >= 0.95 * optimum,
        format!("5 seeds, 20000 steps: worst return {worst:.2} of optimum {optimum} (need >= {:.3})", 0.95 * optimum),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_multiteacher");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/line_world.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["run", "--config"])
            .arg(&config)
            .args(["--seed", "7", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("run failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        files.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    outcome(
        files[0] == files[1],
        format!("two `run` invocations, seed 7: {} bytes, identical = {}", files[0].len(), files[0] == files[1]),
    )
}

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let started = Instant::now();
    let runs = strategy_runs();
    let checks: Vec<Check> = vec![
        ("1 teacher selection", Box::new(|| teacher_selection(&runs))),
        ("2 hybrid sampling", Box::new(|| hybrid_sampling(&runs))),
        ("3 label fidelity", Box::new(label_fidelity)),
        ("4 gradient correctness", Box::new(gradient_correctness)),
        ("5 reward identifiability", Box::new(reward_identifiability)),
        ("6 similarity geometry", Box::new(similarity_geometry)),
        ("7 relabel contract", Box::new(relabel_contract)),
        ("8 oracle learner", Box::new(oracle_learner)),
        ("9 determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (name, check) in &checks {
        let t = Instant::now();
        let result = check();
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} passed in {:.0}s",
        checks.len() - failures,
        checks.len(),
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

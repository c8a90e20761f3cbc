//! Evaluate the rationality kernels of a four-teacher grid and watch label
//! frequencies track the Boltzmann preference probability.
//!
//! cargo run --example teacher_kernels

use multiteacher::envs::{EnvSpec, RIGHT, STAY};
use multiteacher::rng::RngStream;
use multiteacher::teachers::{make_teacher_grid, pref_prob};
use multiteacher::types::{Query, Segment, Transition};

fn walk(env: &EnvSpec, start: usize, action: usize) -> multiteacher::Result<Segment> {
    let steps = (0..env.segment_len)
        .map(|i| {
            let cell = |c: usize| vec![c as f64 / 20.0];
            let here = if action == RIGHT { start + i } else { start };
            let next = if action == RIGHT { here + 1 } else { here };
            Transition::new(cell(here), action, cell(next))
        })
        .collect();
    Segment::new(steps)
}

fn main() -> multiteacher::Result<()> {
    let env = EnvSpec::line_world();
    let teachers = make_teacher_grid(4, env.g_dim, 1.0, &[4.0, 4.0])?;

    println!("β on diagonal queries g(σ1) = g(σ2) = t");
    print!("{:>6}", "t");
    for t in teachers.iter() {
        print!("  teacher{}", t.id);
    }
    println!();
    for k in 0..=8 {
        let t = k as f64 / 8.0;
        print!("{t:>6.3}");
        for beta in teachers.betas(&[t], &[t])? {
            print!("{beta:>10.4}");
        }
        println!();
    }

    println!("\npreference for the higher-return segment at β = 0.1, 1, 10");
    for beta in [0.1, 1.0, 10.0] {
        println!("  β = {beta:<4}: {:.4}", pref_prob(beta, 3.0, 1.0));
    }

    // Both segments live near the left end, where teacher 0 is the expert.
    let query = Query::new(walk(&env, 0, RIGHT)?, walk(&env, 4, STAY)?)?;
    let mut rng = RngStream::new(0, 1);
    println!("\nlabel frequency over 20000 draws vs exact probability");
    for teacher in teachers.iter() {
        let p = teacher.query_pref_prob(&query, &env)?;
        let draws = 20_000;
        let wins = (0..draws)
            .filter(|_| teacher.sample_label(&query, &env, &mut rng).map(|l| l.mu1() == 1.0).unwrap_or(false))
            .count();
        println!(
            "  teacher{} β = {:.4}: exact {p:.4}, empirical {:.4}",
            teacher.id,
            teacher.beta_value(&env.map_segment(&query.first), &env.map_segment(&query.second))?,
            wins as f64 / draws as f64
        );
    }
    Ok(())
}

//! Preference-based reinforcement learning with several simulated teachers
//! whose rationality depends on where a query sits.
//!
//! Each teacher answers "which of these two segments is better?" as a
//! Boltzmann-rational chooser whose β is a Gaussian bump over a query
//! feature space. A reward-model ensemble learns from the answers, a tabular
//! Q-learner trains on the model's relabelled rewards, and the harness
//! compares ways of picking queries and teachers.
//!
//! ```
//! use multiteacher::envs::EnvSpec;
//! use multiteacher::teachers::make_teacher_grid;
//!
//! let env = EnvSpec::line_world();
//! let teachers = make_teacher_grid(4, env.g_dim, 1.0, &[5.0, 5.0]).unwrap();
//! let beta = teachers.get(0).beta_value(&[0.125], &[0.125]).unwrap();
//! assert_eq!(beta, 1.0);
//! ```
//!
//! The `examples/` directory has one runnable program per capability.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
pub mod error;
pub mod harness;
pub mod learner;
pub mod reward_model;
pub mod rng;
pub mod selection;
pub mod teachers;
pub mod types;

pub use error::{Error, Result};

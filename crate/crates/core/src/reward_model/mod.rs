//! Ensemble of small MLP reward predictors trained with cross-entropy on
//! pairwise preferences, with hand-written backpropagation.

mod adam;
mod ensemble;
mod gradcheck;
mod net;

pub use adam::Adam;
pub use ensemble::{RewardEnsemble, TrainConfig};
pub use gradcheck::{compare_gradient, gradient_check, relative_error, GradientCheck, FD_STEP, REL_ERROR_FLOOR};
pub use net::{RewardNet, PROB_CLAMP};

pub(crate) use ensemble::population_std;

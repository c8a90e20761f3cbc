use rand::seq::index;
use rand::Rng;

use super::net::RewardNet;
use crate::error::Result;
use crate::types::PreferenceRecord;

pub const FD_STEP: f64 = 1e-5;
/// Parameters compared per check (all of them if the net is smaller).
pub const SAMPLED_PARAMS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub passed: bool,
}

/// Compares the backprop gradient of the single-record loss against central
/// finite differences on a random subset of parameters.
pub fn gradient_check<R: Rng + ?Sized>(
    net: &RewardNet,
    record: &PreferenceRecord,
    tolerance: f64,
    rng: &mut R,
) -> Result<GradientCheck> {
    let (_, analytic) = net.loss_and_grad(&[record])?;
    compare_gradient(net, record, &analytic, tolerance, rng)
}

/// Same as [`gradient_check`] but against a caller-supplied gradient.
pub fn compare_gradient<R: Rng + ?Sized>(
    net: &RewardNet,
    record: &PreferenceRecord,
    analytic: &[f64],
    tolerance: f64,
    rng: &mut R,
) -> Result<GradientCheck> {
    let n = net.params().len();
    let picks = index::sample(rng, n, SAMPLED_PARAMS.min(n));
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in picks.iter() {
        let original = probe.params()[i];
        probe.params_mut()[i] = original + FD_STEP;
        let up = probe.ce_loss([record])?;
        probe.params_mut()[i] = original - FD_STEP;
        let down = probe.ce_loss([record])?;
        probe.params_mut()[i] = original;
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(GradientCheck {
        max_rel_error: worst,
        checked: picks.len(),
        passed: worst <= tolerance,
    })
}

/// Smallest denominator used by [`relative_error`]. Central differences at
/// [`FD_STEP`] carry roundoff near 1e-11, so a gradient entry smaller than
/// this is judged on its absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// `|a − b| / max(|a|, |b|, REL_ERROR_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERROR_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(2.0, 2.0), 0.0);
        assert_eq!(relative_error(1.0, 1.5), 0.5 / 1.5);
        assert_eq!(relative_error(-1.0, 1.0), 2.0);
        // Tiny entries fall back to an absolute comparison.
        approx::assert_relative_eq!(relative_error(0.0, 1e-12), 1e-6, max_relative = 1e-12);
        assert_eq!(relative_error(0.0, 0.0), 0.0);
    }
}

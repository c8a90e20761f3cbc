//! Synthetic Boltzmann-rational teachers whose rationality depends on the
//! query.
//!
//! A teacher's rationality on a query `(σ1, σ2)` is a Gaussian bump over the
//! concatenated expertise coordinates `[g(σ1), g(σ2)]`:
//!
//! ```text
//! β(σ1, σ2) = a · exp(−‖ b ⊙ ([g(σ1), g(σ2)] − c) ‖²)
//! ```
//!
//! and the teacher prefers `σ1` with probability
//! `exp(β·r(σ1)) / (exp(β·r(σ1)) + exp(β·r(σ2)))`.

use rand::Rng;
use serde::Serialize;

use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::types::{segment_return, LabelDistribution, Query};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaKernel {
    pub center: Vec<f64>,
    /// Per-coordinate inverse length scale.
    pub width: Vec<f64>,
    pub scale: f64,
}

impl BetaKernel {
    pub fn new(center: Vec<f64>, width: Vec<f64>, scale: f64) -> Result<Self> {
        if center.len() != width.len() {
            return Err(Error::Dimension {
                expected: center.len(),
                actual: width.len(),
            });
        }
        if !center.len().is_multiple_of(2) {
            return Err(Error::Config(
                "kernel dimension must be twice the expertise dimension".into(),
            ));
        }
        if !(scale > 0.0) {
            return Err(Error::Config(format!("kernel scale must be positive, got {scale}")));
        }
        if width.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("kernel widths must be non-negative".into()));
        }
        Ok(Self {
            center,
            width,
            scale,
        })
    }

    pub fn g_dim(&self) -> usize {
        self.center.len() / 2
    }

    pub fn value(&self, g1: &[f64], g2: &[f64]) -> Result<f64> {
        let d = self.g_dim();
        for g in [g1, g2] {
            if g.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    actual: g.len(),
                });
            }
        }
        let sq: f64 = g1
            .iter()
            .chain(g2)
            .zip(&self.center)
            .zip(&self.width)
            .map(|((x, c), b)| {
                let z = b * (x - c);
                z * z
            })
            .sum();
        Ok(self.scale * (-sq).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Teacher {
    pub id: usize,
    pub kernel: BetaKernel,
}

impl Teacher {
    pub fn beta_value(&self, g1: &[f64], g2: &[f64]) -> Result<f64> {
        self.kernel.value(g1, g2)
    }

    /// Probability that this teacher prefers `query.first`.
    pub fn query_pref_prob(&self, query: &Query, env: &EnvSpec) -> Result<f64> {
        let beta = self.beta_value(&env.map_segment(&query.first), &env.map_segment(&query.second))?;
        let r1 = segment_return(&query.first, |s, a| env.ground_truth(s, a));
        let r2 = segment_return(&query.second, |s, a| env.ground_truth(s, a));
        Ok(pref_prob(beta, r1, r2))
    }

    /// Draws a hard label: outcome 1 with probability `query_pref_prob`.
    pub fn sample_label<R: Rng + ?Sized>(
        &self,
        query: &Query,
        env: &EnvSpec,
        rng: &mut R,
    ) -> Result<LabelDistribution> {
        let p = self.query_pref_prob(query, env)?;
        Ok(draw_label(p, rng))
    }
}

pub(crate) fn draw_label<R: Rng + ?Sized>(p: f64, rng: &mut R) -> LabelDistribution {
    let u: f64 = rng.gen();
    LabelDistribution::hard(u < p)
}

/// Boltzmann preference for the first option, shifted by the larger logit so
/// large `β·r` never overflows.
pub fn pref_prob(beta: f64, r1: f64, r2: f64) -> f64 {
    let x1 = beta * r1;
    let x2 = beta * r2;
    let m = x1.max(x2);
    let e1 = (x1 - m).exp();
    let e2 = (x2 - m).exp();
    e1 / (e1 + e2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeacherSet {
    teachers: Vec<Teacher>,
}

impl TeacherSet {
    pub fn new(kernels: Vec<BetaKernel>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Config("a teacher set needs at least one teacher".into()));
        }
        let g_dim = kernels[0].g_dim();
        if let Some(k) = kernels.iter().find(|k| k.g_dim() != g_dim) {
            return Err(Error::Dimension {
                expected: g_dim,
                actual: k.g_dim(),
            });
        }
        Ok(Self {
            teachers: kernels
                .into_iter()
                .enumerate()
                .map(|(id, kernel)| Teacher { id, kernel })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.teachers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teachers.is_empty()
    }

    pub fn g_dim(&self) -> usize {
        self.teachers[0].kernel.g_dim()
    }

    pub fn teachers(&self) -> &[Teacher] {
        &self.teachers
    }

    pub fn get(&self, id: usize) -> &Teacher {
        &self.teachers[id]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Teacher> {
        self.teachers.iter()
    }

    /// Every teacher's β on the query, in id order.
    pub fn betas(&self, g1: &[f64], g2: &[f64]) -> Result<Vec<f64>> {
        self.teachers.iter().map(|t| t.beta_value(g1, g2)).collect()
    }

    pub fn max_beta(&self, g1: &[f64], g2: &[f64]) -> Result<f64> {
        Ok(self.betas(g1, g2)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// A query nobody is expert on: every teacher's β is below `beta_floor`.
    pub fn is_inter_domain(&self, g1: &[f64], g2: &[f64], beta_floor: f64) -> Result<bool> {
        Ok(self.max_beta(g1, g2)? < beta_floor)
    }

    /// Same centres and scales with every width component set to `width`.
    pub fn with_uniform_width(&self, width: f64) -> TeacherSet {
        let teachers = self
            .teachers
            .iter()
            .map(|t| Teacher {
                id: t.id,
                kernel: BetaKernel {
                    width: vec![width; t.kernel.width.len()],
                    ..t.kernel.clone()
                },
            })
            .collect();
        TeacherSet { teachers }
    }
}

/// Places `m` teachers evenly over the expertise range.
///
/// Each centre is duplicated across both halves of the concatenated query
/// space, so teacher `i` is expert on queries whose two segments both map
/// near its grid point. In 1-D the points are `(i + 0.5) / m`. In 2-D they
/// fill a `cols × rows` lattice (`cols = ⌈√m⌉`) row by row.
pub fn make_teacher_grid(m: usize, g_dim: usize, scale: f64, width: &[f64]) -> Result<TeacherSet> {
    if m == 0 {
        return Err(Error::Config("need at least one teacher".into()));
    }
    if width.len() != 2 * g_dim {
        return Err(Error::Dimension {
            expected: 2 * g_dim,
            actual: width.len(),
        });
    }
    let points: Vec<Vec<f64>> = match g_dim {
        1 => (0..m).map(|i| vec![(i as f64 + 0.5) / m as f64]).collect(),
        2 => {
            let cols = (m as f64).sqrt().ceil() as usize;
            let rows = m.div_ceil(cols);
            (0..m)
                .map(|i| {
                    vec![
                        ((i % cols) as f64 + 0.5) / cols as f64,
                        ((i / cols) as f64 + 0.5) / rows as f64,
                    ]
                })
                .collect()
        }
        other => {
            return Err(Error::Config(format!(
                "teacher grids support 1 or 2 expertise dimensions, got {other}"
            )))
        }
    };
    let kernels = points
        .into_iter()
        .map(|p| {
            let center = p.iter().chain(&p).copied().collect();
            BetaKernel::new(center, width.to_vec(), scale)
        })
        .collect::<Result<Vec<_>>>()?;
    TeacherSet::new(kernels)
}

fn probe_grid(g_dim: usize, probe_points: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..probe_points)
        .map(|j| j as f64 / (probe_points - 1) as f64)
        .collect();
    match g_dim {
        1 => axis.iter().map(|&t| vec![t]).collect(),
        _ => {
            let mut out = vec![vec![]];
            for _ in 0..g_dim {
                out = out
                    .into_iter()
                    .flat_map(|prefix| {
                        axis.iter().map(move |&t| {
                            let mut p = prefix.clone();
                            p.push(t);
                            p
                        })
                    })
                    .collect();
            }
            out
        }
    }
}

/// Worst case, over a uniform probe grid of diagonal queries `(t, t)`, of the
/// best teacher's β: `min_t max_i β_i(t, t)`.
pub fn min_coverage_beta(teachers: &TeacherSet, probe_points: usize) -> Result<f64> {
    if probe_points < 2 {
        return Err(Error::Config("need at least 2 probe points".into()));
    }
    let mut worst = f64::INFINITY;
    for t in probe_grid(teachers.g_dim(), probe_points) {
        worst = worst.min(teachers.max_beta(&t, &t)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub width: f64,
    pub beta_floor: f64,
    /// Coverage achieved at `width`.
    pub coverage: f64,
}

/// Largest uniform width whose diagonal coverage still reaches `beta_floor`.
///
/// Coverage falls monotonically with width, so this brackets the crossing by
/// doubling and then bisects to a relative tolerance of 1e-6.
pub fn calibrate_widths(
    template: &TeacherSet,
    beta_floor: f64,
    probe_points: usize,
) -> Result<Calibration> {
    let scale = template
        .iter()
        .map(|t| t.kernel.scale)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(beta_floor > 0.0) || beta_floor > scale {
        return Err(Error::InfeasibleFloor {
            floor: beta_floor,
            scale,
        });
    }
    let coverage = |w: f64| min_coverage_beta(&template.with_uniform_width(w), probe_points);
    let at_zero = coverage(0.0)?;
    if at_zero < beta_floor {
        return Err(Error::InfeasibleFloor {
            floor: beta_floor,
            scale,
        });
    }
    if beta_floor >= scale {
        return Ok(Calibration {
            width: 0.0,
            beta_floor,
            coverage: at_zero,
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    while coverage(hi)? >= beta_floor {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            // Some probe always sits on a centre; any width attains the floor.
            return Err(Error::Config("coverage does not depend on width".into()));
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if coverage(mid)? >= beta_floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        width: lo,
        beta_floor,
        coverage: coverage(lo)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::envs::{rollout_segments, EnvSpec, RIGHT, STAY};
    use crate::rng::RngStream;
    use crate::types::{Segment, Transition};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kernel(c: &[f64], b: &[f64], a: f64) -> Teacher {
        Teacher {
            id: 0,
            kernel: BetaKernel::new(c.to_vec(), b.to_vec(), a).unwrap(),
        }
    }

    fn constant_segment(x: f64, action: usize) -> Segment {
        Segment::new((0..10).map(|_| Transition::new(vec![x], action, vec![x])).collect()).unwrap()
    }

    #[test]
    fn beta_peaks_at_centre() {
        let t = kernel(&[0.3, 0.7], &[5.0, 2.0], 2.5);
        assert_eq!(t.beta_value(&[0.3], &[0.7]).unwrap(), 2.5);
    }

    #[test]
    fn zero_width_is_constant() {
        let t = kernel(&[0.3, 0.7], &[0.0, 0.0], 1.7);
        for (x, y) in [(0.0, 1.0), (0.5, 0.5), (0.9, 0.1)] {
            assert_eq!(t.beta_value(&[x], &[y]).unwrap(), 1.7);
        }
    }

    #[test]
    fn beta_off_centre_value() {
        // exp(-2) = 0.1353352832366127 (mpmath, 16 digits)
        let t = kernel(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        assert_relative_eq!(t.beta_value(&[1.0], &[1.0]).unwrap(), 0.1353352832366127, max_relative = 1e-14);
    }

    #[test]
    fn beta_dimension_mismatch() {
        let t = kernel(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        assert!(t.beta_value(&[0.1, 0.2], &[0.1]).is_err());
        assert!(BetaKernel::new(vec![0.0, 0.0], vec![1.0], 1.0).is_err());
        assert!(BetaKernel::new(vec![0.0, 0.0], vec![1.0, -1.0], 1.0).is_err());
        assert!(BetaKernel::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn pref_prob_reference_values() {
        assert_eq!(pref_prob(3.0, 1.2, 1.2), 0.5);
        assert_eq!(pref_prob(0.0, 5.0, -5.0), 0.5);
        // 1 / (1 + e^-1)
        assert_relative_eq!(pref_prob(1.0, 1.0, 0.0), 0.7310585786300049, max_relative = 1e-15);
        assert_eq!(pref_prob(1e6, 1e6, 0.0), 1.0);
        assert!(pref_prob(1e6, 0.0, 1e6) < 1e-300);
    }

    #[test]
    fn identical_segments_are_a_coin_flip() {
        let env = EnvSpec::line_world();
        let teachers = make_teacher_grid(4, 1, 1.0, &[3.0, 3.0]).unwrap();
        let seg = constant_segment(0.4, STAY);
        let q = Query::new(seg.clone(), seg).unwrap();
        assert_eq!(teachers.get(2).query_pref_prob(&q, &env).unwrap(), 0.5);
    }

    #[test]
    fn confident_teacher_at_centre() {
        let env = EnvSpec::line_world();
        // β stays above 30 for this query; the first segment moves right
        // every step and earns far more than the second.
        let t = kernel(&[0.5, 0.5], &[1.0, 1.0], 50.0);
        let right = Segment::new(
            (0..10)
                .map(|i| {
                    let x = |c: usize| c as f64 / 20.0;
                    Transition::new(vec![x(6 + i)], RIGHT, vec![x(7 + i)])
                })
                .collect(),
        )
        .unwrap();
        let left = constant_segment(0.0, STAY);
        let q = Query::new(right, left).unwrap();
        assert!(t.query_pref_prob(&q, &env).unwrap() > 0.99);
    }

    #[test]
    fn query_prob_is_composition() {
        let env = EnvSpec::line_world();
        let teachers = make_teacher_grid(4, 1, 1.0, &[2.0, 2.0]).unwrap();
        let mut rng = RngStream::new(4, 5);
        let segs = rollout_segments(&env, |_, r: &mut RngStream| r.gen_range(0..3), &mut rng, 2);
        let q = Query::new(segs[1].clone(), segs[6].clone()).unwrap();
        let t = teachers.get(1);
        let beta = t
            .beta_value(&env.map_segment(&q.first), &env.map_segment(&q.second))
            .unwrap();
        let r1 = segment_return(&q.first, |s, a| env.ground_truth(s, a));
        let r2 = segment_return(&q.second, |s, a| env.ground_truth(s, a));
        assert_eq!(t.query_pref_prob(&q, &env).unwrap(), pref_prob(beta, r1, r2));
    }

    #[test]
    fn degenerate_probability_always_first() {
        let mut rng = RngStream::new(0, 1);
        for _ in 0..1000 {
            assert_eq!(draw_label(1.0, &mut rng), LabelDistribution::hard(true));
        }
    }

    #[test]
    fn fair_labels_are_fair() {
        let mut rng = RngStream::new(11, 1);
        let n = 100_000;
        let ones = (0..n).filter(|_| draw_label(0.5, &mut rng).mu1() == 1.0).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.01, "{freq}");
    }

    #[test]
    fn label_sequence_replays() {
        let env = EnvSpec::line_world();
        let teachers = make_teacher_grid(2, 1, 1.0, &[1.0, 1.0]).unwrap();
        let q = Query::new(constant_segment(0.2, RIGHT), constant_segment(0.3, STAY)).unwrap();
        let draw = || {
            let mut rng = RngStream::new(5, 1);
            (0..50)
                .map(|_| teachers.get(0).sample_label(&q, &env, &mut rng).unwrap().mu1())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn grid_placement() {
        let set = make_teacher_grid(4, 1, 1.0, &[2.0, 2.0]).unwrap();
        let centres: Vec<f64> = set.iter().map(|t| t.kernel.center[0]).collect();
        assert_eq!(centres, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(set.iter().all(|t| t.kernel.center[0] == t.kernel.center[1]));
        assert!(set.iter().all(|t| t.kernel.scale == 1.0 && t.kernel.width == vec![2.0, 2.0]));
        let ids: Vec<usize> = set.iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);

        let single = make_teacher_grid(1, 1, 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(single.get(0).kernel.center, vec![0.5, 0.5]);

        let grid = make_teacher_grid(4, 2, 1.0, &[1.0; 4]).unwrap();
        assert_eq!(grid.get(3).kernel.center, vec![0.75, 0.75, 0.75, 0.75]);
        assert_eq!(grid.get(1).kernel.center, vec![0.75, 0.25, 0.75, 0.25]);
        assert!(make_teacher_grid(0, 1, 1.0, &[1.0, 1.0]).is_err());
    }

    /// Brute-force min over a fine grid, independent of `min_coverage_beta`.
    fn brute_coverage(centres: &[f64], w: f64) -> f64 {
        (0..=4000)
            .map(|j| {
                let t = j as f64 / 4000.0;
                centres
                    .iter()
                    .map(|c| (-2.0 * (w * (t - c)).powi(2)).exp())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn coverage_midpoint_closed_form() {
        for w in [0.5, 1.0, 3.0, 6.0] {
            let set = make_teacher_grid(4, 1, 1.0, &[w, w]).unwrap();
            let got = min_coverage_beta(&set, 101).unwrap();
            let closed = (-2.0 * (w * 0.125f64).powi(2)).exp();
            assert_relative_eq!(got, closed, max_relative = 1e-12);
            assert_relative_eq!(brute_coverage(&[0.125, 0.375, 0.625, 0.875], w), closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn coverage_single_constant_teacher() {
        let set = make_teacher_grid(1, 1, 1.3, &[0.0, 0.0]).unwrap();
        assert_eq!(min_coverage_beta(&set, 11).unwrap(), 1.3);
        assert!(min_coverage_beta(&set, 1).is_err());
    }

    #[test]
    fn coverage_falls_with_width() {
        let base = make_teacher_grid(4, 1, 1.0, &[0.0, 0.0]).unwrap();
        let mut prev = f64::INFINITY;
        for w in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let c = min_coverage_beta(&base.with_uniform_width(w), 101).unwrap();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn calibration_inverts_midpoint_formula() {
        let template = make_teacher_grid(4, 1, 1.0, &[0.0, 0.0]).unwrap();
        let floor = (-2.0 * 0.125f64.powi(2)).exp();
        let cal = calibrate_widths(&template, floor, 101).unwrap();
        assert_relative_eq!(cal.width, 1.0, max_relative = 2e-6);
        assert!(cal.coverage >= floor);
    }

    #[test]
    fn calibration_edges() {
        let template = make_teacher_grid(4, 1, 1.0, &[0.0, 0.0]).unwrap();
        assert_eq!(calibrate_widths(&template, 1.0, 101).unwrap().width, 0.0);
        assert!(matches!(
            calibrate_widths(&template, 1.5, 101),
            Err(Error::InfeasibleFloor { .. })
        ));
        assert!(calibrate_widths(&template, 0.0, 101).is_err());
    }

    #[test]
    fn calibration_in_two_dimensions() {
        let template = make_teacher_grid(4, 2, 1.0, &[0.0; 4]).unwrap();
        let cal = calibrate_widths(&template, 0.5, 41).unwrap();
        let set = template.with_uniform_width(cal.width);
        assert!(min_coverage_beta(&set, 41).unwrap() >= 0.5);
        assert!(min_coverage_beta(&template.with_uniform_width(cal.width * 1.001), 41).unwrap() < 0.5);
    }

    #[test]
    fn nearest_centre_is_most_expert() {
        let set = make_teacher_grid(4, 1, 1.0, &[4.0, 4.0]).unwrap();
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            let betas = set.betas(&[t], &[t]).unwrap();
            let best = betas
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &b)| if b > acc.1 { (i, b) } else { acc })
                .0;
            let nearest = set
                .iter()
                .map(|x| (x.id, (x.kernel.center[0] - t).abs()))
                .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 - 1e-12 { (i, d) } else { acc })
                .0;
            assert_eq!(best, nearest, "t = {t}");
        }
    }

    proptest! {
        #[test]
        fn pref_prob_complements(beta in 0.0..100.0f64, r1 in -50.0..50.0f64, r2 in -50.0..50.0f64) {
            prop_assert!((pref_prob(beta, r1, r2) + pref_prob(beta, r2, r1) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn pref_prob_monotone(beta in 0.01..20.0f64, r2 in -5.0..5.0f64, d1 in -5.0..5.0f64, d2 in -5.0..5.0f64) {
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(pref_prob(beta, r2 + lo, r2) <= pref_prob(beta, r2 + hi, r2));
        }

        #[test]
        fn grid_kernels_swap_symmetric(m in 1usize..7, w in 0.0..10.0f64, x in 0.0..1.0f64, y in 0.0..1.0f64) {
            let set = make_teacher_grid(m, 1, 1.0, &[w, w]).unwrap();
            for t in set.iter() {
                prop_assert_eq!(t.beta_value(&[x], &[y]).unwrap(), t.beta_value(&[y], &[x]).unwrap());
            }
        }
    }
}

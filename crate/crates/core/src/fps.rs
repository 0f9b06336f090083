//! Two-dimensional model of fixed-point amplitude amplification.
//!
//! The search register lives in the plane spanned by the marked component
//! `|T>` and its orthogonal complement `|perp>`. Each iteration rotates an
//! ancilla by `alpha_i`, applies the ancilla-controlled oracle, undoes the
//! rotation and applies the ancilla-controlled reflection. Measuring the
//! ancilla in `|0>` projects onto `|T>`; the `|1>` branch leaves a renormalised
//! state `c |perp> + s |T>` that feeds the next iteration.
//!
//! Indexing: the initial state is `(c_1, s_1) = (cos theta, sin theta)`;
//! iteration `i` consumes `alpha_i` and emits `p_{i+1} = s_i^2 sin^2 alpha_i`.
//! Every returned series is 0-based in iterations, i.e. entry `k` belongs to
//! iteration `k + 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::{Error, Result};

/// Probability at or above which an ancilla measurement succeeds with certainty.
pub const DETERMINISTIC_SUCCESS: f64 = 1.0 - 1e-15;

/// Amplitudes of the `|1>`-branch state on `(|perp>, |T>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationState {
    pub c: f64,
    pub s: f64,
}

impl RotationState {
    /// The state before any iteration, `cos(theta)|perp> + sin(theta)|T>`.
    pub fn initial(theta: f64) -> Self {
        Self { c: theta.cos(), s: theta.sin() }
    }

    pub fn norm_error(&self) -> f64 {
        (self.c * self.c + self.s * self.s - 1.0).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Critical,
    Decreasing,
    Custom,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "critical" => Ok(Self::Critical),
            "decreasing" => Ok(Self::Decreasing),
            "custom" => Ok(Self::Custom),
            other => Err(Error::arg(format!("unknown schedule `{other}`"))),
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Critical => "critical",
            Self::Decreasing => "decreasing",
            Self::Custom => "custom",
        })
    }
}

/// Sequence of ancilla rotation angles `alpha_1, alpha_2, ...`.
///
/// A custom schedule shorter than the number of iterations keeps repeating
/// its last angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    kind: ScheduleKind,
    theta: Option<f64>,
    custom: Vec<f64>,
    critical: f64,
}

impl AngleSchedule {
    /// Constant critical angle for the given `theta`.
    pub fn critical(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let alpha = critical_angle(theta);
        check_alpha(alpha)?;
        Ok(Self { kind: ScheduleKind::Critical, theta: Some(theta), custom: Vec::new(), critical: alpha })
    }

    pub fn decreasing() -> Self {
        Self { kind: ScheduleKind::Decreasing, theta: None, custom: Vec::new(), critical: 0.0 }
    }

    pub fn custom(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::arg("custom schedule needs at least one angle"));
        }
        for &a in &angles {
            check_alpha(a)?;
        }
        Ok(Self { kind: ScheduleKind::Custom, theta: None, custom: angles, critical: 0.0 })
    }

    /// Build a schedule of the given kind. `theta` is only read for `Critical`.
    pub fn from_kind(kind: ScheduleKind, theta: f64) -> Result<Self> {
        match kind {
            ScheduleKind::Critical => Self::critical(theta),
            ScheduleKind::Decreasing => Ok(Self::decreasing()),
            ScheduleKind::Custom => Err(Error::arg("custom schedules need explicit angles")),
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// Angle of iteration `i` (1-based).
    pub fn angle(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        match self.kind {
            ScheduleKind::Critical => self.critical,
            ScheduleKind::Decreasing => decreasing_angle(i.max(1)).expect("i >= 1"),
            ScheduleKind::Custom => {
                let k = (i.max(1) - 1).min(self.custom.len() - 1);
                self.custom[k]
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= FRAC_PI_2 + 1e-15 {
        Ok(())
    } else {
        Err(Error::arg(format!("theta = {theta} outside (0, pi/2]")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= PI {
        Ok(())
    } else {
        Err(Error::arg(format!("angle {alpha} outside (0, pi]")))
    }
}

/// `arcsin(sqrt(M / S))` for `M` marked states out of `S`.
pub fn theta_from_counts(marked: u64, space: u64) -> Result<f64> {
    if marked == 0 {
        return Err(Error::NoTargets);
    }
    if marked > space {
        return Err(Error::arg(format!("M = {marked} exceeds search space S = {space}")));
    }
    Ok((marked as f64 / space as f64).sqrt().asin())
}

/// Constant angle that critically damps the oscillation between target and
/// non-target states: `arccos((1 - sin 2theta) / (1 + sin 2theta))`.
pub fn critical_angle(theta: f64) -> f64 {
    let s = (2.0 * theta).sin();
    ((1.0 - s) / (1.0 + s)).clamp(-1.0, 1.0).acos()
}

/// Decreasing schedule for unknown `M`: `alpha_1 = pi/2` and the critical angle
/// for `theta = pi / 4i` afterwards.
pub fn decreasing_angle(i: usize) -> Result<f64> {
    match i {
        0 => Err(Error::arg("iteration index starts at 1")),
        1 => Ok(FRAC_PI_2),
        _ => {
            let s = (PI / (2.0 * i as f64)).sin();
            Ok(((1.0 - s) / (1.0 + s)).acos())
        }
    }
}

/// Result of one iteration of the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Probability of measuring the ancilla in `|0>` at this iteration.
    pub p: f64,
    /// The renormalised `|1>`-branch state, `None` when success is certain.
    pub next: Option<RotationState>,
}

impl Step {
    pub fn is_deterministic_success(&self) -> bool {
        self.next.is_none()
    }
}

/// One iteration of the recurrence.
pub fn step(state: RotationState, alpha: f64, theta: f64) -> Step {
    let RotationState { c, s } = state;
    let sa = alpha.sin();
    let p = (s * s * sa * sa).clamp(0.0, 1.0);
    if p >= DETERMINISTIC_SUCCESS {
        return Step { p: 1.0, next: None };
    }
    let (s2, c2) = (2.0 * theta).sin_cos();
    let ca = alpha.cos();
    // the surviving component has norm sqrt(1 - p); dividing by its computed
    // length keeps rounding from compounding near p = 1
    let s_raw = c * s2 + s * ca * c2;
    let c_raw = c * c2 - s * ca * s2;
    let norm = s_raw.hypot(c_raw);
    let (s_next, c_next) = (s_raw / norm, c_raw / norm);
    Step { p, next: Some(RotationState { c: c_next, s: s_next }) }
}

/// Per-iteration trajectory of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessSeries {
    /// `alpha_i` used at each iteration.
    pub alphas: Vec<f64>,
    /// State entering each iteration (`(c_i, s_i)`).
    pub states: Vec<RotationState>,
    /// Instantaneous success probabilities `p_{i+1}`.
    pub instantaneous: Vec<f64>,
    /// `1 - prod_{j<=i} (1 - p_{j+1})`.
    pub cumulative: Vec<f64>,
    /// Mean number of oracle calls before success, truncated at the last
    /// iteration with the remaining mass charged at that iteration count.
    pub expected_calls: f64,
}

impl SuccessSeries {
    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }

    /// Probability that the first success happens at iteration `m` (1-based).
    pub fn first_success_probability(&self, m: usize) -> f64 {
        if m == 0 || m > self.len() {
            return 0.0;
        }
        let survive: f64 = self.instantaneous[..m - 1].iter().map(|p| 1.0 - p).product();
        self.instantaneous[m - 1] * survive
    }
}

/// Iterate the recurrence up to `max_iterations` times from `(cos theta, sin theta)`.
///
/// The series stops early once success becomes certain; the cumulative
/// probability is then 1.
pub fn success_series(schedule: &AngleSchedule, theta: f64, max_iterations: usize) -> SuccessSeries {
    let mut series = SuccessSeries {
        alphas: Vec::with_capacity(max_iterations),
        states: Vec::with_capacity(max_iterations),
        instantaneous: Vec::with_capacity(max_iterations),
        cumulative: Vec::with_capacity(max_iterations),
        expected_calls: 0.0,
    };
    let mut state = RotationState::initial(theta);
    let mut survive = 1.0;
    let mut expected = 0.0;
    for i in 1..=max_iterations {
        let alpha = schedule.angle(i);
        let step = step(state, alpha, theta);
        series.alphas.push(alpha);
        series.states.push(state);
        series.instantaneous.push(step.p);
        expected += i as f64 * step.p * survive;
        survive *= 1.0 - step.p;
        series.cumulative.push(1.0 - survive);
        match step.next {
            Some(next) => state = next,
            None => {
                survive = 0.0;
                break;
            }
        }
    }
    series.expected_calls = expected + series.len() as f64 * survive;
    series
}

/// Outcome of a Monte-Carlo run of the ancilla measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstSuccess {
    At(usize),
    CapExceeded,
}

/// Draw ancilla outcomes with the model probabilities until the first
/// success or until `cap` iterations have failed.
pub fn sample_first_success<R: Rng + ?Sized>(
    schedule: &AngleSchedule,
    theta: f64,
    rng: &mut R,
    cap: usize,
) -> FirstSuccess {
    let mut state = RotationState::initial(theta);
    for i in 1..=cap {
        let step = step(state, schedule.angle(i), theta);
        if rng.gen::<f64>() < step.p {
            return FirstSuccess::At(i);
        }
        match step.next {
            Some(next) => state = next,
            None => return FirstSuccess::At(i),
        }
    }
    FirstSuccess::CapExceeded
}

/// Default iteration cap `50 * ceil(sqrt(S))`.
pub fn default_iteration_cap(space: u64) -> usize {
    50 * (space as f64).sqrt().ceil() as usize
}

/// One line of `scaling.csv`: mean calls to the first success with a single
/// marked state among `space`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScalingRow {
    pub space: u64,
    pub schedule: ScheduleKind,
    pub expected_calls: f64,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
}

/// Expected calls for `M = 1` over `spaces` under each schedule kind, with a
/// Monte-Carlo mean of `mc_samples` draws when non-zero. A draw that exceeds
/// the cap is charged the cap, like the tail term of the series.
///
/// Row `r` draws from its own stream of the generator seeded with `seed`, so
/// rows do not depend on each other.
pub fn scaling_table(spaces: &[u64], kinds: &[ScheduleKind], mc_samples: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    use rand::SeedableRng;
    let mut rows = Vec::new();
    for &kind in kinds {
        if kind == ScheduleKind::Custom {
            return Err(Error::arg("scaling needs a critical or decreasing schedule"));
        }
        for &space in spaces {
            let theta = theta_from_counts(1, space)?;
            let schedule = AngleSchedule::from_kind(kind, theta)?;
            let cap = default_iteration_cap(space);
            let series = success_series(&schedule, theta, cap);
            let (mc_mean, mc_stderr) = if mc_samples > 0 {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rows.len() as u64);
                let draws: Vec<f64> = (0..mc_samples)
                    .map(|_| match sample_first_success(&schedule, theta, &mut rng, cap) {
                        FirstSuccess::At(i) => i as f64,
                        FirstSuccess::CapExceeded => cap as f64,
                    })
                    .collect();
                let (m, se) = crate::stats::mean_stderr(&draws).expect("non-empty sample");
                (Some(m), Some(se))
            } else {
                (None, None)
            };
            rows.push(ScalingRow { space, schedule: kind, expected_calls: series.expected_calls, mc_mean, mc_stderr });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_examples() {
        assert_abs_diff_eq!(theta_from_counts(1, 4).unwrap(), PI / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_from_counts(16, 16).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_from_counts(2, 16).unwrap(), 0.361367123906708, epsilon = 1e-12);
        assert_eq!(theta_from_counts(0, 16), Err(Error::NoTargets));
        assert!(matches!(theta_from_counts(17, 16), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn critical_angle_examples() {
        assert_abs_diff_eq!(critical_angle(PI / 4.0), FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(critical_angle(PI / 6.0), 1.498937730834960, epsilon = 1e-12);
        let theta = (1.0f64 / 1000.0).sqrt().asin();
        assert_abs_diff_eq!(critical_angle(theta), 0.492636503664220, epsilon = 1e-12);
    }

    #[test]
    fn decreasing_angle_examples() {
        assert_eq!(decreasing_angle(1).unwrap(), FRAC_PI_2);
        assert_abs_diff_eq!(decreasing_angle(2).unwrap(), 1.398370329082048, epsilon = 1e-12);
        assert!(decreasing_angle(0).is_err());
        let mut prev = decreasing_angle(2).unwrap();
        for i in 3..2000 {
            let a = decreasing_angle(i).unwrap();
            assert!(a < prev && a > 0.0);
            prev = a;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn step_with_right_angle_gives_prior_probability() {
        for theta in [0.1, 0.4, 1.0] {
            let st = step(RotationState::initial(theta), FRAC_PI_2, theta);
            assert_abs_diff_eq!(st.p, theta.sin().powi(2), epsilon = 1e-15);
        }
    }

    #[test]
    fn step_target_only_state_is_deterministic() {
        let st = step(RotationState::initial(FRAC_PI_2), FRAC_PI_2, FRAC_PI_2);
        assert_eq!(st.p, 1.0);
        assert!(st.is_deterministic_success());
    }

    #[test]
    fn step_critical_pi_over_six() {
        // Values from an independent direct evaluation of the recurrence.
        let theta = PI / 6.0;
        let st = step(RotationState::initial(theta), critical_angle(theta), theta);
        assert_abs_diff_eq!(st.p, 0.24871130596428206, epsilon = 1e-14);
        let next = st.next.unwrap();
        assert_abs_diff_eq!(next.c, 0.4637034049132157, epsilon = 1e-13);
        assert_abs_diff_eq!(next.s, 0.8859904922017451, epsilon = 1e-13);
        assert!(next.norm_error() < 1e-12);
    }

    #[test]
    fn series_certain_success() {
        let s = success_series(&AngleSchedule::decreasing(), FRAC_PI_2, 10);
        assert_eq!(s.len(), 1);
        assert_eq!(s.cumulative[0], 1.0);
        assert_eq!(s.expected_calls, 1.0);
    }

    #[test]
    fn series_m1_n1000_critical() {
        let theta = (1.0f64 / 1000.0).sqrt().asin();
        let s = success_series(&AngleSchedule::critical(theta).unwrap(), theta, 200);
        assert!(s.cumulative.windows(2).all(|w| w[1] >= w[0]));
        assert!(*s.cumulative.last().unwrap() >= 0.99);
        // eventually non-decreasing instantaneous probability
        for i in 2..s.len() - 1 {
            assert!(s.instantaneous[i + 1] >= s.instantaneous[i] - 1e-9, "i = {i}");
        }
    }

    #[test]
    fn decreasing_costs_at_most_about_one_and_a_half() {
        let theta = (1.0f64 / 1000.0).sqrt().asin();
        let k = default_iteration_cap(1000);
        let crit = success_series(&AngleSchedule::critical(theta).unwrap(), theta, k);
        let dec = success_series(&AngleSchedule::decreasing(), theta, k);
        let ratio = dec.expected_calls / crit.expected_calls;
        assert!(ratio <= 1.6, "ratio {ratio}");
        assert!(ratio > 1.0);
    }

    #[test]
    fn cumulative_matches_product_form() {
        let theta = 0.05;
        let s = success_series(&AngleSchedule::decreasing(), theta, 100);
        for i in 0..s.len() {
            let prod: f64 = s.instantaneous[..=i].iter().map(|p| 1.0 - p).product();
            assert_abs_diff_eq!(s.cumulative[i], 1.0 - prod, epsilon = 1e-12);
        }
    }

    #[test]
    fn expected_calls_matches_first_success_sum() {
        let theta = 0.2;
        let s = success_series(&AngleSchedule::critical(theta).unwrap(), theta, 30);
        let mut sum = 0.0;
        for m in 1..=s.len() {
            sum += m as f64 * s.first_success_probability(m);
        }
        sum += s.len() as f64 * (1.0 - s.cumulative.last().unwrap());
        assert_abs_diff_eq!(sum, s.expected_calls, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_matches_expected_calls() {
        let theta = (1.0f64 / 1000.0).sqrt().asin();
        let schedule = AngleSchedule::critical(theta).unwrap();
        let cap = default_iteration_cap(1000);
        let series = success_series(&schedule, theta, cap);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| match sample_first_success(&schedule, theta, &mut rng, cap) {
                FirstSuccess::At(i) => i as f64,
                FirstSuccess::CapExceeded => cap as f64,
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma = (var / n as f64).sqrt();
        assert!((mean - series.expected_calls).abs() < 3.0 * sigma, "{mean} vs {}", series.expected_calls);
    }

    #[test]
    fn square_root_scaling_for_both_schedules() {
        let spaces: Vec<u64> = (4..=14).map(|k| 1u64 << k).collect();
        let rows = scaling_table(&spaces, &[ScheduleKind::Critical, ScheduleKind::Decreasing], 0, 0).unwrap();
        for kind in [ScheduleKind::Critical, ScheduleKind::Decreasing] {
            let (x, y): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.schedule == kind).map(|r| (r.space as f64, r.expected_calls)).unzip();
            let slope = crate::stats::loglog_fit(&x, &y).unwrap().slope;
            assert!((0.45..=0.55).contains(&slope), "{kind}: {slope}");
        }
        assert!(rows.iter().all(|r| r.mc_mean.is_none() && r.mc_stderr.is_none()));
    }

    #[test]
    fn scaling_monte_carlo_is_seeded_and_consistent() {
        let a = scaling_table(&[64, 256], &[ScheduleKind::Critical], 4000, 11).unwrap();
        let b = scaling_table(&[64, 256], &[ScheduleKind::Critical], 4000, 11).unwrap();
        assert_eq!(a, b);
        for r in &a {
            let (m, se) = (r.mc_mean.unwrap(), r.mc_stderr.unwrap());
            assert!((m - r.expected_calls).abs() < 4.0 * se, "{r:?}");
        }
        assert!(scaling_table(&[64], &[ScheduleKind::Custom], 0, 0).is_err());
    }

    #[test]
    fn cap_one_exceeds_with_complement_frequency() {
        let theta = 0.3;
        let schedule = AngleSchedule::critical(theta).unwrap();
        let p1 = step(RotationState::initial(theta), schedule.angle(1), theta).p;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let exceeded = (0..n)
            .filter(|_| sample_first_success(&schedule, theta, &mut rng, 1) == FirstSuccess::CapExceeded)
            .count();
        let freq = exceeded as f64 / n as f64;
        let sigma = ((1.0 - p1) * p1 / n as f64).sqrt();
        assert!((freq - (1.0 - p1)).abs() < 4.0 * sigma);
    }

    #[test]
    fn always_one_when_target_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(
                sample_first_success(&AngleSchedule::decreasing(), FRAC_PI_2, &mut rng, 5),
                FirstSuccess::At(1)
            );
        }
    }

    #[test]
    fn custom_schedule_validation_and_repeat() {
        assert!(AngleSchedule::custom(vec![]).is_err());
        assert!(AngleSchedule::custom(vec![0.0]).is_err());
        assert!(AngleSchedule::custom(vec![4.0]).is_err());
        let s = AngleSchedule::custom(vec![1.0, 0.5]).unwrap();
        assert_eq!(s.angle(1), 1.0);
        assert_eq!(s.angle(2), 0.5);
        assert_eq!(s.angle(9), 0.5);
    }

    #[test]
    fn critical_schedule_rejects_degenerate_theta() {
        assert!(AngleSchedule::critical(0.0).is_err());
        assert!(AngleSchedule::critical(2.0).is_err());
    }
}

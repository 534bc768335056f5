//! Splitting proximal point algorithms and the mean/median front-ends built
//! on them.
//!
//! The objective is a finite sum `f = Σ f_n` of convex components. Instead of
//! the resolvent of `f`, the drivers apply the component resolvents in cyclic
//! or uniformly random order with a step schedule `λ_k` satisfying
//! `Σ λ_k = ∞`, `Σ λ_k² < ∞`.

mod component;
mod driver;
mod front;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::space::{SpaceHandle, SpacePoint};

pub use component::{
    distance_coefficient, objective_value, prox_indicator, prox_scaled_distance, prox_scaled_set_distance, prox_scaled_squared_distance,
    squared_distance_coefficient, ConvexSet, ObjectiveComponent, ProxStep,
};
pub use driver::{ppa_cyclic, ppa_random, ppa_random_with_indices, IndexStream, RNG_IDENTITY};
pub use front::{
    frechet_mean, geometric_median, lie_trotter_kato, lln_mean, lln_mean_with_indices, mean_components, median_components, variance_gap,
    MeanVariant, MedianVariant,
};

/// Anchors `a_1..a_N` with positive weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorConfiguration {
    anchors: Vec<SpacePoint>,
    weights: Vec<f64>,
}

impl AnchorConfiguration {
    pub fn new(anchors: Vec<SpacePoint>, weights: Vec<f64>) -> Result<Self> {
        if anchors.is_empty() {
            return invalid("at least one anchor is required");
        }
        if weights.len() != anchors.len() {
            return invalid(format!("{} weights given for {} anchors", weights.len(), anchors.len()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("weights must be finite and strictly positive");
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(AnchorConfiguration { anchors, weights })
    }

    pub fn uniform(anchors: Vec<SpacePoint>) -> Result<Self> {
        let n = anchors.len();
        Self::new(anchors, vec![1.0; n])
    }

    pub fn validate(&self, space: &SpaceHandle) -> Result<()> {
        self.anchors.iter().try_for_each(|a| space.check(a))
    }

    pub fn anchors(&self) -> &[SpacePoint] {
        &self.anchors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| *w == self.weights[0])
    }
}

/// The proximal parameters `λ_k`, `k = 0, 1, …`.
#[derive(Clone)]
pub enum StepSchedule {
    /// `λ_k = C/(k+1)`.
    Harmonic {
        c: f64,
    },
    /// `λ_k = 1/(2k)` with `λ_0 = +∞`; with unit weights this turns the
    /// random squared-distance iteration into the inductive mean.
    HalfInverse,
    Custom {
        label: String,
        f: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    },
}

impl StepSchedule {
    pub fn harmonic(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return invalid(format!("schedule constant must be positive, got {c}"));
        }
        Ok(StepSchedule::Harmonic { c })
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        StepSchedule::Custom { label: label.into(), f: Arc::new(f) }
    }

    pub fn lambda(&self, k: u64) -> f64 {
        match self {
            StepSchedule::Harmonic { c } => c / (k as f64 + 1.0),
            StepSchedule::HalfInverse => 1.0 / (2.0 * k as f64),
            StepSchedule::Custom { f, .. } => f(k),
        }
    }

    pub(crate) fn checked_lambda(&self, k: u64) -> Result<f64> {
        let l = self.lambda(k);
        if l > 0.0 {
            Ok(l)
        } else {
            invalid(format!("schedule produced nonpositive step {l} at k = {k}"))
        }
    }

    /// Human-readable form, e.g. `C/(k+1)`.
    pub fn form(&self) -> String {
        match self {
            StepSchedule::Harmonic { .. } => "C/(k+1)".into(),
            StepSchedule::HalfInverse => "1/(2k)".into(),
            StepSchedule::Custom { label, .. } => label.clone(),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            StepSchedule::Harmonic { c } => Some(*c),
            _ => None,
        }
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Harmonic { c: 1.0 }
    }
}

impl fmt::Debug for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Harmonic { c } => write!(f, "Harmonic {{ c: {c} }}"),
            StepSchedule::HalfInverse => f.write_str("HalfInverse"),
            StepSchedule::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

/// Budget and stopping rule for one run.
///
/// `budget` counts cycles for the cyclic driver and single steps for the
/// random driver and the law-of-large-numbers estimator. A positive
/// `tolerance` stops the run once the distance moved over one cycle (cyclic)
/// or over the trailing `N` steps (random, LLN) drops to it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub budget: u64,
    pub tolerance: f64,
    pub seed: u64,
    pub schedule: StepSchedule,
    /// Record iterates and objective values every `record_every` steps
    /// (the first and last are always kept).
    pub record_every: u64,
}

pub const DEFAULT_BUDGET: u64 = 10_000;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { budget: DEFAULT_BUDGET, tolerance: 0.0, seed: 0, schedule: StepSchedule::default(), record_every: 1 }
    }
}

impl RunConfig {
    pub fn with_budget(budget: u64) -> Self {
        RunConfig { budget, ..Default::default() }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return invalid("budget must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return invalid("tolerance must be nonnegative");
        }
        if self.record_every < 1 {
            return invalid("record_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    Tolerance,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Tolerance => "tolerance",
        }
    }
}

/// Metadata of one resolvent (or inductive-mean) step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step counter.
    pub step: u64,
    pub component: usize,
    /// `None` for the law-of-large-numbers estimator, which has no λ.
    pub lambda: Option<f64>,
    pub t: f64,
    /// Distance between the point before and after the step; NaN for
    /// unrecorded steps of runs without a tolerance.
    pub moved: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// Recorded iterates `x_0, x_1, …` (every `record_every` steps plus the last).
    pub iterates: Vec<SpacePoint>,
    /// Step number of each recorded iterate (0 for the start point).
    pub iterate_steps: Vec<u64>,
    /// Objective value at each recorded iterate.
    pub objective: Vec<f64>,
    /// Metadata of the recorded steps (same sampling as `iterates`).
    pub steps: Vec<StepRecord>,
    /// Number of steps taken.
    pub step_count: u64,
    pub stop_reason: StopReason,
    /// Generator identity for randomized runs.
    pub rng: Option<&'static str>,
}

impl IterationTrace {
    pub fn final_point(&self) -> &SpacePoint {
        self.iterates.last().expect("a trace always holds the start point")
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("a trace always holds the start objective")
    }

    /// Number of resolvent steps taken.
    pub fn iterations(&self) -> u64 {
        self.step_count
    }

    /// Objective value recorded for `step`, if that step was recorded.
    pub fn objective_at(&self, step: u64) -> Option<f64> {
        self.iterate_steps.binary_search(&step).ok().map(|i| self.objective[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::EuclideanPoint;

    #[test]
    fn weights_are_normalized() {
        let a = SpacePoint::from(EuclideanPoint::new(vec![0.0]).unwrap());
        let cfg = AnchorConfiguration::new(vec![a.clone(), a.clone()], vec![3.0, 1.0]).unwrap();
        assert_eq!(cfg.weights(), [0.75, 0.25]);
        assert!(!cfg.is_uniform());
        assert!(AnchorConfiguration::new(vec![a.clone()], vec![0.0]).is_err());
        assert!(AnchorConfiguration::new(vec![a.clone()], vec![1.0, 2.0]).is_err());
        assert!(AnchorConfiguration::new(vec![], vec![]).is_err());
        assert!(AnchorConfiguration::uniform(vec![a.clone(), a.clone(), a]).unwrap().is_uniform());
    }

    #[test]
    fn schedules() {
        let s = StepSchedule::default();
        assert_eq!(s.lambda(0), 1.0);
        assert_eq!(s.lambda(3), 0.25);
        assert_eq!(StepSchedule::harmonic(2.0).unwrap().lambda(1), 1.0);
        assert!(StepSchedule::harmonic(0.0).is_err());
        assert_eq!(StepSchedule::HalfInverse.lambda(0), f64::INFINITY);
        assert_eq!(StepSchedule::HalfInverse.lambda(4), 0.125);
        let bad = StepSchedule::custom("zero", |_| 0.0);
        assert!(bad.checked_lambda(0).is_err());
        assert_eq!(bad.form(), "zero");
    }

    #[test]
    fn harmonic_partial_sums_diverge_while_squares_converge() {
        let s = StepSchedule::default();
        let (mut sum, mut sq) = (0.0, 0.0);
        for k in 0..1_000_000u64 {
            let l = s.lambda(k);
            sum += l;
            sq += l * l;
        }
        assert!(sum > 13.0); // ln(1e6) ≈ 13.8
        assert!(sq < std::f64::consts::PI.powi(2) / 6.0 + 1e-12);
    }
}

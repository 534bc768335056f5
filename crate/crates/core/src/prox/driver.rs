use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::component::{objective_value, ObjectiveComponent};
use super::{IterationTrace, RunConfig, StepRecord, StopReason};
use crate::error::{invalid, Result};
use crate::space::{SpaceHandle, SpacePoint};

/// Identity of the pseudo-random stream behind every randomized run.
pub const RNG_IDENTITY: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9); uniform index = random_range(0..N); \
weighted index = inverse CDF of random::<f64>()";

/// Seeded, reproducible stream of component indices.
#[derive(Debug, Clone)]
pub struct IndexStream {
    rng: ChaCha8Rng,
    sampler: Sampler,
}

#[derive(Debug, Clone)]
enum Sampler {
    Uniform(usize),
    Weighted(Vec<f64>),
}

impl IndexStream {
    pub fn uniform(seed: u64, n: usize) -> Self {
        assert!(n > 0, "index stream over an empty range");
        IndexStream { rng: ChaCha8Rng::seed_from_u64(seed), sampler: Sampler::Uniform(n) }
    }

    /// Samples index `n` with probability `weights[n] / Σ weights`. Equal
    /// weights fall back to the uniform sampler, so the stream matches
    /// [`IndexStream::uniform`] for the same seed.
    pub fn weighted(seed: u64, weights: &[f64]) -> Self {
        assert!(!weights.is_empty(), "index stream over an empty range");
        if weights.iter().all(|w| *w == weights[0]) {
            return Self::uniform(seed, weights.len());
        }
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        IndexStream { rng: ChaCha8Rng::seed_from_u64(seed), sampler: Sampler::Weighted(cdf) }
    }
}

impl Iterator for IndexStream {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(match &self.sampler {
            Sampler::Uniform(n) => self.rng.random_range(0..*n),
            Sampler::Weighted(cdf) => {
                let u: f64 = self.rng.random();
                cdf.iter().position(|c| u < *c).unwrap_or(cdf.len() - 1)
            }
        })
    }
}

/// Collects a trace while a driver runs. Step metadata and iterates are kept
/// every `every` steps and at `last_step`; the last step taken is always kept.
pub(crate) struct Recorder<'a> {
    space: &'a SpaceHandle,
    components: &'a [ObjectiveComponent],
    every: u64,
    last_step: u64,
    pending: Option<StepRecord>,
    trace: IterationTrace,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(
        space: &'a SpaceHandle,
        components: &'a [ObjectiveComponent],
        every: u64,
        last_step: u64,
        rng: Option<&'static str>,
    ) -> Self {
        Recorder {
            space,
            components,
            every,
            last_step,
            pending: None,
            trace: IterationTrace {
                iterates: Vec::new(),
                iterate_steps: Vec::new(),
                objective: Vec::new(),
                steps: Vec::new(),
                step_count: 0,
                stop_reason: StopReason::Budget,
                rng,
            },
        }
    }

    /// Whether `step` will be kept, i.e. whether its metadata must be exact.
    pub(crate) fn wants(&self, step: u64) -> bool {
        step.is_multiple_of(self.every) || step == self.last_step
    }

    pub(crate) fn record_point(&mut self, step: u64, x: &SpacePoint) -> Result<()> {
        self.trace.objective.push(objective_value(self.space, self.components, x)?);
        self.trace.iterates.push(x.clone());
        self.trace.iterate_steps.push(step);
        Ok(())
    }

    pub(crate) fn step(&mut self, record: StepRecord, x: &SpacePoint) -> Result<()> {
        let step = record.step;
        self.trace.step_count = step;
        if self.wants(step) {
            self.pending = None;
            self.trace.steps.push(record);
            self.record_point(step, x)?;
        } else {
            self.pending = Some(record);
        }
        Ok(())
    }

    pub(crate) fn finish(mut self, x: &SpacePoint, reason: StopReason) -> Result<IterationTrace> {
        if let Some(record) = self.pending.take() {
            self.trace.steps.push(record);
        }
        let last = self.trace.step_count;
        if self.trace.iterate_steps.last() != Some(&last) {
            self.record_point(last, x)?;
        }
        self.trace.stop_reason = reason;
        Ok(self.trace)
    }
}

/// `d(x, next)`, skipped (reported as NaN) when nobody will look at it.
fn movement(space: &SpaceHandle, x: &SpacePoint, next: &SpacePoint, needed: bool) -> Result<f64> {
    if needed {
        space.distance(x, next)
    } else {
        Ok(f64::NAN)
    }
}

/// Distance moved over a trailing window of `len` steps.
pub(crate) struct MovementWindow {
    len: usize,
    moves: VecDeque<f64>,
}

impl MovementWindow {
    pub(crate) fn new(len: usize) -> Self {
        MovementWindow { len, moves: VecDeque::with_capacity(len) }
    }

    /// Pushes one step and reports whether a full window moved at most `tol`.
    pub(crate) fn settled(&mut self, moved: f64, tol: f64) -> bool {
        if self.moves.len() == self.len {
            self.moves.pop_front();
        }
        self.moves.push_back(moved);
        tol > 0.0 && self.moves.len() == self.len && self.moves.iter().sum::<f64>() <= tol
    }
}

fn check_components(space: &SpaceHandle, components: &[ObjectiveComponent], x0: &SpacePoint) -> Result<()> {
    if components.is_empty() {
        return invalid("at least one objective component is required");
    }
    components.iter().try_for_each(|c| c.validate(space))?;
    space.check(x0)
}

/// Cyclic splitting PPA: within cycle `k` the resolvents `J^1_{λ_k}, …, J^N_{λ_k}`
/// are applied in order with the same `λ_k`.
pub fn ppa_cyclic(space: &SpaceHandle, components: &[ObjectiveComponent], x0: &SpacePoint, config: &RunConfig) -> Result<IterationTrace> {
    config.validate()?;
    check_components(space, components, x0)?;
    let last_step = config.budget.saturating_mul(components.len() as u64);
    let mut rec = Recorder::new(space, components, config.record_every, last_step, None);
    let track = config.tolerance > 0.0;
    rec.record_point(0, x0)?;
    let mut x = x0.clone();
    let mut step = 0u64;
    for k in 0..config.budget {
        let lambda = config.schedule.checked_lambda(k)?;
        let mut cycle_moved = 0.0;
        for (n, c) in components.iter().enumerate() {
            let next = c.prox(space, lambda, &x)?;
            step += 1;
            let moved = movement(space, &x, &next.point, track || rec.wants(step))?;
            cycle_moved += moved;
            x = next.point;
            rec.step(StepRecord { step, component: n, lambda: Some(lambda), t: next.t, moved }, &x)?;
        }
        if config.tolerance > 0.0 && cycle_moved <= config.tolerance {
            return rec.finish(&x, StopReason::Tolerance);
        }
    }
    rec.finish(&x, StopReason::Budget)
}

/// Random splitting PPA: at step `k` a component index `r_k` is drawn
/// uniformly and `x_{k+1} = J^{r_k}_{λ_k}(x_k)`; λ advances every step.
pub fn ppa_random(space: &SpaceHandle, components: &[ObjectiveComponent], x0: &SpacePoint, config: &RunConfig) -> Result<IterationTrace> {
    if components.is_empty() {
        return invalid("at least one objective component is required");
    }
    let stream = IndexStream::uniform(config.seed, components.len());
    ppa_random_with_indices(space, components, x0, config, stream)
}

/// [`ppa_random`] driven by an explicit index stream.
pub fn ppa_random_with_indices(
    space: &SpaceHandle,
    components: &[ObjectiveComponent],
    x0: &SpacePoint,
    config: &RunConfig,
    mut indices: impl Iterator<Item = usize>,
) -> Result<IterationTrace> {
    config.validate()?;
    check_components(space, components, x0)?;
    let mut rec = Recorder::new(space, components, config.record_every, config.budget, Some(RNG_IDENTITY));
    let track = config.tolerance > 0.0;
    rec.record_point(0, x0)?;
    let mut window = MovementWindow::new(components.len());
    let mut x = x0.clone();
    for k in 0..config.budget {
        let lambda = config.schedule.checked_lambda(k)?;
        let Some(n) = indices.next() else {
            return invalid("index stream ended before the budget was spent");
        };
        let Some(c) = components.get(n) else {
            return invalid(format!("index {n} out of range for {} components", components.len()));
        };
        let next = c.prox(space, lambda, &x)?;
        let moved = movement(space, &x, &next.point, track || rec.wants(k + 1))?;
        x = next.point;
        rec.step(StepRecord { step: k + 1, component: n, lambda: Some(lambda), t: next.t, moved }, &x)?;
        if window.settled(moved, config.tolerance) {
            return rec.finish(&x, StopReason::Tolerance);
        }
    }
    rec.finish(&x, StopReason::Budget)
}

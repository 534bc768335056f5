use super::component::ObjectiveComponent;
use super::driver::{ppa_cyclic, ppa_random, IndexStream, MovementWindow, Recorder, RNG_IDENTITY};
use super::{AnchorConfiguration, IterationTrace, RunConfig, StepRecord, StopReason};
use crate::error::{invalid, Result};
use crate::space::{SpaceHandle, SpacePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanVariant {
    Cyclic,
    Random,
    /// Law-of-large-numbers estimator; anchors are sampled by weight.
    Lln,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianVariant {
    Cyclic,
    Random,
}

/// Components `w_n d(·,a_n)²` of the mean objective.
pub fn mean_components(data: &AnchorConfiguration) -> Vec<ObjectiveComponent> {
    data.anchors()
        .iter()
        .zip(data.weights())
        .map(|(a, w)| ObjectiveComponent::ScaledSquaredDistance { anchor: a.clone(), weight: *w })
        .collect()
}

/// Components `w_n d(·,a_n)` of the median objective.
pub fn median_components(data: &AnchorConfiguration) -> Vec<ObjectiveComponent> {
    data.anchors().iter().zip(data.weights()).map(|(a, w)| ObjectiveComponent::ScaledDistance { anchor: a.clone(), weight: *w }).collect()
}

/// Fréchet mean, the minimizer of `Σ w_n d(·,a_n)²`, started at `a_1`.
///
/// The cyclic and random variants apply
/// `x ← (1/(1+2λw_n)) x ⊕ (2λw_n/(1+2λw_n)) a_n`; the LLN variant runs
/// [`lln_mean`] with `config.budget` steps and `config.seed`.
pub fn frechet_mean(
    space: &SpaceHandle,
    data: &AnchorConfiguration,
    variant: MeanVariant,
    config: &RunConfig,
) -> Result<(SpacePoint, IterationTrace)> {
    data.validate(space)?;
    let trace = match variant {
        MeanVariant::Cyclic => ppa_cyclic(space, &mean_components(data), &data.anchors()[0], config)?,
        MeanVariant::Random => ppa_random(space, &mean_components(data), &data.anchors()[0], config)?,
        MeanVariant::Lln => {
            config.validate()?;
            let stream = IndexStream::weighted(config.seed, data.weights());
            lln_run(space, data, config.budget, config.tolerance, config.record_every, stream)?
        }
    };
    Ok((trace.final_point().clone(), trace))
}

/// A geometric median, a minimizer of `Σ w_n d(·,a_n)`, started at `a_1`.
/// The minimizer set need not be a singleton; the one the iteration
/// approaches is returned.
pub fn geometric_median(
    space: &SpaceHandle,
    data: &AnchorConfiguration,
    variant: MedianVariant,
    config: &RunConfig,
) -> Result<(SpacePoint, IterationTrace)> {
    data.validate(space)?;
    let comps = median_components(data);
    let trace = match variant {
        MedianVariant::Cyclic => ppa_cyclic(space, &comps, &data.anchors()[0], config)?,
        MedianVariant::Random => ppa_random(space, &comps, &data.anchors()[0], config)?,
    };
    Ok((trace.final_point().clone(), trace))
}

/// Inductive mean `S_1 = a_{r_1}`, `S_{k+1} = (k/(k+1)) S_k ⊕ (1/(k+1)) a_{r_{k+1}}`
/// with `r_k` drawn from the weight distribution.
pub fn lln_mean(space: &SpaceHandle, data: &AnchorConfiguration, seed: u64, steps: u64) -> Result<(SpacePoint, IterationTrace)> {
    let stream = IndexStream::weighted(seed, data.weights());
    let trace = lln_run(space, data, steps, 0.0, 1, stream)?;
    Ok((trace.final_point().clone(), trace))
}

/// [`lln_mean`] driven by an explicit index stream.
pub fn lln_mean_with_indices(
    space: &SpaceHandle,
    data: &AnchorConfiguration,
    steps: u64,
    indices: impl Iterator<Item = usize>,
) -> Result<(SpacePoint, IterationTrace)> {
    let trace = lln_run(space, data, steps, 0.0, 1, indices)?;
    Ok((trace.final_point().clone(), trace))
}

fn lln_run(
    space: &SpaceHandle,
    data: &AnchorConfiguration,
    steps: u64,
    tolerance: f64,
    every: u64,
    mut indices: impl Iterator<Item = usize>,
) -> Result<IterationTrace> {
    if steps < 1 {
        return invalid("the estimator needs at least one step");
    }
    data.validate(space)?;
    let comps = mean_components(data);
    let mut rec = Recorder::new(space, &comps, every, steps, Some(RNG_IDENTITY));
    let track = tolerance > 0.0;
    let mut window = MovementWindow::new(data.len());
    let mut draw = || -> Result<usize> {
        match indices.next() {
            Some(n) if n < data.len() => Ok(n),
            Some(n) => invalid(format!("index {n} out of range for {} anchors", data.len())),
            None => invalid("index stream ended before the step budget was spent"),
        }
    };

    let first = draw()?;
    let mut s = data.anchors()[first].clone();
    rec.step(StepRecord { step: 1, component: first, lambda: None, t: 1.0, moved: 0.0 }, &s)?;
    for k in 1..steps {
        let n = draw()?;
        let t = 1.0 / (k as f64 + 1.0);
        let next = space.geodesic_point(&s, &data.anchors()[n], t)?;
        let moved = if track || rec.wants(k + 1) { space.distance(&s, &next)? } else { f64::NAN };
        s = next;
        rec.step(StepRecord { step: k + 1, component: n, lambda: None, t, moved }, &s)?;
        if window.settled(moved, tolerance) {
            return rec.finish(&s, StopReason::Tolerance);
        }
    }
    rec.finish(&s, StopReason::Budget)
}

/// `(J^N_{t/k} ∘ … ∘ J^1_{t/k})^(k) (x0)`, approximating the gradient flow of
/// `Σ f_n` at time `t`.
pub fn lie_trotter_kato(space: &SpaceHandle, components: &[ObjectiveComponent], x0: &SpacePoint, t: f64, k: u64) -> Result<SpacePoint> {
    if components.is_empty() {
        return invalid("at least one objective component is required");
    }
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("flow time must be finite and nonnegative, got {t}"));
    }
    if k < 1 {
        return invalid("the number of resolvent cycles must be at least 1");
    }
    components.iter().try_for_each(|c| c.validate(space))?;
    space.check(x0)?;
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let lambda = t / k as f64;
    let mut x = x0.clone();
    for _ in 0..k {
        for c in components {
            x = c.prox(space, lambda, &x)?.point;
        }
    }
    Ok(x)
}

/// `Σ w_n d(z,a_n)² − Σ w_n d(m,a_n)² − d(z,m)²`; nonnegative for every `z`
/// exactly when `m` is the mean.
pub fn variance_gap(space: &SpaceHandle, data: &AnchorConfiguration, candidate: &SpacePoint, z: &SpacePoint) -> Result<f64> {
    let mut at_z = 0.0;
    let mut at_m = 0.0;
    for (a, w) in data.anchors().iter().zip(data.weights()) {
        at_z += w * space.distance(z, a)?.powi(2);
        at_m += w * space.distance(candidate, a)?.powi(2);
    }
    Ok(at_z - at_m - space.distance(z, candidate)?.powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{EuclideanPoint, SpiderPoint};

    fn e(v: &[f64]) -> SpacePoint {
        EuclideanPoint::new(v.to_vec()).unwrap().into()
    }

    fn s(ray: usize, r: f64) -> SpacePoint {
        SpiderPoint::new(ray, r).unwrap().into()
    }

    fn remark_config() -> AnchorConfiguration {
        AnchorConfiguration::uniform(vec![s(0, 1.0), s(1, 1.0), s(2, 5.0)]).unwrap()
    }

    #[test]
    fn euclidean_triangle_mean() {
        let h = SpaceHandle::euclidean(2).unwrap();
        let data = AnchorConfiguration::uniform(vec![e(&[0.0, 0.0]), e(&[1.0, 0.0]), e(&[0.0, 1.0])]).unwrap();
        let (m, _) = frechet_mean(&h, &data, MeanVariant::Cyclic, &RunConfig::default()).unwrap();
        assert!(h.distance(&m, &e(&[1.0 / 3.0, 1.0 / 3.0])).unwrap() < 1e-3);
    }

    #[test]
    fn spider_mean_lies_on_the_long_ray() {
        let sp = SpaceHandle::spider(3).unwrap();
        let (m, _) = frechet_mean(&sp, &remark_config(), MeanVariant::Cyclic, &RunConfig::with_budget(5000)).unwrap();
        let m = m.as_spider().unwrap();
        assert_eq!(m.ray(), 2);
        assert!((m.radius() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn spider_median_is_the_origin() {
        let sp = SpaceHandle::spider(3).unwrap();
        let (m, trace) = geometric_median(&sp, &remark_config(), MedianVariant::Cyclic, &RunConfig::default()).unwrap();
        assert!(sp.distance(&m, &s(0, 0.0)).unwrap() < 1e-2);
        assert!((trace.final_objective() - 7.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn single_anchor_is_its_own_mean_and_median() {
        let h = SpaceHandle::euclidean(2).unwrap();
        let data = AnchorConfiguration::uniform(vec![e(&[0.3, -1.0])]).unwrap();
        for v in [MeanVariant::Cyclic, MeanVariant::Random, MeanVariant::Lln] {
            let (m, _) = frechet_mean(&h, &data, v, &RunConfig::with_budget(50)).unwrap();
            assert_eq!(m, data.anchors()[0]);
        }
        for v in [MedianVariant::Cyclic, MedianVariant::Random] {
            let (m, _) = geometric_median(&h, &data, v, &RunConfig::with_budget(50)).unwrap();
            assert_eq!(m, data.anchors()[0]);
        }
        let (m, t) = lln_mean(&h, &data, 3, 1).unwrap();
        assert_eq!(m, data.anchors()[0]);
        assert_eq!(t.iterations(), 1);
    }

    #[test]
    fn lln_with_equal_anchors_never_moves() {
        let h = SpaceHandle::euclidean(1).unwrap();
        let a = e(&[2.5]);
        let data = AnchorConfiguration::uniform(vec![a.clone(), a.clone(), a.clone()]).unwrap();
        let (_, trace) = lln_mean(&h, &data, 9, 100).unwrap();
        assert!(trace.iterates.iter().all(|p| *p == a));
        assert!(lln_mean(&h, &data, 9, 0).is_err());
    }

    #[test]
    fn flow_examples() {
        let h = SpaceHandle::euclidean(1).unwrap();
        let comp = ObjectiveComponent::ScaledSquaredDistance { anchor: e(&[0.0]), weight: 1.0 };
        let x0 = e(&[1.0]);
        assert_eq!(lie_trotter_kato(&h, std::slice::from_ref(&comp), &x0, 0.0, 10).unwrap(), x0);
        let k = 10_000u64;
        let x = lie_trotter_kato(&h, std::slice::from_ref(&comp), &x0, 1.0, k).unwrap();
        let closed = (1.0 + 2.0 / k as f64).powi(-(k as i32));
        assert!((x.as_euclidean().unwrap().coords()[0] - closed).abs() < 1e-12);
        let x = lie_trotter_kato(&h, &[comp.clone(), comp.clone()], &x0, 1.0, k).unwrap();
        assert!((x.as_euclidean().unwrap().coords()[0] - (-4f64).exp()).abs() < 1e-3);
        assert!(lie_trotter_kato(&h, &[], &x0, 1.0, k).is_err());
        assert!(lie_trotter_kato(&h, std::slice::from_ref(&comp), &x0, -1.0, k).is_err());
        assert!(lie_trotter_kato(&h, &[comp], &x0, 1.0, 0).is_err());
    }

    #[test]
    fn variance_gap_examples() {
        let sp = SpaceHandle::spider(3).unwrap();
        let data = remark_config();
        let xi = s(2, 1.0);
        assert_eq!(variance_gap(&sp, &data, &xi, &xi).unwrap(), 0.0);
        // (1 + 1 + 25)/3 − 8 − 1 = 0
        assert!(variance_gap(&sp, &data, &xi, &s(0, 0.0)).unwrap().abs() < 1e-14);
        let h = SpaceHandle::euclidean(2).unwrap();
        let data = AnchorConfiguration::uniform(vec![e(&[0.0, 0.0]), e(&[3.0, 0.0]), e(&[0.0, 3.0])]).unwrap();
        let g = variance_gap(&h, &data, &e(&[1.0, 1.0]), &e(&[-2.0, 7.5])).unwrap();
        assert!(g.abs() < 1e-12);
    }
}

//! Component functions `f_n` and their resolvents
//! `J_λ(x) = argmin_y f_n(y) + d(x,y)²/(2λ)`.
//!
//! Every shipped resolvent moves `x` along a single geodesic, so each one is
//! described by a target point and a coefficient `t ∈ [0,1]`.

use crate::error::{invalid, Result};
use crate::space::{GeodesicBall, SpaceHandle, SpacePoint};

/// A closed convex set with a computable metric projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Ball(GeodesicBall),
}

impl ConvexSet {
    pub fn project(&self, space: &SpaceHandle, x: &SpacePoint) -> Result<SpacePoint> {
        match self {
            ConvexSet::Ball(ball) => space.project_ball(ball, x),
        }
    }

    /// `d(x; C)`.
    pub fn distance(&self, space: &SpaceHandle, x: &SpacePoint) -> Result<f64> {
        match self {
            ConvexSet::Ball(ball) => Ok((space.distance(&ball.center, x)? - ball.radius).max(0.0)),
        }
    }

    pub fn contains(&self, space: &SpaceHandle, x: &SpacePoint) -> Result<bool> {
        let slack = space.tolerance().max(1e-12);
        match self {
            ConvexSet::Ball(ball) => Ok(space.distance(&ball.center, x)? <= ball.radius + slack * (1.0 + ball.radius)),
        }
    }
}

/// One summand `f_n` of the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveComponent {
    /// `w · d(·, anchor)`
    ScaledDistance { anchor: SpacePoint, weight: f64 },
    /// `w · d(·, anchor)²`
    ScaledSquaredDistance { anchor: SpacePoint, weight: f64 },
    /// `0` on the set, `+∞` off it
    Indicator(ConvexSet),
    /// `w · d(·; C)`
    ScaledSetDistance { set: ConvexSet, weight: f64 },
}

/// Result of one resolvent evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxStep {
    pub point: SpacePoint,
    /// Geodesic coefficient toward the component's target.
    pub t: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be positive, got {v}"))
    }
}

/// `t = 2λw / (1 + 2λw)`; an infinite λ gives `t = 1`.
pub fn squared_distance_coefficient(weight: f64, lambda: f64) -> f64 {
    if lambda.is_infinite() {
        return 1.0;
    }
    let s = 2.0 * lambda * weight;
    s / (1.0 + s)
}

/// `t = min{1, λw / d}`, with `t = 1` when `d` is within tolerance of zero.
pub fn distance_coefficient(weight: f64, lambda: f64, d: f64, tolerance: f64) -> f64 {
    if d <= tolerance {
        return 1.0;
    }
    (lambda * weight / d).min(1.0)
}

pub(crate) fn prox_squared_step(space: &SpaceHandle, anchor: &SpacePoint, weight: f64, lambda: f64, x: &SpacePoint) -> Result<ProxStep> {
    check_positive("weight", weight)?;
    check_positive("lambda", lambda)?;
    let t = squared_distance_coefficient(weight, lambda);
    Ok(ProxStep { point: space.geodesic_point(x, anchor, t)?, t })
}

pub(crate) fn prox_distance_step(space: &SpaceHandle, anchor: &SpacePoint, weight: f64, lambda: f64, x: &SpacePoint) -> Result<ProxStep> {
    check_positive("weight", weight)?;
    check_positive("lambda", lambda)?;
    let d = space.distance(anchor, x)?;
    let t = distance_coefficient(weight, lambda, d, space.tolerance());
    let point = if t == 1.0 { anchor.clone() } else { space.geodesic_point(x, anchor, t)? };
    Ok(ProxStep { point, t })
}

fn prox_set_distance_step(space: &SpaceHandle, set: &ConvexSet, weight: f64, lambda: f64, x: &SpacePoint) -> Result<ProxStep> {
    check_positive("weight", weight)?;
    check_positive("lambda", lambda)?;
    let target = set.project(space, x)?;
    let d = space.distance(&target, x)?;
    if d <= space.tolerance() {
        return Ok(ProxStep { point: x.clone(), t: 0.0 });
    }
    let t = (lambda * weight / d).min(1.0);
    let point = if t == 1.0 { target } else { space.geodesic_point(x, &target, t)? };
    Ok(ProxStep { point, t })
}

fn prox_indicator_step(space: &SpaceHandle, set: &ConvexSet, x: &SpacePoint) -> Result<ProxStep> {
    let p = set.project(space, x)?;
    let t = if space.distance(&p, x)? > 0.0 { 1.0 } else { 0.0 };
    Ok(ProxStep { point: p, t })
}

/// Resolvent of `w·d(·,anchor)²`: the point `2λw/(1+2λw)` of the way from `x` to the anchor.
pub fn prox_scaled_squared_distance(
    space: &SpaceHandle,
    anchor: &SpacePoint,
    weight: f64,
    lambda: f64,
    x: &SpacePoint,
) -> Result<SpacePoint> {
    Ok(prox_squared_step(space, anchor, weight, lambda, x)?.point)
}

/// Resolvent of `w·d(·,anchor)`: moves `min{λw, d}` toward the anchor.
pub fn prox_scaled_distance(space: &SpaceHandle, anchor: &SpacePoint, weight: f64, lambda: f64, x: &SpacePoint) -> Result<SpacePoint> {
    Ok(prox_distance_step(space, anchor, weight, lambda, x)?.point)
}

/// Resolvent of an indicator: the metric projection, for every λ.
pub fn prox_indicator(space: &SpaceHandle, set: &ConvexSet, x: &SpacePoint) -> Result<SpacePoint> {
    Ok(prox_indicator_step(space, set, x)?.point)
}

/// Resolvent of `w·d(·;C)`: moves `min{λw, d(x;C)}` toward the projection of `x`.
pub fn prox_scaled_set_distance(space: &SpaceHandle, set: &ConvexSet, weight: f64, lambda: f64, x: &SpacePoint) -> Result<SpacePoint> {
    Ok(prox_set_distance_step(space, set, weight, lambda, x)?.point)
}

impl ObjectiveComponent {
    pub fn validate(&self, space: &SpaceHandle) -> Result<()> {
        match self {
            ObjectiveComponent::ScaledDistance { anchor, weight } | ObjectiveComponent::ScaledSquaredDistance { anchor, weight } => {
                check_positive("weight", *weight)?;
                space.check(anchor)
            }
            ObjectiveComponent::Indicator(ConvexSet::Ball(b)) => space.check(&b.center),
            ObjectiveComponent::ScaledSetDistance { set: ConvexSet::Ball(b), weight } => {
                check_positive("weight", *weight)?;
                space.check(&b.center)
            }
        }
    }

    pub fn value(&self, space: &SpaceHandle, x: &SpacePoint) -> Result<f64> {
        match self {
            ObjectiveComponent::ScaledDistance { anchor, weight } => Ok(weight * space.distance(anchor, x)?),
            ObjectiveComponent::ScaledSquaredDistance { anchor, weight } => Ok(weight * space.distance(anchor, x)?.powi(2)),
            ObjectiveComponent::Indicator(set) => Ok(if set.contains(space, x)? { 0.0 } else { f64::INFINITY }),
            ObjectiveComponent::ScaledSetDistance { set, weight } => Ok(weight * set.distance(space, x)?),
        }
    }

    pub fn prox(&self, space: &SpaceHandle, lambda: f64, x: &SpacePoint) -> Result<ProxStep> {
        match self {
            ObjectiveComponent::ScaledDistance { anchor, weight } => prox_distance_step(space, anchor, *weight, lambda, x),
            ObjectiveComponent::ScaledSquaredDistance { anchor, weight } => prox_squared_step(space, anchor, *weight, lambda, x),
            ObjectiveComponent::Indicator(set) => {
                check_positive("lambda", lambda)?;
                prox_indicator_step(space, set, x)
            }
            ObjectiveComponent::ScaledSetDistance { set, weight } => prox_set_distance_step(space, set, *weight, lambda, x),
        }
    }
}

/// `Σ f_n(x)`; infinite when an indicator is violated.
pub fn objective_value(space: &SpaceHandle, components: &[ObjectiveComponent], x: &SpacePoint) -> Result<f64> {
    let mut total = 0.0;
    for c in components {
        total += c.value(space, x)?;
    }
    Ok(total)
}

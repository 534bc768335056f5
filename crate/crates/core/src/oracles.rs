//! Reference solvers used to check the proximal drivers.
//!
//! Nothing here calls a resolvent: the Euclidean oracles work on raw
//! coordinates, the spider search minimizes the per-ray objectives directly,
//! and the 1-D prox oracle minimizes the resolvent's defining objective along
//! the geodesic by golden-section search.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::prox::{lln_mean_with_indices, AnchorConfiguration, IndexStream, ObjectiveComponent};
use crate::space::{Backend, SpaceHandle, SpacePoint};
use crate::spaces::{EuclideanPoint, SpdPoint, SpiderPoint};

/// How an entry's solver value is judged against its oracle value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|solver − oracle| ≤ tolerance`
    Within,
    /// `solver ≤ oracle + tolerance` (oracle is an upper bound)
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEntry {
    pub label: String,
    pub oracle: f64,
    pub solver: f64,
    pub abs_gap: f64,
    /// `abs_gap / max(|oracle|, 1)`
    pub rel_gap: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_point: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_point: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub instance: String,
    pub entries: Vec<OracleEntry>,
}

impl OracleReport {
    pub fn new(instance: impl Into<String>) -> Self {
        OracleReport { instance: instance.into(), entries: Vec::new() }
    }

    fn push(&mut self, label: String, oracle: f64, solver: f64, tolerance: f64, comparison: Comparison) -> &mut OracleEntry {
        let abs_gap = (solver - oracle).abs();
        let rel_gap = abs_gap / oracle.abs().max(1.0);
        let passed = match comparison {
            Comparison::Within => abs_gap <= tolerance,
            Comparison::AtMost => solver <= oracle + tolerance,
        };
        self.entries.push(OracleEntry {
            label,
            oracle,
            solver,
            abs_gap,
            rel_gap,
            tolerance,
            comparison,
            passed,
            oracle_point: None,
            solver_point: None,
        });
        self.entries.last_mut().expect("just pushed")
    }

    /// Records a value check `|solver − oracle| ≤ tolerance`.
    pub fn within(&mut self, label: impl Into<String>, oracle: f64, solver: f64, tolerance: f64) -> &mut OracleEntry {
        self.push(label.into(), oracle, solver, tolerance, Comparison::Within)
    }

    /// Records a bound check `solver ≤ oracle + slack`.
    pub fn at_most(&mut self, label: impl Into<String>, bound: f64, solver: f64, slack: f64) -> &mut OracleEntry {
        self.push(label.into(), bound, solver, slack, Comparison::AtMost)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl OracleEntry {
    pub fn with_points(&mut self, oracle: impl Into<String>, solver: impl Into<String>) -> &mut Self {
        self.oracle_point = Some(oracle.into());
        self.solver_point = Some(solver.into());
        self
    }
}

fn euclidean_anchors(data: &AnchorConfiguration) -> Result<Vec<&[f64]>> {
    data.anchors()
        .iter()
        .map(|a| match a.as_euclidean() {
            Some(p) => Ok(p.coords()),
            None => invalid("Euclidean oracle called on non-Euclidean anchors"),
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `Σ w_n a_n`.
pub fn euclidean_mean_closed_form(data: &AnchorConfiguration) -> Result<EuclideanPoint> {
    let anchors = euclidean_anchors(data)?;
    let mut mean = vec![0.0; anchors[0].len()];
    for (a, w) in anchors.iter().zip(data.weights()) {
        for (m, x) in mean.iter_mut().zip(a.iter()) {
            *m += w * x;
        }
    }
    EuclideanPoint::new(mean)
}

/// `Σ w_n ‖x − a_n‖` on raw coordinates.
pub fn euclidean_median_objective(data: &AnchorConfiguration, x: &[f64]) -> Result<f64> {
    let anchors = euclidean_anchors(data)?;
    Ok(anchors.iter().zip(data.weights()).map(|(a, w)| w * dist(x, a)).sum())
}

/// Weiszfeld iterates from the weighted mean, with the Vardi–Zhang rule at
/// anchors: an iterate sitting on `a_j` stays there when
/// `‖Σ_{n≠j} w_n (a_n − a_j)/‖a_n − a_j‖‖ ≤ w_j` and otherwise steps off
/// along that direction. The objective is nonincreasing along the returned
/// path.
pub fn weiszfeld_path(data: &AnchorConfiguration, iterations: usize, tol: f64) -> Result<Vec<EuclideanPoint>> {
    let anchors = euclidean_anchors(data)?;
    let weights = data.weights();
    let dim = anchors[0].len();
    let scale = anchors.iter().flat_map(|a| a.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let hit = tol.max(1e-14 * scale);

    let mut x = euclidean_mean_closed_form(data)?.into_coords();
    let mut path = vec![EuclideanPoint::new(x.clone())?];
    for _ in 0..iterations {
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        let mut resultant = vec![0.0; dim];
        let mut eta = 0.0;
        for (a, w) in anchors.iter().zip(weights) {
            let d = dist(&x, a);
            if d <= hit {
                eta += w;
                continue;
            }
            for i in 0..dim {
                num[i] += w * a[i] / d;
                resultant[i] += w * (a[i] - x[i]) / d;
            }
            den += w / d;
        }
        if den == 0.0 {
            break; // every anchor coincides with x
        }
        let r = norm(&resultant);
        if r <= eta {
            break; // x is an anchor satisfying the optimality test
        }
        let blend = if eta > 0.0 { (eta / r).min(1.0) } else { 0.0 };
        let next: Vec<f64> = (0..dim).map(|i| (1.0 - blend) * num[i] / den + blend * x[i]).collect();
        let step = dist(&next, &x);
        x = next;
        path.push(EuclideanPoint::new(x.clone())?);
        if step <= tol {
            break;
        }
    }
    Ok(path)
}

pub fn weiszfeld_median(data: &AnchorConfiguration, iterations: usize, tol: f64) -> Result<EuclideanPoint> {
    Ok(weiszfeld_path(data, iterations, tol)?.pop().expect("path holds the start point"))
}

/// Global minimizer of `Σ w_n d(·,a_n)^p` (`p` = 1 or 2) on a spider. The
/// objective is convex along each ray, so each ray is searched by bisection
/// on the sign of its right derivative down to `resolution`.
pub fn spider_1d_search(space: &SpaceHandle, data: &AnchorConfiguration, p: u32, resolution: f64) -> Result<(SpiderPoint, f64)> {
    let Backend::Spider { rays } = space.backend() else {
        return invalid("spider search needs a spider space");
    };
    if p != 1 && p != 2 {
        return invalid(format!("exponent must be 1 or 2, got {p}"));
    }
    if resolution.is_nan() || resolution <= 0.0 {
        return invalid("resolution must be positive");
    }
    let anchors: Vec<(usize, f64, f64)> = data
        .anchors()
        .iter()
        .zip(data.weights())
        .map(|(a, w)| match a.as_spider() {
            Some(s) => Ok((s.ray(), s.radius(), *w)),
            None => invalid("spider search called on non-spider anchors"),
        })
        .collect::<Result<_>>()?;
    let reach = anchors.iter().map(|a| a.1).fold(0.0, f64::max);

    let objective = |ray: usize, s: f64| -> f64 {
        anchors
            .iter()
            .map(|&(r, rho, w)| {
                let d = if r == ray || rho == 0.0 { (s - rho).abs() } else { s + rho };
                w * d.powi(p as i32)
            })
            .sum()
    };

    // right derivative of the per-ray objective; its sign change locates the
    // minimizer without comparing nearly equal objective values
    let slope = |ray: usize, s: f64| -> f64 {
        anchors
            .iter()
            .map(|&(r, rho, w)| {
                let (d, dd) = if r == ray || rho == 0.0 { ((s - rho).abs(), if s >= rho { 1.0 } else { -1.0 }) } else { (s + rho, 1.0) };
                w * if p == 1 { dd } else { 2.0 * d * dd }
            })
            .sum()
    };

    let mut best = (SpiderPoint::origin(), objective(0, 0.0));
    for ray in 0..rays {
        if slope(ray, 0.0) >= 0.0 {
            continue; // the origin is optimal along this ray
        }
        let (mut lo, mut hi) = (0.0, reach);
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            if slope(ray, mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let value = objective(ray, s);
        if value < best.1 {
            best = (SpiderPoint::new(ray, s)?, value);
        }
    }
    Ok(best)
}

/// Resolvent of an anchor-based component computed by golden-section
/// minimization of `f_n(γ(t)) + d(x,γ(t))²/(2λ)` over `t ∈ [0,1]`, where
/// `γ` is the geodesic from `x` to the anchor. Returns the point and `t`.
pub fn prox_1d_oracle(
    space: &SpaceHandle,
    component: &ObjectiveComponent,
    lambda: f64,
    x: &SpacePoint,
    resolution: f64,
) -> Result<(SpacePoint, f64)> {
    let (anchor, weight, p) = match component {
        ObjectiveComponent::ScaledDistance { anchor, weight } => (anchor, *weight, 1),
        ObjectiveComponent::ScaledSquaredDistance { anchor, weight } => (anchor, *weight, 2),
        _ => return invalid("the 1-D prox oracle needs an anchor-based component"),
    };
    if lambda.is_nan() || lambda <= 0.0 || resolution.is_nan() || resolution <= 0.0 {
        return invalid("lambda and resolution must be positive");
    }
    let f = |t: f64| -> Result<f64> {
        let y = space.geodesic_point(x, anchor, t)?;
        Ok(weight * space.distance(&y, anchor)?.powi(p) + space.distance(x, &y)?.powi(2) / (2.0 * lambda))
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > resolution {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    let mut t = 0.5 * (a + b);
    // the minimizer may sit on an end of the interval
    let mut ft = f(t)?;
    for end in [0.0, 1.0] {
        let fe = f(end)?;
        if fe <= ft {
            t = end;
            ft = fe;
        }
    }
    Ok((space.geodesic_point(x, anchor, t)?, t))
}

/// Mean of two SPD matrices: the geodesic midpoint `A^{1/2}(A^{-1/2}BA^{-1/2})^{1/2}A^{1/2}`.
pub fn spd_two_point_mean(space: &SpaceHandle, a: &SpdPoint, b: &SpdPoint) -> Result<SpacePoint> {
    space.geodesic_point(&a.clone().into(), &b.clone().into(), 0.5)
}

/// Weighted mean of diagonal SPD matrices, `exp(Σ w_n log D_n)` entrywise.
pub fn spd_diagonal_mean(data: &AnchorConfiguration) -> Result<SpdPoint> {
    let mut log_mean: Option<Vec<f64>> = None;
    for (a, w) in data.anchors().iter().zip(data.weights()) {
        let Some(m) = a.as_spd() else {
            return invalid("diagonal mean needs SPD anchors");
        };
        let m = m.matrix();
        let n = m.nrows();
        if (0..n).any(|i| (0..n).any(|j| i != j && m[(i, j)] != 0.0)) {
            return invalid("diagonal mean needs diagonal anchors");
        }
        let acc = log_mean.get_or_insert_with(|| vec![0.0; n]);
        for (i, v) in acc.iter_mut().enumerate() {
            *v += w * m[(i, i)].ln();
        }
    }
    let diag: Vec<f64> = log_mean.expect("at least one anchor").iter().map(|v| v.exp()).collect();
    SpdPoint::new(nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)), 0.0)
}

/// Empirical `E d(Ξ,S_k)²` of the inductive mean over `seeds` independent
/// runs (seeds `0..seeds`) against the bound `ξ/k`, `ξ = Σ w_n d(Ξ,a_n)²`.
/// Each entry passes when the empirical value is at most the bound plus three
/// Monte-Carlo standard errors.
pub fn lln_rate_report(
    space: &SpaceHandle,
    data: &AnchorConfiguration,
    mean: &SpacePoint,
    seeds: u64,
    checkpoints: &[u64],
) -> Result<OracleReport> {
    if seeds < 2 {
        return invalid("at least two seeds are needed for a standard error");
    }
    if checkpoints.is_empty() || checkpoints.contains(&0) {
        return invalid("checkpoints must be nonempty and positive");
    }
    let xi: f64 = data.anchors().iter().zip(data.weights()).map(|(a, w)| Ok(w * space.distance(mean, a)?.powi(2))).sum::<Result<f64>>()?;
    let horizon = *checkpoints.iter().max().expect("nonempty");
    let mut samples = vec![Vec::with_capacity(seeds as usize); checkpoints.len()];
    for seed in 0..seeds {
        let stream = IndexStream::weighted(seed, data.weights());
        let (_, trace) = lln_mean_with_indices(space, data, horizon, stream)?;
        for (i, k) in checkpoints.iter().enumerate() {
            let s_k = &trace.iterates[(*k - 1) as usize];
            samples[i].push(space.distance(mean, s_k)?.powi(2));
        }
    }
    let mut report = OracleReport::new(format!("{} anchors on {}, {seeds} seeds, xi = {xi}", data.len(), space.backend()));
    for (k, values) in checkpoints.iter().zip(&samples) {
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n - 1.0);
        let stderr = (var / n).sqrt();
        report.at_most(format!("E d(mean, S_{k})^2 <= xi/{k}"), xi / *k as f64, avg, 3.0 * stderr);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{distance_coefficient, squared_distance_coefficient};

    fn e(v: &[f64]) -> SpacePoint {
        EuclideanPoint::new(v.to_vec()).unwrap().into()
    }

    fn s(ray: usize, r: f64) -> SpacePoint {
        SpiderPoint::new(ray, r).unwrap().into()
    }

    fn triangle() -> AnchorConfiguration {
        AnchorConfiguration::uniform(vec![e(&[0.0, 0.0]), e(&[1.0, 0.0]), e(&[0.0, 1.0])]).unwrap()
    }

    #[test]
    fn closed_form_means() {
        assert_eq!(euclidean_mean_closed_form(&triangle()).unwrap().coords(), [1.0 / 3.0, 1.0 / 3.0]);
        let one = AnchorConfiguration::uniform(vec![e(&[4.0, -1.0])]).unwrap();
        assert_eq!(euclidean_mean_closed_form(&one).unwrap().coords(), [4.0, -1.0]);
        let skew = AnchorConfiguration::new(vec![e(&[0.0]), e(&[10.0])], vec![0.9, 0.1]).unwrap();
        assert!((euclidean_mean_closed_form(&skew).unwrap().coords()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weiszfeld_examples() {
        let fermat = (3.0 - 3f64.sqrt()) / 6.0;
        let m = weiszfeld_median(&triangle(), 10_000, 1e-15).unwrap();
        assert!((m.coords()[0] - fermat).abs() < 1e-6 && (m.coords()[1] - fermat).abs() < 1e-6);

        let pair = AnchorConfiguration::uniform(vec![e(&[0.0, 0.0]), e(&[2.0, 0.0])]).unwrap();
        let m = weiszfeld_median(&pair, 100, 1e-12).unwrap();
        assert!((euclidean_median_objective(&pair, m.coords()).unwrap() - 1.0).abs() < 1e-12);

        let one = AnchorConfiguration::uniform(vec![e(&[3.0, 3.0])]).unwrap();
        assert_eq!(weiszfeld_median(&one, 100, 1e-12).unwrap().coords(), [3.0, 3.0]);
    }

    #[test]
    fn weiszfeld_stops_on_a_dominant_anchor() {
        // the heavy anchor is optimal: its weight exceeds the pull of the rest
        let data = AnchorConfiguration::new(vec![e(&[0.0, 0.0]), e(&[1.0, 0.0]), e(&[0.0, 1.0])], vec![3.0, 1.0, 1.0]).unwrap();
        let path = weiszfeld_path(&data, 10_000, 1e-14).unwrap();
        let m = path.last().unwrap();
        assert!(norm(m.coords()) < 1e-9);
        for w in path.windows(2) {
            let before = euclidean_median_objective(&data, w[0].coords()).unwrap();
            let after = euclidean_median_objective(&data, w[1].coords()).unwrap();
            assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn spider_search_examples() {
        let sp = SpaceHandle::spider(3).unwrap();
        let data = AnchorConfiguration::uniform(vec![s(0, 1.0), s(1, 1.0), s(2, 5.0)]).unwrap();
        let (m, v) = spider_1d_search(&sp, &data, 2, 1e-12).unwrap();
        assert_eq!(m.ray(), 2);
        assert!((m.radius() - 1.0).abs() < 1e-9);
        assert!((v - 8.0).abs() < 1e-9);
        let (m, v) = spider_1d_search(&sp, &data, 1, 1e-12).unwrap();
        assert!(m.radius() < 1e-9);
        assert!((v - 7.0 / 3.0).abs() < 1e-9);

        let line = AnchorConfiguration::uniform(vec![s(1, 1.0), s(1, 2.0), s(1, 6.0)]).unwrap();
        let (m, _) = spider_1d_search(&sp, &line, 2, 1e-12).unwrap();
        assert!(m.ray() == 1 && (m.radius() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn prox_oracle_matches_closed_forms() {
        let h = SpaceHandle::euclidean(1).unwrap();
        let anchor = e(&[0.0]);
        let x = e(&[2.0]);
        for (lambda, weight) in [(0.5, 1.0), (1.0, 1.0), (3.0, 1.0), (0.2, 2.5)] {
            let dist = ObjectiveComponent::ScaledDistance { anchor: anchor.clone(), weight };
            let (_, t) = prox_1d_oracle(&h, &dist, lambda, &x, 1e-12).unwrap();
            assert!((t - distance_coefficient(weight, lambda, 2.0, 0.0)).abs() < 1e-6);
            let sq = ObjectiveComponent::ScaledSquaredDistance { anchor: anchor.clone(), weight };
            let (_, t) = prox_1d_oracle(&h, &sq, lambda, &x, 1e-12).unwrap();
            assert!((t - squared_distance_coefficient(weight, lambda)).abs() < 1e-6);
        }
        let at = ObjectiveComponent::ScaledDistance { anchor: anchor.clone(), weight: 1.0 };
        assert_eq!(prox_1d_oracle(&h, &at, 1.0, &anchor, 1e-9).unwrap().0, anchor);
        assert!(prox_1d_oracle(
            &h,
            &ObjectiveComponent::Indicator(crate::ConvexSet::Ball(crate::GeodesicBall::new(anchor.clone(), 1.0).unwrap())),
            1.0,
            &x,
            1e-9
        )
        .is_err());
    }

    #[test]
    fn diagonal_spd_mean() {
        let a = SpdPoint::from_row_major(2, &[1.0, 0.0, 0.0, 4.0], 0.0).unwrap();
        let b = SpdPoint::from_row_major(2, &[4.0, 0.0, 0.0, 1.0], 0.0).unwrap();
        let data = AnchorConfiguration::uniform(vec![a.clone().into(), b.clone().into()]).unwrap();
        let m = spd_diagonal_mean(&data).unwrap();
        assert!((m.matrix() - nalgebra::DMatrix::<f64>::identity(2, 2) * 2.0).amax() < 1e-12);
        let sp = SpaceHandle::spd(2).unwrap();
        let mid = spd_two_point_mean(&sp, &a, &b).unwrap();
        assert!(sp.distance(&mid, &m.into()).unwrap() < 1e-12);
    }

    #[test]
    fn lln_rate_examples() {
        let h = SpaceHandle::euclidean(1).unwrap();
        let pair = AnchorConfiguration::uniform(vec![e(&[0.0]), e(&[1.0])]).unwrap();
        let report = lln_rate_report(&h, &pair, &e(&[0.5]), 1000, &[100]).unwrap();
        assert!((report.entries[0].oracle - 0.0025).abs() < 1e-15);
        assert!(report.passed(), "{}", report.to_json());

        let one = AnchorConfiguration::uniform(vec![e(&[2.0])]).unwrap();
        let report = lln_rate_report(&h, &one, &e(&[2.0]), 10, &[1, 5]).unwrap();
        assert!(report.entries.iter().all(|e| e.solver == 0.0 && e.passed));
    }
}

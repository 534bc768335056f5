//! Geodesics between trees by exhaustive search over support sequences.
//!
//! Splits present in both trees, or present in one tree and compatible with
//! every split of the other, keep a fixed orthant coordinate along the whole
//! geodesic and interpolate linearly. The remaining splits `A` (first tree)
//! and `B` (second tree) are partitioned into aligned blocks
//! `(A_1,B_1) … (A_k,B_k)` such that
//!
//! * `B_i` is compatible with every split of `A_j` for `i < j`, and
//! * `‖A_1‖/‖B_1‖ ≤ … ≤ ‖A_k‖/‖B_k‖`.
//!
//! Every such sequence describes a path of length
//! `sqrt(Σ (‖A_i‖+‖B_i‖)² + shared terms)`; the geodesic is the shortest.

use std::collections::BTreeMap;

use super::{taxa_mismatch, BhvPoint, Split};
use crate::error::{Error, Result};

/// Largest leaf count accepted by the exhaustive search.
pub const GEODESIC_LEAF_LIMIT: usize = 8;

const RATIO_SLACK: f64 = 1e-12;

struct Block {
    a: Vec<(Split, f64)>,
    b: Vec<(Split, f64)>,
    norm_a: f64,
    norm_b: f64,
}

struct Plan {
    /// (split, length in first tree, length in second tree)
    shared: Vec<(Split, f64, f64)>,
    blocks: Vec<Block>,
    squared_length: f64,
}

fn check_pair(t: &BhvPoint, u: &BhvPoint) -> Result<()> {
    if t.leaf_count() != u.leaf_count() {
        return Err(taxa_mismatch(format!("trees have {} and {} leaves", t.leaf_count(), u.leaf_count())));
    }
    if t.leaf_count() > GEODESIC_LEAF_LIMIT {
        return Err(Error::LeafGuard { leaves: t.leaf_count(), limit: GEODESIC_LEAF_LIMIT });
    }
    Ok(())
}

fn pendant_term(t: &BhvPoint, u: &BhvPoint) -> f64 {
    t.pendants().iter().zip(u.pendants()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Splits each tree's interior splits into those shared (in the sense above)
/// and those in conflict with the other tree.
type Partition = (Vec<(Split, f64, f64)>, Vec<(Split, f64)>, Vec<(Split, f64)>);

fn partition(t: &BhvPoint, u: &BhvPoint) -> Partition {
    let mut shared = Vec::new();
    let mut only_t = Vec::new();
    let mut only_u = Vec::new();
    for (s, &l) in t.splits() {
        if let Some(&lu) = u.splits().get(s) {
            shared.push((*s, l, lu));
        } else if u.splits().keys().all(|f| f.compatible(s)) {
            shared.push((*s, l, 0.0));
        } else {
            only_t.push((*s, l));
        }
    }
    for (s, &l) in u.splits() {
        if t.splits().contains_key(s) {
            continue;
        }
        if t.splits().keys().all(|e| e.compatible(s)) {
            shared.push((*s, 0.0, l));
        } else {
            only_u.push((*s, l));
        }
    }
    (shared, only_t, only_u)
}

struct Search {
    norm2_a: Vec<f64>,
    norm2_b: Vec<f64>,
    /// For each subset of B, the subset of A compatible with all of it.
    compat: Vec<u32>,
    best: f64,
    best_path: Vec<(u32, u32)>,
    path: Vec<(u32, u32)>,
}

fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut sub = mask;
    let mut done = mask == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
            return None;
        }
        sub = (sub - 1) & mask;
        Some(cur)
    })
}

impl Search {
    fn run(&mut self, rem_a: u32, rem_b: u32, last_ratio: f64, acc: f64) {
        if rem_a == 0 && rem_b == 0 {
            if acc < self.best {
                self.best = acc;
                self.best_path = self.path.clone();
            }
            return;
        }
        for sub_a in submasks(rem_a) {
            let rest_a = rem_a ^ sub_a;
            let na = self.norm2_a[sub_a as usize].sqrt();
            for sub_b in submasks(rem_b) {
                let rest_b = rem_b ^ sub_b;
                if (rest_a == 0) != (rest_b == 0) {
                    continue;
                }
                if self.compat[sub_b as usize] & rest_a != rest_a {
                    continue;
                }
                let nb = self.norm2_b[sub_b as usize].sqrt();
                let ratio = na / nb;
                if ratio < last_ratio * (1.0 - RATIO_SLACK) {
                    continue;
                }
                let next = acc + (na + nb) * (na + nb);
                if next >= self.best {
                    continue;
                }
                self.path.push((sub_a, sub_b));
                self.run(rest_a, rest_b, ratio, next);
                self.path.pop();
            }
        }
    }
}

fn subset_norms(items: &[(Split, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << items.len()];
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] + items[low].1 * items[low].1;
    }
    out
}

fn pick(items: &[(Split, f64)], mask: u32) -> Vec<(Split, f64)> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| *x).collect()
}

fn plan(t: &BhvPoint, u: &BhvPoint) -> Plan {
    let (shared, only_t, only_u) = partition(t, u);
    let fixed = pendant_term(t, u) + shared.iter().map(|(_, a, b)| (a - b) * (a - b)).sum::<f64>();
    if only_t.is_empty() {
        debug_assert!(only_u.is_empty());
        return Plan { shared, blocks: Vec::new(), squared_length: fixed };
    }

    let norm2_a = subset_norms(&only_t);
    let norm2_b = subset_norms(&only_u);
    let full_a = (1u32 << only_t.len()) - 1;
    let full_b = (1u32 << only_u.len()) - 1;
    let single: Vec<u32> = only_u
        .iter()
        .map(|(f, _)| only_t.iter().enumerate().filter(|(_, (e, _))| e.compatible(f)).fold(0u32, |m, (i, _)| m | 1 << i))
        .collect();
    let mut compat = vec![full_a; 1 << only_u.len()];
    for mask in 1..compat.len() {
        let low = mask.trailing_zeros() as usize;
        compat[mask] = compat[mask & (mask - 1)] & single[low];
    }

    // the cone path (one block) is always valid and seeds the bound
    let cone = {
        let s = norm2_a[full_a as usize].sqrt() + norm2_b[full_b as usize].sqrt();
        s * s
    };
    let mut search = Search { norm2_a, norm2_b, compat, best: cone * (1.0 + 1e-15), best_path: vec![(full_a, full_b)], path: Vec::new() };
    search.run(full_a, full_b, 0.0, 0.0);

    let blocks = search
        .best_path
        .iter()
        .map(|&(ma, mb)| Block {
            a: pick(&only_t, ma),
            b: pick(&only_u, mb),
            norm_a: search.norm2_a[ma as usize].sqrt(),
            norm_b: search.norm2_b[mb as usize].sqrt(),
        })
        .collect();
    Plan { shared, blocks, squared_length: fixed + search.best.min(cone) }
}

/// Geodesic distance in the tree space (pendant edges included).
pub fn bhv_distance(t: &BhvPoint, u: &BhvPoint) -> Result<f64> {
    check_pair(t, u)?;
    Ok(plan(t, u).squared_length.sqrt())
}

/// Length of the path through the face where every non-common split
/// vanishes; an upper bound for [`bhv_distance`].
pub fn cone_path_length(t: &BhvPoint, u: &BhvPoint) -> Result<f64> {
    if t.leaf_count() != u.leaf_count() {
        return Err(taxa_mismatch("trees have different leaf counts"));
    }
    let mut common = 0.0;
    let mut only_t = 0.0;
    let mut only_u = 0.0;
    for (s, &l) in t.splits() {
        match u.splits().get(s) {
            Some(&lu) => common += (l - lu) * (l - lu),
            None => only_t += l * l,
        }
    }
    for (s, &l) in u.splits() {
        if !t.splits().contains_key(s) {
            only_u += l * l;
        }
    }
    let cone = only_t.sqrt() + only_u.sqrt();
    Ok((cone * cone + common + pendant_term(t, u)).sqrt())
}

/// The point at parameter `t` on the geodesic from `from` to `to`.
pub fn bhv_geodesic(from: &BhvPoint, to: &BhvPoint, t: f64) -> Result<BhvPoint> {
    check_pair(from, to)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("geodesic parameter must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(from.clone());
    }
    if t == 1.0 {
        return Ok(to.clone());
    }
    let plan = plan(from, to);
    let mut splits = BTreeMap::new();
    let mut put = |s: Split, l: f64| {
        if l > 0.0 {
            splits.insert(s, l);
        }
    };
    for (s, a, b) in &plan.shared {
        put(*s, (1.0 - t) * a + t * b);
    }
    for block in &plan.blocks {
        let shrink = (1.0 - t) * block.norm_a - t * block.norm_b;
        if shrink > 0.0 {
            let scale = shrink / block.norm_a;
            block.a.iter().for_each(|(s, l)| put(*s, scale * l));
        } else {
            let scale = -shrink / block.norm_b;
            block.b.iter().for_each(|(s, l)| put(*s, scale * l));
        }
    }
    let pendants = from.pendants().iter().zip(to.pendants()).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    Ok(BhvPoint::from_parts_unchecked(from.leaf_count(), splits, pendants))
}

//! A desk-scale BHV tree space of rooted metric phylogenetic trees.
//!
//! Trees are encoded by their splits. The root is treated as an extra taxon
//! (bit `leaf_count` of a split mask), so a rooted tree on `n` leaves is an
//! unrooted tree on `n + 1` leaves and carries at most `n - 2` interior
//! splits. Pendant edges are stored separately as one length per taxon.

mod geodesic;
mod newick;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{invalid, Error, Result};

pub use geodesic::{bhv_distance, bhv_geodesic, cone_path_length, GEODESIC_LEAF_LIMIT};
pub use newick::{emit_newick, parse_newick};

/// Largest taxon count representable in a split mask (taxa plus root marker).
pub const MAX_TAXA: usize = 62;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl TaxonSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return invalid("taxon labels must be nonempty");
            }
            if label.contains(['(', ')', ',', ':', ';']) {
                return invalid(format!("taxon label {label:?} contains a reserved character"));
            }
            if index.insert(label.clone(), i).is_some() {
                return invalid(format!("duplicate taxon label {label:?}"));
            }
        }
        if labels.len() < 3 {
            return invalid("a taxon set needs at least 3 labels");
        }
        if labels.len() > MAX_TAXA {
            return invalid(format!("at most {MAX_TAXA} taxa are supported"));
        }
        Ok(TaxonSet { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }
}

/// One side of a bipartition of `taxa ∪ {root}`, stored as the side that
/// does not contain taxon 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Split(u64);

fn full_mask(leaves: usize) -> u64 {
    (1u64 << (leaves + 1)) - 1
}

impl Split {
    /// The split cut off by the edge above `clade` (a set of taxa, root excluded).
    pub fn from_clade(clade: u64, leaves: usize) -> Result<Self> {
        let all_taxa = (1u64 << leaves) - 1;
        if clade == 0 || clade & !all_taxa != 0 {
            return invalid(format!("clade mask {clade:#b} is not a nonempty set of the {leaves} taxa"));
        }
        if clade == all_taxa {
            return invalid("the clade of all taxa is the root edge, not a split");
        }
        Ok(Self::from_clade_unchecked(clade, leaves))
    }

    pub(crate) fn from_clade_unchecked(clade: u64, leaves: usize) -> Self {
        if clade & 1 == 0 {
            Split(clade)
        } else {
            Split(full_mask(leaves) & !clade)
        }
    }

    pub fn mask(&self) -> u64 {
        self.0
    }

    /// The side of the split that does not contain the root.
    pub fn clade(&self, leaves: usize) -> u64 {
        if self.0 & (1u64 << leaves) == 0 {
            self.0
        } else {
            full_mask(leaves) & !self.0
        }
    }

    pub fn is_pendant(&self, leaves: usize) -> bool {
        self.clade(leaves).count_ones() == 1
    }

    /// True iff one of the four side intersections is empty. Both stored
    /// sides exclude taxon 0, so the complement-complement intersection is
    /// never empty and only the remaining three need checking.
    pub fn compatible(&self, other: &Split) -> bool {
        let both = self.0 & other.0;
        both == 0 || both == self.0 || both == other.0
    }
}

/// Free-standing form of [`Split::compatible`].
pub fn splits_compatible(s: &Split, u: &Split) -> bool {
    s.compatible(u)
}

/// A point of the tree space: compatible interior splits with positive
/// lengths plus a nonnegative pendant length per taxon.
#[derive(Debug, Clone, PartialEq)]
pub struct BhvPoint {
    leaves: usize,
    splits: BTreeMap<Split, f64>,
    pendants: Vec<f64>,
}

impl BhvPoint {
    /// Validates and builds a point. Interior splits with length at most
    /// `tolerance` are dropped; the point then lies on an orthant boundary.
    pub fn new(leaves: usize, splits: impl IntoIterator<Item = (Split, f64)>, pendants: Vec<f64>, tolerance: f64) -> Result<Self> {
        if !(3..=MAX_TAXA).contains(&leaves) {
            return invalid(format!("leaf count {leaves} outside 3..={MAX_TAXA}"));
        }
        if pendants.len() != leaves {
            return invalid(format!("expected {leaves} pendant lengths, got {}", pendants.len()));
        }
        if pendants.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return invalid("pendant lengths must be finite and nonnegative");
        }
        let mut kept = BTreeMap::new();
        for (split, length) in splits {
            if !length.is_finite() || length < -tolerance {
                return invalid(format!("split length {length} must be finite and nonnegative"));
            }
            let clade = split.clade(leaves);
            let all_taxa = (1u64 << leaves) - 1;
            if split.0 & !full_mask(leaves) != 0 || split.0 & 1 != 0 || clade == 0 || clade == all_taxa {
                return invalid(format!("split mask {:#b} is not valid for {leaves} taxa", split.0));
            }
            if clade.count_ones() == 1 {
                return invalid("pendant splits belong in the pendant lengths");
            }
            if length <= tolerance {
                continue;
            }
            if kept.insert(split, length).is_some() {
                return invalid(format!("split {:#b} listed twice", split.0));
            }
        }
        let keys: Vec<&Split> = kept.keys().collect();
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                if !a.compatible(b) {
                    return invalid(format!("splits {:#b} and {:#b} are incompatible", a.0, b.0));
                }
            }
        }
        if kept.len() > leaves - 2 {
            return invalid(format!("{} interior splits exceed the maximum of {}", kept.len(), leaves - 2));
        }
        Ok(BhvPoint { leaves, splits: kept, pendants })
    }

    pub(crate) fn from_parts_unchecked(leaves: usize, splits: BTreeMap<Split, f64>, pendants: Vec<f64>) -> Self {
        debug_assert!(splits.values().all(|l| *l > 0.0));
        BhvPoint { leaves, splits, pendants }
    }

    /// The star tree with the given pendant lengths.
    pub fn star(pendants: Vec<f64>) -> Result<Self> {
        let n = pendants.len();
        Self::new(n, std::iter::empty(), pendants, 0.0)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    pub fn splits(&self) -> &BTreeMap<Split, f64> {
        &self.splits
    }

    pub fn split_length(&self, s: &Split) -> f64 {
        self.splits.get(s).copied().unwrap_or(0.0)
    }

    pub fn pendants(&self) -> &[f64] {
        &self.pendants
    }
}

impl fmt::Display for BhvPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = (0..self.leaves).map(|i| format!("t{i}")).collect();
        match TaxonSet::new(labels) {
            Ok(taxa) => f.write_str(&emit_newick(self, &taxa).map_err(|_| fmt::Error)?),
            Err(_) => Err(fmt::Error),
        }
    }
}

pub(crate) fn taxa_mismatch(msg: impl Into<String>) -> Error {
    Error::TaxaMismatch(msg.into())
}

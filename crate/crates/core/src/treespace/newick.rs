//! Newick subset: `tree := subtree ";"`,
//! `subtree := leaf | "(" subtree ("," subtree)+ ")"`, every non-root node
//! suffixed by `":" decimal`. No internal labels and no comments. The root
//! may carry `:0` but no other length.

use std::collections::BTreeMap;

use super::{taxa_mismatch, BhvPoint, Split, TaxonSet};
use crate::error::{Error, Result};

enum Node {
    Leaf { label: String, at: usize, length: f64 },
    Internal { children: Vec<Node>, length: f64 },
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

fn syntax<T>(position: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Newick { position, message: message.into() })
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => syntax(self.pos, format!("expected '{want}', found '{c}'")),
            None => syntax(self.pos, format!("expected '{want}', found end of input")),
        }
    }

    fn subtree(&mut self) -> Result<Node> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let mut children = vec![self.subtree()?];
            loop {
                match self.peek() {
                    Some(',') => {
                        self.pos += 1;
                        children.push(self.subtree()?);
                    }
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => return syntax(self.pos, format!("expected ',' or ')', found '{c}'")),
                    None => return syntax(self.pos, "unterminated '('"),
                }
            }
            if children.len() < 2 {
                return syntax(self.pos, "an internal node needs at least two children");
            }
            let length = self.branch_length()?;
            Ok(Node::Internal { children, length })
        } else {
            let at = self.pos;
            let label = self.label()?;
            let length = self.branch_length()?;
            Ok(Node::Leaf { label, at, length })
        }
    }

    fn label(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        let end = self.text[start..].find(['(', ')', ',', ':', ';']).map_or(self.text.len(), |i| start + i);
        let label = self.text[start..end].trim();
        if label.is_empty() {
            return syntax(start, "expected a leaf label");
        }
        self.pos = end;
        Ok(label.to_string())
    }

    fn branch_length(&mut self) -> Result<f64> {
        let at = self.pos;
        if self.peek() != Some(':') {
            return syntax(at, "missing branch length");
        }
        self.pos += 1;
        self.number()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let end = self.text[start..]
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .map_or(self.text.len(), |i| start + i);
        let raw = &self.text[start..end];
        let value: f64 = match raw.parse() {
            Ok(v) => v,
            Err(_) => return syntax(start, format!("invalid branch length {raw:?}")),
        };
        if !value.is_finite() || value < 0.0 {
            return syntax(start, format!("branch length must be finite and nonnegative, got {raw}"));
        }
        self.pos = end;
        Ok(value)
    }

    fn tree(&mut self) -> Result<Vec<Node>> {
        if self.peek() != Some('(') {
            return syntax(self.pos, "a tree must start with '('");
        }
        self.pos += 1;
        let mut children = vec![self.subtree()?];
        loop {
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    children.push(self.subtree()?);
                }
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => return syntax(self.pos, format!("expected ',' or ')', found '{c}'")),
                None => return syntax(self.pos, "unterminated '('"),
            }
        }
        if children.len() < 2 {
            return syntax(self.pos, "the root needs at least two children");
        }
        if self.peek() == Some(':') {
            let at = self.pos;
            self.pos += 1;
            if self.number()? != 0.0 {
                return syntax(at, "a root branch length is not supported");
            }
        }
        self.expect(';')?;
        if let Some(c) = self.peek() {
            return syntax(self.pos, format!("trailing input after ';': '{c}'"));
        }
        Ok(children)
    }
}

fn collect_labels<'n>(node: &'n Node, out: &mut Vec<(&'n str, usize)>) {
    match node {
        Node::Leaf { label, at, .. } => out.push((label, *at)),
        Node::Internal { children, .. } => children.iter().for_each(|c| collect_labels(c, out)),
    }
}

/// Returns the clade mask below `node`, recording lengths on the way.
fn encode(node: &Node, taxa: &TaxonSet, splits: &mut Vec<(Split, f64)>, pendants: &mut [f64]) -> u64 {
    match node {
        Node::Leaf { label, length, .. } => {
            let i = taxa.index_of(label).expect("labels validated");
            pendants[i] = *length;
            1u64 << i
        }
        Node::Internal { children, length } => {
            let clade = children.iter().fold(0, |m, c| m | encode(c, taxa, splits, pendants));
            splits.push((Split::from_clade_unchecked(clade, taxa.len()), *length));
            clade
        }
    }
}

/// Parses one rooted Newick tree into its split encoding.
///
/// Without `taxa`, the taxon order is the order of first appearance.
pub fn parse_newick(text: &str, taxa: Option<&TaxonSet>) -> Result<(BhvPoint, TaxonSet)> {
    let mut parser = Parser { text, pos: 0 };
    let children = parser.tree()?;

    let mut labels = Vec::new();
    children.iter().for_each(|c| collect_labels(c, &mut labels));
    let mut seen = std::collections::HashSet::new();
    for (label, at) in &labels {
        if !seen.insert(*label) {
            return syntax(*at, format!("duplicate leaf label {label:?}"));
        }
    }
    let taxa = match taxa {
        Some(t) => {
            if labels.len() != t.len() {
                return Err(taxa_mismatch(format!("tree has {} leaves, taxon set has {}", labels.len(), t.len())));
            }
            if let Some((label, _)) = labels.iter().find(|(l, _)| t.index_of(l).is_none()) {
                return Err(taxa_mismatch(format!("leaf {label:?} is not in the taxon set")));
            }
            t.clone()
        }
        None => TaxonSet::new(labels.iter().map(|(l, _)| l.to_string()))?,
    };

    let n = taxa.len();
    let mut splits = Vec::new();
    let mut pendants = vec![0.0; n];
    for child in &children {
        encode(child, &taxa, &mut splits, &mut pendants);
    }
    let point = BhvPoint::new(n, splits, pendants, 0.0)?;
    Ok((point, taxa))
}

fn fmt_len(x: f64) -> String {
    format!("{x}")
}

/// Writes a point as a rooted Newick string; children are ordered by their
/// smallest taxon index.
pub fn emit_newick(point: &BhvPoint, taxa: &TaxonSet) -> Result<String> {
    let n = point.leaf_count();
    if taxa.len() != n {
        return Err(taxa_mismatch(format!("point has {n} leaves, taxon set has {}", taxa.len())));
    }
    let all = (1u64 << n) - 1;
    let mut clades: Vec<(u64, f64)> = point.splits().iter().map(|(s, l)| (s.clade(n), *l)).collect();
    clades.sort_by_key(|(c, _)| c.count_ones());

    let parent_of = |mask: u64| -> u64 { clades.iter().map(|(c, _)| *c).find(|c| *c != mask && c & mask == mask).unwrap_or(all) };
    let mut children: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (c, _) in &clades {
        children.entry(parent_of(*c)).or_default().push(*c);
    }
    for i in 0..n {
        children.entry(parent_of(1u64 << i)).or_default().push(1u64 << i);
    }
    let lengths: BTreeMap<u64, f64> = clades.iter().copied().collect();

    fn render(
        mask: u64,
        children: &BTreeMap<u64, Vec<u64>>,
        lengths: &BTreeMap<u64, f64>,
        point: &BhvPoint,
        taxa: &TaxonSet,
        out: &mut String,
    ) {
        if mask.count_ones() == 1 {
            let i = mask.trailing_zeros() as usize;
            out.push_str(taxa.label(i));
            out.push(':');
            out.push_str(&fmt_len(point.pendants()[i]));
            return;
        }
        let mut kids = children.get(&mask).cloned().unwrap_or_default();
        kids.sort_by_key(|m| m.trailing_zeros());
        out.push('(');
        for (j, k) in kids.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            render(*k, children, lengths, point, taxa, out);
        }
        out.push(')');
        if let Some(l) = lengths.get(&mask) {
            out.push(':');
            out.push_str(&fmt_len(*l));
        }
    }

    let mut out = String::new();
    render(all, &children, &lengths, point, taxa, &mut out);
    out.push(';');
    Ok(out)
}

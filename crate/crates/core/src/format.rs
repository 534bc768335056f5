//! File formats used by the command-line front end.
//!
//! * space descriptors: `euclidean:D`, `spider:K`, `spd:N`, `bhv` or `bhv:N`
//! * points documents: `{"space": .., "points": [..], "weights": [..]}` with
//!   Euclidean points as number arrays, spider points as `{"ray", "radius"}`
//!   and SPD points as row-major square arrays (nested rows or flat)
//! * trees files: one Newick string per line, the first line fixing the taxa
//! * result documents and trace CSVs written by every run

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::prox::{IterationTrace, StepSchedule};
use crate::space::{Backend, SpaceHandle, SpacePoint};
use crate::spaces::{EuclideanPoint, SpdPoint, SpiderPoint};
use crate::treespace::{emit_newick, parse_newick, BhvPoint, TaxonSet};

fn doc_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Document(msg.into()))
}

/// A `--space` value. The BHV leaf count may be left to the trees file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceDescriptor {
    Euclidean(usize),
    Spider(usize),
    Spd(usize),
    Bhv(Option<usize>),
}

impl FromStr for SpaceDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let size = |what: &str| -> Result<usize> {
            match arg.map(str::parse::<usize>) {
                Some(Ok(n)) => Ok(n),
                _ => Err(Error::InvalidInput(format!("space `{s}` needs a {what}, e.g. `{kind}:3`"))),
            }
        };
        match kind {
            "euclidean" => Ok(SpaceDescriptor::Euclidean(size("dimension")?)),
            "spider" => Ok(SpaceDescriptor::Spider(size("ray count")?)),
            "spd" => Ok(SpaceDescriptor::Spd(size("matrix order")?)),
            "bhv" if arg.is_none() => Ok(SpaceDescriptor::Bhv(None)),
            "bhv" => Ok(SpaceDescriptor::Bhv(Some(size("leaf count")?))),
            _ => Err(Error::InvalidInput(format!("unknown space `{s}`; expected euclidean:D, spider:K, spd:N or bhv"))),
        }
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDescriptor::Euclidean(d) => write!(f, "euclidean:{d}"),
            SpaceDescriptor::Spider(k) => write!(f, "spider:{k}"),
            SpaceDescriptor::Spd(n) => write!(f, "spd:{n}"),
            SpaceDescriptor::Bhv(Some(n)) => write!(f, "bhv:{n}"),
            SpaceDescriptor::Bhv(None) => f.write_str("bhv"),
        }
    }
}

impl SpaceDescriptor {
    /// The handle, taking the BHV leaf count from `leaves` when the
    /// descriptor leaves it open.
    pub fn handle(&self, leaves: Option<usize>) -> Result<SpaceHandle> {
        match *self {
            SpaceDescriptor::Euclidean(d) => SpaceHandle::euclidean(d),
            SpaceDescriptor::Spider(k) => SpaceHandle::spider(k),
            SpaceDescriptor::Spd(n) => SpaceHandle::spd(n),
            SpaceDescriptor::Bhv(Some(n)) => {
                if let Some(m) = leaves.filter(|m| *m != n) {
                    return Err(Error::TaxaMismatch(format!("space declares {n} leaves but the trees have {m}")));
                }
                SpaceHandle::bhv(n)
            }
            SpaceDescriptor::Bhv(None) => match leaves {
                Some(n) => SpaceHandle::bhv(n),
                None => Err(Error::InvalidInput("bhv leaf count unknown; pass --trees or bhv:N".into())),
            },
        }
    }

    pub fn of(backend: Backend) -> Self {
        match backend {
            Backend::Euclidean { dim } => SpaceDescriptor::Euclidean(dim),
            Backend::Spider { rays } => SpaceDescriptor::Spider(rays),
            Backend::Spd { order } => SpaceDescriptor::Spd(order),
            Backend::Bhv { leaves } => SpaceDescriptor::Bhv(Some(leaves)),
        }
    }
}

fn number(v: &Value, what: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) => Ok(x),
        None => doc_err(format!("{what} must be a number, got {v}")),
    }
}

/// Decodes one point of `space`. BHV points are Newick strings read against
/// `taxa`.
pub fn parse_point(value: &Value, space: &SpaceHandle, taxa: Option<&TaxonSet>) -> Result<SpacePoint> {
    match space.backend() {
        Backend::Euclidean { dim } => {
            let Some(items) = value.as_array() else {
                return doc_err(format!("euclidean point must be an array of numbers, got {value}"));
            };
            if items.len() != dim {
                return doc_err(format!("euclidean point has {} coordinates, space has dimension {dim}", items.len()));
            }
            let coords = items.iter().map(|v| number(v, "coordinate")).collect::<Result<Vec<_>>>()?;
            Ok(EuclideanPoint::new(coords)?.into())
        }
        Backend::Spider { rays } => {
            let (Some(ray), Some(radius)) = (value.get("ray"), value.get("radius")) else {
                return doc_err(format!("spider point must be {{\"ray\", \"radius\"}}, got {value}"));
            };
            let Some(ray) = ray.as_u64() else {
                return doc_err(format!("spider ray must be a nonnegative integer, got {ray}"));
            };
            if ray as usize >= rays {
                return doc_err(format!("ray {ray} out of range for a {rays}-spider"));
            }
            Ok(SpiderPoint::new(ray as usize, number(radius, "spider radius")?)?.into())
        }
        Backend::Spd { order } => {
            let Some(items) = value.as_array() else {
                return doc_err(format!("SPD point must be a row-major square array, got {value}"));
            };
            let flat: Vec<f64> = if items.iter().all(Value::is_array) {
                if items.len() != order || items.iter().any(|r| r.as_array().map(Vec::len) != Some(order)) {
                    return doc_err(format!("SPD point must be {order}x{order}"));
                }
                items
                    .iter()
                    .flat_map(|r| r.as_array().expect("checked").iter())
                    .map(|v| number(v, "matrix entry"))
                    .collect::<Result<_>>()?
            } else {
                items.iter().map(|v| number(v, "matrix entry")).collect::<Result<_>>()?
            };
            Ok(SpdPoint::from_row_major(order, &flat, space.tolerance())?.into())
        }
        Backend::Bhv { leaves } => {
            let Some(text) = value.as_str() else {
                return doc_err(format!("tree-space point must be a Newick string, got {value}"));
            };
            let (tree, found) = parse_newick(text, taxa)?;
            if found.len() != leaves {
                return Err(Error::TaxaMismatch(format!("tree has {} leaves, space has {leaves}", found.len())));
            }
            Ok(tree.into())
        }
    }
}

/// Encodes a point the way [`parse_point`] reads it.
pub fn point_to_value(point: &SpacePoint, taxa: Option<&TaxonSet>) -> Result<Value> {
    Ok(match point {
        SpacePoint::Euclidean(p) => json!(p.coords()),
        SpacePoint::Spider(p) => json!({ "ray": p.ray(), "radius": p.radius() }),
        SpacePoint::Spd(p) => {
            let n = p.order();
            let flat = p.to_row_major();
            Value::Array(flat.chunks(n).map(|row| json!(row)).collect())
        }
        SpacePoint::Bhv(p) => {
            let default;
            let taxa = match taxa {
                Some(t) => t,
                None => {
                    default = TaxonSet::new((0..p.leaf_count()).map(|i| format!("t{i}")))?;
                    &default
                }
            };
            Value::String(emit_newick(p, taxa)?)
        }
    })
}

/// Anchors read from a points document or trees file.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub space: SpaceHandle,
    pub points: Vec<SpacePoint>,
    pub weights: Option<Vec<f64>>,
    /// Taxa of a trees file.
    pub taxa: Option<TaxonSet>,
}

/// Parses a points document. When `expected` is given, the document's
/// `space` field (if present) must agree with it.
pub fn parse_points_document(text: &str, expected: Option<SpaceDescriptor>) -> Result<PointSet> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Document(format!("points document is not valid JSON: {e}")))?;
    let declared = match doc.get("space") {
        Some(Value::String(s)) => Some(s.parse::<SpaceDescriptor>()?),
        Some(other) => return doc_err(format!("`space` must be a string, got {other}")),
        None => None,
    };
    let descriptor = match (expected, declared) {
        (Some(e), Some(d)) if e != d => {
            return Err(Error::BackendMismatch(format!("--space {e} but the points document declares {d}")));
        }
        (Some(e), _) => e,
        (None, Some(d)) => d,
        (None, None) => return Err(Error::InvalidInput("no space given: pass --space or set `space` in the document".into())),
    };
    if let SpaceDescriptor::Bhv(_) = descriptor {
        return Err(Error::InvalidInput("tree-space anchors are read with --trees".into()));
    }
    let space = descriptor.handle(None)?;
    let Some(items) = doc.get("points").and_then(Value::as_array) else {
        return doc_err("points document needs a `points` array");
    };
    if items.is_empty() {
        return doc_err("`points` is empty");
    }
    let points = items
        .iter()
        .enumerate()
        .map(|(i, v)| parse_point(v, &space, None).map_err(|e| Error::Document(format!("point {i}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let weights = match doc.get("weights") {
        None | Some(Value::Null) => None,
        Some(Value::Array(ws)) => Some(ws.iter().map(|w| number(w, "weight")).collect::<Result<Vec<_>>>()?),
        Some(other) => return doc_err(format!("`weights` must be an array, got {other}")),
    };
    Ok(PointSet { space, points, weights, taxa: None })
}

pub fn read_points_file(path: &Path, expected: Option<SpaceDescriptor>) -> Result<PointSet> {
    parse_points_document(&read(path)?, expected)
}

/// One tree per nonblank line; the first fixes the taxon set.
pub fn parse_trees(text: &str) -> Result<(Vec<BhvPoint>, TaxonSet)> {
    let mut taxa: Option<TaxonSet> = None;
    let mut trees = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (tree, found) = parse_newick(line, taxa.as_ref()).map_err(|e| match e {
            Error::Newick { position, message } => Error::Newick { position, message: format!("line {}: {message}", lineno + 1) },
            Error::TaxaMismatch(m) => Error::TaxaMismatch(format!("line {}: {m}", lineno + 1)),
            other => other,
        })?;
        taxa.get_or_insert(found);
        trees.push(tree);
    }
    match taxa {
        Some(t) => Ok((trees, t)),
        None => doc_err("trees file holds no trees"),
    }
}

pub fn read_trees_file(path: &Path) -> Result<(Vec<BhvPoint>, TaxonSet)> {
    parse_trees(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub form: String,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl ScheduleDoc {
    pub fn of(schedule: &StepSchedule) -> Self {
        ScheduleDoc { form: schedule.form(), c: schedule.constant() }
    }
}

/// What every computing subcommand writes to `--out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub space: String,
    pub point: Value,
    pub objective: f64,
    pub iterations: u64,
    pub stop_reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

/// `step,component_index,lambda,t_coefficient,objective,distance_moved` for
/// every recorded step. Empty fields mark values that do not exist (no λ for
/// the inductive mean, no objective for steps whose iterate was not kept).
pub fn trace_csv(trace: &IterationTrace) -> String {
    let mut out = String::from("step,component_index,lambda,t_coefficient,objective,distance_moved\n");
    let field = |v: Option<f64>| v.filter(|x| !x.is_nan()).map(|x| x.to_string()).unwrap_or_default();
    for s in &trace.steps {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.step,
            s.component,
            field(s.lambda),
            s.t,
            field(trace.objective_at(s.step)),
            field(Some(s.moved)),
        ));
    }
    out
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        assert_eq!("euclidean:2".parse::<SpaceDescriptor>().unwrap(), SpaceDescriptor::Euclidean(2));
        assert_eq!("bhv".parse::<SpaceDescriptor>().unwrap(), SpaceDescriptor::Bhv(None));
        assert_eq!("bhv:5".parse::<SpaceDescriptor>().unwrap().to_string(), "bhv:5");
        for bad in ["euclid:2", "spider", "spd:x", "bhv:"] {
            assert!(bad.parse::<SpaceDescriptor>().is_err(), "{bad}");
        }
        assert!(SpaceDescriptor::Bhv(Some(4)).handle(Some(5)).is_err());
        assert_eq!(SpaceDescriptor::Bhv(None).handle(Some(5)).unwrap().backend(), Backend::Bhv { leaves: 5 });
    }

    #[test]
    fn points_documents() {
        let doc = r#"{"space": "spider:3", "points": [{"ray": 0, "radius": 1}, {"ray": 2, "radius": 5}], "weights": [1, 3]}"#;
        let set = parse_points_document(doc, None).unwrap();
        assert_eq!(set.points[1], SpiderPoint::new(2, 5.0).unwrap().into());
        assert_eq!(set.weights.unwrap(), [1.0, 3.0]);
        assert!(parse_points_document(doc, Some(SpaceDescriptor::Spider(4))).is_err());
        assert!(parse_points_document(r#"{"points": [[1, 2]]}"#, None).is_err());
        assert!(parse_points_document(r#"{"space": "euclidean:2", "points": [[1]]}"#, None).is_err());
        assert!(parse_points_document(r#"{"space": "spider:3", "points": [{"ray": 3, "radius": 1}]}"#, None).is_err());
        assert!(parse_points_document("not json", None).is_err());

        let spd = r#"{"space": "spd:2", "points": [[[2, 0.5], [0.5, 1]], [1, 0, 0, 1]]}"#;
        let set = parse_points_document(spd, None).unwrap();
        assert_eq!(set.points[1], SpdPoint::identity(2).into());
        assert!(parse_points_document(r#"{"space": "spd:2", "points": [[[1, 2], [2, 1]]]}"#, None).is_err());
    }

    #[test]
    fn points_round_trip() {
        let space = SpaceHandle::spd(2).unwrap();
        let p: SpacePoint = SpdPoint::from_row_major(2, &[2.0, 0.5, 0.5, 1.0], 0.0).unwrap().into();
        let v = point_to_value(&p, None).unwrap();
        assert_eq!(v, json!([[2.0, 0.5], [0.5, 1.0]]));
        assert_eq!(parse_point(&v, &space, None).unwrap(), p);
    }

    #[test]
    fn trees_files() {
        let (trees, taxa) = parse_trees("((A:1,B:1):2,C:1);\n\n((A:1,C:1):1,B:1);\n").unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(taxa.labels(), ["A", "B", "C"]);
        let err = parse_trees("((A:1,B:1):2,C:1);\n((A:1,D:1):1,B:1);").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_trees("\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
    }
}

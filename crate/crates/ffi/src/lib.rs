//! C ABI over the `hadamard` crate.
//!
//! Spaces and points are opaque heap handles created and released through
//! this interface. Every fallible call returns an [`HmStatus`]; on failure
//! `hm_last_error` describes the most recent error on the calling thread.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use hadamard::format::{parse_point, point_to_value, SpaceDescriptor};
use hadamard::prox::{self, AnchorConfiguration, MeanVariant, MedianVariant, RunConfig};
use hadamard::{Error, SpaceHandle, SpacePoint, SpdPoint, SpiderPoint, TaxonSet};

/// A space handle, plus the taxon labels of a tree space.
pub struct HmSpace {
    handle: SpaceHandle,
    taxa: Option<TaxonSet>,
}

/// A point of some space.
pub struct HmPoint {
    point: SpacePoint,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    BackendMismatch = 3,
    Parse = 4,
    TaxaMismatch = 5,
    LeafGuard = 6,
    Io = 7,
    Panic = 8,
}

/// Iteration scheme of the mean and median solvers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmAlgorithm {
    Cyclic = 0,
    Random = 1,
    /// Law-of-large-numbers estimator (means only).
    Lln = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HmStatus {
    match e {
        Error::InvalidInput(_) => HmStatus::InvalidInput,
        Error::BackendMismatch(_) => HmStatus::BackendMismatch,
        Error::Newick { .. } | Error::Document(_) => HmStatus::Parse,
        Error::TaxaMismatch(_) => HmStatus::TaxaMismatch,
        Error::LeafGuard { .. } => HmStatus::LeafGuard,
        Error::Io(_) => HmStatus::Io,
    }
}

struct Fail(HmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Outcome = std::result::Result<(), Fail>;

fn null(what: &str) -> Fail {
    Fail(HmStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Outcome) -> HmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HmStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> std::result::Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> std::result::Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(HmStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn doubles<'a>(p: *const f64, len: usize, what: &str) -> std::result::Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn default_taxa(handle: &SpaceHandle) -> Result<Option<TaxonSet>, Error> {
    match handle.backend() {
        hadamard::Backend::Bhv { leaves } => Ok(Some(TaxonSet::new((0..leaves).map(|i| format!("t{i}")))?)),
        _ => Ok(None),
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a space from a descriptor such as `euclidean:2`, `spider:3`,
/// `spd:3` or `bhv:5` (tree-space taxa are then named `t0`, `t1`, ...).
///
/// # Safety
/// `descriptor` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hm_space_new(descriptor: *const c_char, out: *mut *mut HmSpace) -> HmStatus {
    guard(|| {
        let descriptor: SpaceDescriptor = text(descriptor, "descriptor")?.parse()?;
        if descriptor == SpaceDescriptor::Bhv(None) {
            return Err(Fail(HmStatus::InvalidInput, "give the leaf count as bhv:N or use hm_space_new_bhv".into()));
        }
        let handle = descriptor.handle(None)?;
        let taxa = default_taxa(&handle)?;
        store(out, HmSpace { handle, taxa })
    })
}

/// Creates a tree space over the given taxon labels.
///
/// # Safety
/// `labels` must point to `count` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn hm_space_new_bhv(labels: *const *const c_char, count: usize, out: *mut *mut HmSpace) -> HmStatus {
    guard(|| {
        if labels.is_null() {
            return Err(null("labels"));
        }
        let names = slice::from_raw_parts(labels, count)
            .iter()
            .map(|p| text(*p, "label").map(String::from))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let taxa = TaxonSet::new(names)?;
        let handle = SpaceHandle::bhv(taxa.len())?;
        store(out, HmSpace { handle, taxa: Some(taxa) })
    })
}

/// # Safety
/// `space` must come from `hm_space_new*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hm_space_free(space: *mut HmSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// # Safety
/// `space` must be valid and `coords` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_point_euclidean(space: *const HmSpace, coords: *const f64, len: usize, out: *mut *mut HmPoint) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let point: SpacePoint = hadamard::EuclideanPoint::new(doubles(coords, len, "coords")?.to_vec())?.into();
        space.handle.check(&point)?;
        store(out, HmPoint { point })
    })
}

/// # Safety
/// `space` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hm_point_spider(space: *const HmSpace, ray: usize, radius: f64, out: *mut *mut HmPoint) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let point: SpacePoint = SpiderPoint::new(ray, radius)?.into();
        space.handle.check(&point)?;
        store(out, HmPoint { point })
    })
}

/// A symmetric positive definite matrix from `len = n*n` row-major entries.
///
/// # Safety
/// `space` must be valid and `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_point_spd(space: *const HmSpace, values: *const f64, len: usize, out: *mut *mut HmPoint) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let hadamard::Backend::Spd { order } = space.handle.backend() else {
            return Err(Fail(HmStatus::BackendMismatch, format!("space is {}, not an SPD space", space.handle.backend())));
        };
        let point: SpacePoint = SpdPoint::from_row_major(order, doubles(values, len, "values")?, space.handle.tolerance())?.into();
        store(out, HmPoint { point })
    })
}

/// Parses a point in the JSON encoding of the command-line tool: an array for
/// Euclidean points, `{"ray": r, "radius": x}` for spider points, a
/// row-major matrix for SPD points and a Newick string (bare or quoted) for
/// trees.
///
/// # Safety
/// `space` must be valid and `json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hm_point_from_json(space: *const HmSpace, json: *const c_char, out: *mut *mut HmPoint) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let raw = text(json, "json")?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
        let point = parse_point(&value, &space.handle, space.taxa.as_ref())?;
        store(out, HmPoint { point })
    })
}

/// Encodes a point as JSON; release the string with `hm_string_free`.
///
/// # Safety
/// `space` and `point` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hm_point_to_json(space: *const HmSpace, point: *const HmPoint, out: *mut *mut c_char) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let point = borrow(point, "point")?;
        space.handle.check(&point.point)?;
        let json = point_to_value(&point.point, space.taxa.as_ref())?.to_string();
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `point` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hm_point_free(point: *mut HmPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

/// # Safety
/// All handles must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_distance(space: *const HmSpace, p: *const HmPoint, q: *const HmPoint, out: *mut f64) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let d = space.handle.distance(&borrow(p, "p")?.point, &borrow(q, "q")?.point)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = d;
        Ok(())
    })
}

/// The point `(1-t) p ⊕ t q`.
///
/// # Safety
/// All handles must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_geodesic(
    space: *const HmSpace,
    p: *const HmPoint,
    q: *const HmPoint,
    t: f64,
    out: *mut *mut HmPoint,
) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let point = space.handle.geodesic_point(&borrow(p, "p")?.point, &borrow(q, "q")?.point, t)?;
        store(out, HmPoint { point })
    })
}

unsafe fn configuration(
    space: &HmSpace,
    points: *const *const HmPoint,
    weights: *const f64,
    count: usize,
) -> std::result::Result<AnchorConfiguration, Fail> {
    if points.is_null() {
        return Err(null("anchors"));
    }
    let pts = slice::from_raw_parts(points, count)
        .iter()
        .map(|p| borrow(*p, "anchor").map(|p| p.point.clone()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let data = if weights.is_null() {
        AnchorConfiguration::uniform(pts)?
    } else {
        AnchorConfiguration::new(pts, doubles(weights, count, "weights")?.to_vec())?
    };
    data.validate(&space.handle)?;
    Ok(data)
}

unsafe fn finish_solve(result: (SpacePoint, prox::IterationTrace), out: *mut *mut HmPoint, objective: *mut f64) -> Outcome {
    let (point, trace) = result;
    if out.is_null() {
        return Err(null("output pointer"));
    }
    if !objective.is_null() {
        *objective = trace.final_objective();
    }
    store(out, HmPoint { point })
}

/// Weighted Fréchet mean of `count` anchors, started at the first one.
/// `weights` may be null for uniform weights; `budget` counts cycles (cyclic)
/// or steps (random, lln); `objective` may be null.
///
/// # Safety
/// `anchors` must point to `count` valid point handles and `weights`, when
/// not null, to `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_frechet_mean(
    space: *const HmSpace,
    anchors: *const *const HmPoint,
    weights: *const f64,
    count: usize,
    algorithm: HmAlgorithm,
    budget: u64,
    seed: u64,
    out: *mut *mut HmPoint,
    objective: *mut f64,
) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let data = configuration(space, anchors, weights, count)?;
        let variant = match algorithm {
            HmAlgorithm::Cyclic => MeanVariant::Cyclic,
            HmAlgorithm::Random => MeanVariant::Random,
            HmAlgorithm::Lln => MeanVariant::Lln,
        };
        let config = RunConfig { seed, record_every: budget.max(1), ..RunConfig::with_budget(budget) };
        finish_solve(prox::frechet_mean(&space.handle, &data, variant, &config)?, out, objective)
    })
}

/// Weighted geometric median; arguments as for `hm_frechet_mean`, except
/// that `HM_ALGORITHM_LLN` is rejected.
///
/// # Safety
/// As for `hm_frechet_mean`.
#[no_mangle]
pub unsafe extern "C" fn hm_geometric_median(
    space: *const HmSpace,
    anchors: *const *const HmPoint,
    weights: *const f64,
    count: usize,
    algorithm: HmAlgorithm,
    budget: u64,
    seed: u64,
    out: *mut *mut HmPoint,
    objective: *mut f64,
) -> HmStatus {
    guard(|| {
        let space = borrow(space, "space")?;
        let data = configuration(space, anchors, weights, count)?;
        let variant = match algorithm {
            HmAlgorithm::Cyclic => MedianVariant::Cyclic,
            HmAlgorithm::Random => MedianVariant::Random,
            HmAlgorithm::Lln => return Err(Fail(HmStatus::InvalidInput, "the lln estimator computes means only".into())),
        };
        let config = RunConfig { seed, record_every: budget.max(1), ..RunConfig::with_budget(budget) };
        finish_solve(prox::geometric_median(&space.handle, &data, variant, &config)?, out, objective)
    })
}

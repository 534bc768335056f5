use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hadamard_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hm_last_error()) }.to_string_lossy().into_owned()
}

fn space(descriptor: &str) -> *mut HmSpace {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hm_space_new(c(descriptor).as_ptr(), &mut out) }, HmStatus::Ok, "{}", last_error());
    out
}

fn json_point(space: *const HmSpace, json: &str) -> *mut HmPoint {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hm_point_from_json(space, c(json).as_ptr(), &mut out) }, HmStatus::Ok, "{}", last_error());
    out
}

fn to_json(space: *const HmSpace, p: *const HmPoint) -> serde_json::Value {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hm_point_to_json(space, p, &mut s) }, HmStatus::Ok);
    let v = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { hm_string_free(s) };
    v
}

#[test]
fn euclidean_mean_and_median() {
    let sp = space("euclidean:2");
    let pts: Vec<*mut HmPoint> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        .iter()
        .map(|xy| {
            let mut p = ptr::null_mut();
            assert_eq!(unsafe { hm_point_euclidean(sp, xy.as_ptr(), 2, &mut p) }, HmStatus::Ok);
            p
        })
        .collect();
    let anchors: Vec<*const HmPoint> = pts.iter().map(|p| *p as *const _).collect();

    let mut mean = ptr::null_mut();
    let mut objective = 0.0;
    let status =
        unsafe { hm_frechet_mean(sp, anchors.as_ptr(), ptr::null(), 3, HmAlgorithm::Cyclic, 10_000, 0, &mut mean, &mut objective) };
    assert_eq!(status, HmStatus::Ok, "{}", last_error());
    let v = to_json(sp, mean);
    let xy: Vec<f64> = serde_json::from_value(v).unwrap();
    assert!((xy[0] - 1.0 / 3.0).abs() < 1e-3 && (xy[1] - 1.0 / 3.0).abs() < 1e-3, "{xy:?}");
    assert!((objective - 4.0 / 9.0).abs() < 1e-3);

    let mut median = ptr::null_mut();
    let status =
        unsafe { hm_geometric_median(sp, anchors.as_ptr(), ptr::null(), 3, HmAlgorithm::Lln, 100, 0, &mut median, ptr::null_mut()) };
    assert_eq!(status, HmStatus::InvalidInput);
    assert!(last_error().contains("means only"));
    assert!(median.is_null());
    let status =
        unsafe { hm_geometric_median(sp, anchors.as_ptr(), ptr::null(), 3, HmAlgorithm::Random, 100, 5, &mut median, ptr::null_mut()) };
    assert_eq!(status, HmStatus::Ok);
    assert!(last_error().is_empty());

    unsafe {
        hm_point_free(mean);
        hm_point_free(median);
        pts.into_iter().for_each(|p| hm_point_free(p));
        hm_space_free(sp);
    }
}

#[test]
fn spider_distance_and_geodesic() {
    let sp = space("spider:3");
    let (mut p, mut q) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(hm_point_spider(sp, 0, 1.0, &mut p), HmStatus::Ok);
        assert_eq!(hm_point_spider(sp, 2, 3.0, &mut q), HmStatus::Ok);
        let mut d = 0.0;
        assert_eq!(hm_distance(sp, p, q, &mut d), HmStatus::Ok);
        assert_eq!(d, 4.0);
        let mut mid = ptr::null_mut();
        assert_eq!(hm_geodesic(sp, p, q, 0.5, &mut mid), HmStatus::Ok);
        assert_eq!(to_json(sp, mid), serde_json::json!({"ray": 2, "radius": 1.0}));
        hm_point_free(mid);

        let mut bad = ptr::null_mut();
        assert_eq!(hm_point_spider(sp, 3, 1.0, &mut bad), HmStatus::BackendMismatch);
        assert!(bad.is_null());
        hm_point_free(p);
        hm_point_free(q);
        hm_space_free(sp);
    }
}

#[test]
fn spd_points_round_trip() {
    let sp = space("spd:2");
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(hm_point_spd(sp, [4.0, 0.0, 0.0, 1.0].as_ptr(), 4, &mut a), HmStatus::Ok);
        let b = json_point(sp, "[[1.0, 0.0], [0.0, 4.0]]");
        let mut mid = ptr::null_mut();
        assert_eq!(hm_geodesic(sp, a, b, 0.5, &mut mid), HmStatus::Ok);
        let m: Vec<Vec<f64>> = serde_json::from_value(to_json(sp, mid)).unwrap();
        assert!((m[0][0] - 2.0).abs() < 1e-12 && (m[1][1] - 2.0).abs() < 1e-12 && m[0][1].abs() < 1e-12);

        let mut bad = ptr::null_mut();
        assert_eq!(hm_point_spd(sp, [1.0, 2.0, 2.0, 1.0].as_ptr(), 4, &mut bad), HmStatus::InvalidInput);
        assert_eq!(hm_point_spd(sp, [1.0, 0.0, 0.0].as_ptr(), 3, &mut bad), HmStatus::InvalidInput);
        for p in [a, b, mid] {
            hm_point_free(p);
        }
        hm_space_free(sp);
    }
}

#[test]
fn trees_by_label() {
    let labels: Vec<CString> = ["A", "B", "C", "D"].iter().map(|s| c(s)).collect();
    let ptrs: Vec<*const std::ffi::c_char> = labels.iter().map(|s| s.as_ptr()).collect();
    let mut sp = ptr::null_mut();
    unsafe {
        assert_eq!(hm_space_new_bhv(ptrs.as_ptr(), 4, &mut sp), HmStatus::Ok);
        let t = json_point(sp, "((A:1,B:1):2,(C:1,D:1):0);");
        let u = json_point(sp, "\"((A:1,B:1):2,(C:1,D:1):0);\"");
        let anchors = [t as *const HmPoint, u as *const HmPoint];
        let mut mean = ptr::null_mut();
        let status = hm_frechet_mean(sp, anchors.as_ptr(), [1.0, 3.0].as_ptr(), 2, HmAlgorithm::Lln, 50, 1, &mut mean, ptr::null_mut());
        assert_eq!(status, HmStatus::Ok, "{}", last_error());
        let mut d = 1.0;
        assert_eq!(hm_distance(sp, mean, t, &mut d), HmStatus::Ok);
        assert!(d < 1e-12);

        let mut bad = ptr::null_mut();
        assert_eq!(hm_point_from_json(sp, c("((A:1,E:1):1,C:1,D:1);").as_ptr(), &mut bad), HmStatus::TaxaMismatch);
        assert!(last_error().contains('E'), "{}", last_error());
        assert_eq!(hm_point_from_json(sp, c("((A:1,B:1):1,C:1);").as_ptr(), &mut bad), HmStatus::TaxaMismatch);
        assert_eq!(hm_point_from_json(sp, c("((A:1,B:1),C:1,D:1);").as_ptr(), &mut bad), HmStatus::Parse);
        assert!(last_error().contains("branch length"), "{}", last_error());
        assert!(bad.is_null());
        for p in [t, u, mean] {
            hm_point_free(p);
        }
        hm_space_free(sp);
    }

    let sp = space("bhv:3");
    let p = json_point(sp, "((t0:1,t1:1):0.5,t2:1);");
    assert_eq!(to_json(sp, p), serde_json::json!("((t0:1,t1:1):0.5,t2:1);"));
    unsafe {
        hm_point_free(p);
        hm_space_free(sp);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(hm_space_new(ptr::null(), &mut out), HmStatus::NullPointer);
        assert_eq!(hm_space_new(c("hyperbolic:2").as_ptr(), &mut out), HmStatus::InvalidInput);
        assert_eq!(hm_space_new(c("bhv").as_ptr(), &mut out), HmStatus::InvalidInput);
        assert!(out.is_null());

        // nine-leaf trees can be parsed, but their geodesics are refused
        let big = space("bhv:9");
        let star = json_point(big, "(t0:1,t1:1,t2:1,t3:1,t4:1,t5:1,t6:1,t7:1,t8:1);");
        let mut d = 0.0;
        assert_eq!(hm_distance(big, star, star, &mut d), HmStatus::LeafGuard);
        hm_point_free(star);
        hm_space_free(big);

        let e2 = space("euclidean:2");
        let e3 = space("euclidean:3");
        let p = json_point(e2, "[1, 2]");
        let q = json_point(e3, "[1, 2, 3]");
        let mut d = 0.0;
        assert_eq!(hm_distance(e2, p, q, &mut d), HmStatus::BackendMismatch);
        assert_eq!(hm_distance(e2, p, ptr::null(), &mut d), HmStatus::NullPointer);
        let mut mid = ptr::null_mut();
        assert_eq!(hm_geodesic(e2, p, p, 1.5, &mut mid), HmStatus::InvalidInput);
        assert_eq!(hm_point_from_json(e2, c("[1, ").as_ptr(), &mut mid), HmStatus::Parse);
        let anchors = [p as *const HmPoint];
        assert_eq!(
            hm_frechet_mean(e2, anchors.as_ptr(), [-1.0].as_ptr(), 1, HmAlgorithm::Cyclic, 10, 0, &mut mid, ptr::null_mut()),
            HmStatus::InvalidInput
        );
        assert_eq!(
            hm_frechet_mean(e2, anchors.as_ptr(), ptr::null(), 0, HmAlgorithm::Cyclic, 10, 0, &mut mid, ptr::null_mut()),
            HmStatus::InvalidInput
        );
        hm_point_free(p);
        hm_point_free(q);
        hm_space_free(e2);
        hm_space_free(e3);
        // freeing null is a no-op
        hm_point_free(ptr::null_mut());
        hm_space_free(ptr::null_mut());
        hm_string_free(ptr::null_mut());
    }
}

fn include_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(include_dir().join("hadamard.h")).unwrap();
    for name in [
        "hm_last_error",
        "hm_space_new",
        "hm_space_new_bhv",
        "hm_space_free",
        "hm_point_euclidean",
        "hm_point_spider",
        "hm_point_spd",
        "hm_point_from_json",
        "hm_point_to_json",
        "hm_point_free",
        "hm_string_free",
        "hm_distance",
        "hm_geodesic",
        "hm_frechet_mean",
        "hm_geometric_median",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from the header");
    }
    assert!(header.contains("typedef struct HmSpace HmSpace;"));
    assert!(header.contains("HM_STATUS_OK = 0"));
}

const SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "hadamard.h"

int main(void) {
    HmSpace *space = NULL;
    if (hm_space_new("spider:3", &space) != HM_STATUS_OK) return 1;
    HmPoint *a[3];
    hm_point_spider(space, 0, 1.0, &a[0]);
    hm_point_spider(space, 1, 1.0, &a[1]);
    hm_point_spider(space, 2, 5.0, &a[2]);
    HmPoint *mean = NULL;
    double objective = 0.0;
    if (hm_frechet_mean(space, (const HmPoint *const *)a, NULL, 3, HM_ALGORITHM_CYCLIC, 5000, 0, &mean, &objective) != HM_STATUS_OK) {
        fprintf(stderr, "%s\n", hm_last_error());
        return 2;
    }
    char *json = NULL;
    hm_point_to_json(space, mean, &json);
    printf("%s %.4f\n", json, objective);
    hm_string_free(json);
    HmPoint *bad = NULL;
    if (hm_point_spider(space, 7, 1.0, &bad) == HM_STATUS_OK || hm_last_error()[0] == 0) return 3;
    for (int i = 0; i < 3; i++) hm_point_free(a[i]);
    hm_point_free(mean);
    hm_space_free(space);
    return 0;
}
"#;

/// Compiles a C program against the generated header and the static library.
/// Skipped when no C compiler or no static archive is around.
#[test]
fn c_program_links_against_the_static_library() {
    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let archive = target.join("libhadamard_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} missing", archive.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, SMOKE).unwrap();
    let built = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(include_dir())
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status, String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with("{\"radius\":1.0") || stdout.contains("\"ray\":2"), "{stdout}");
    assert!(stdout.trim_end().ends_with("8.0000") || stdout.contains(" 8.00"), "{stdout}");
}

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use khintchine_ffi::*;

const HAAR: &str = r#"{"n":2,"breakpoints":["0/1","1/4","1/2","3/4","1/1"],
  "partitions":[[0,0,1,1],[0,1,2,3]],
  "values":[["1/1","1/1","-1/1","-1/1"],["1/1","-1/1","1/2","-1/2"]]}"#;
const THIRDS: &str = r#"{"n":1,"breakpoints":["0/1","1/3","1/1"],"partitions":[[0,1]],"values":[["2/1","-1/1"]]}"#;
const NOT_MEAN_ZERO: &str = r#"{"n":1,"breakpoints":["0/1","1/2","1/1"],"partitions":[[0,1]],"values":[["1/1","-1/2"]]}"#;

fn load(json: &str) -> *mut KhMdSystem {
    let text = CString::new(json).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { kh_md_from_json(text.as_ptr(), &mut d) }, KhStatus::Ok);
    assert!(!d.is_null());
    d
}

fn take_string(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { kh_string_free(s) };
    out
}

fn last_error() -> String {
    let e = kh_last_error();
    assert!(!e.is_null());
    unsafe { CStr::from_ptr(e) }.to_str().unwrap().to_string()
}

#[test]
fn json_round_trip() {
    let d = load(HAAR);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { kh_md_to_json(d, &mut s) }, KhStatus::Ok);
    let text = take_string(s);
    let e = load(&text);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { kh_md_to_json(e, &mut t) }, KhStatus::Ok);
    assert_eq!(take_string(t), text);
    let mut n = 0usize;
    assert_eq!(unsafe { kh_md_levels(e, &mut n) }, KhStatus::Ok);
    assert_eq!(n, 2);
    unsafe {
        kh_md_free(d);
        kh_md_free(e);
    }
}

#[test]
fn parse_errors() {
    let text = CString::new(r#"{"n":1,"breakpoints":["0/1","1/1"],"partitions":[[0]],"values":[["1/0"]]}"#).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { kh_md_from_json(text.as_ptr(), &mut d) }, KhStatus::Parse);
    assert!(d.is_null());
    assert!(last_error().contains("1/0"));
    assert_eq!(unsafe { kh_md_from_json(ptr::null(), &mut d) }, KhStatus::NullPointer);
    assert_eq!(unsafe { kh_md_from_json(text.as_ptr(), ptr::null_mut()) }, KhStatus::NullPointer);
}

#[test]
fn validation() {
    let d = load(NOT_MEAN_ZERO);
    let mut valid = true;
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { kh_md_validate(d, &mut valid, &mut report) }, KhStatus::Ok);
    assert!(!valid);
    assert!(take_string(report).contains("mean-zero"));
    let mut u = 0.0;
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { kh_transform(d, 4, 0, 4.0, &mut out, ptr::null_mut()) }, KhStatus::InvalidSystem);
    assert!(out.is_null());
    unsafe { kh_md_free(d) };

    let d = load(HAAR);
    assert_eq!(unsafe { kh_md_validate(d, &mut valid, ptr::null_mut()) }, KhStatus::Ok);
    assert!(valid);
    assert_eq!(unsafe { kh_md_u_ratio(d, 4.0, &mut u) }, KhStatus::Ok);
    assert!(u > 0.0);
    unsafe { kh_md_free(d) };
}

#[test]
fn norms() {
    let d = load(THIRDS);
    let (mut pn, mut sup, mut u) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(kh_md_pnorm(d, 2.0, &mut pn), KhStatus::Ok);
        assert_eq!(kh_md_sup_cww(d, &mut sup), KhStatus::Ok);
        assert_eq!(kh_md_u_ratio(d, 2.0, &mut u), KhStatus::Ok);
        assert_eq!(kh_md_pnorm(d, -1.0, &mut pn), KhStatus::Domain);
        assert_eq!(kh_md_pnorm(ptr::null(), 2.0, &mut pn), KhStatus::NullPointer);
        kh_md_free(d);
    }
    // ||d||_2^2 = 4/3 + 2/3
    assert!((pn - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(sup, 2.0);
    assert!((u - pn / sup).abs() < 1e-15);
}

#[test]
fn constants() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(kh_rademacher_pnorm(2, 4.0, &mut x), KhStatus::Ok);
        assert!((x - 2f64.powf(0.25)).abs() < 1e-14);
        assert_eq!(kh_rademacher_pnorm(0, 4.0, &mut x), KhStatus::Domain);
        assert_eq!(kh_khintchine_constant(4.0, &mut x), KhStatus::Ok);
        assert!((x - 3f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(kh_khintchine_constant(2.0, &mut x), KhStatus::Domain);
        assert_eq!(kh_log_gamma(5.0, &mut x), KhStatus::Ok);
        assert!((x - 24f64.ln()).abs() < 1e-13);
        assert_eq!(kh_log_gamma(0.0, &mut x), KhStatus::Domain);
        assert_eq!(kh_log_gamma(1.0, ptr::null_mut()), KhStatus::NullPointer);
    }
}

#[test]
fn transforms() {
    let thirds = load(THIRDS);
    let mut out = ptr::null_mut();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(kh_transform(thirds, KhTransformKind::R1 as i32, 1, 4.0, &mut out, &mut report), KhStatus::Ok);
        assert!(take_string(report).contains("\"cww_pointwise_relation\":\"equal\""));
        kh_md_free(out);

        assert_eq!(kh_transform(thirds, KhTransformKind::R2 as i32, 1, 4.0, &mut out, ptr::null_mut()), KhStatus::Precondition);
        assert!(last_error().contains("IP"));
        assert!(out.is_null());
        assert_eq!(kh_transform(thirds, 99, 1, 4.0, &mut out, ptr::null_mut()), KhStatus::Domain);
        kh_md_free(thirds);

        let haar = load(HAAR);
        let kind = KhTransformKind::Rademacherize as i32;
        assert_eq!(kh_transform(haar, kind, 0, 3.0, &mut out, ptr::null_mut()), KhStatus::Ok);
        let mut u = 0.0;
        let mut r = 0.0;
        assert_eq!(kh_md_u_ratio(out, 3.0, &mut u), KhStatus::Ok);
        assert_eq!(kh_rademacher_pnorm(2, 3.0, &mut r), KhStatus::Ok);
        assert!((u - r).abs() < 1e-9 * r);
        kh_md_free(out);
        assert_eq!(kh_transform(haar, kind, 0, 2.5, &mut out, ptr::null_mut()), KhStatus::Domain);
        kh_md_free(haar);
    }
}

#[test]
fn free_accepts_null() {
    unsafe {
        kh_md_free(ptr::null_mut());
        kh_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/khintchine.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "kh_md_from_json",
        "kh_md_free",
        "kh_md_to_json",
        "kh_string_free",
        "kh_md_validate",
        "kh_md_pnorm",
        "kh_md_u_ratio",
        "kh_rademacher_pnorm",
        "kh_khintchine_constant",
        "kh_log_gamma",
        "kh_transform",
        "kh_last_error",
        "typedef struct KhMdSystem KhMdSystem",
        "KH_STATUS_CERTIFICATE_FAILED",
        "KH_TRANSFORM_KIND_RADEMACHERIZE",
    ] {
        assert!(text.contains(name), "{name}");
    }
    // the header must compile as C when a compiler is around
    if let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"]).arg(&header).status() {
        assert!(status.success());
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libkhintchine_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "khintchine.h"
int main(void) {
    const char *json = "{\"n\":1,\"breakpoints\":[\"0/1\",\"1/3\",\"1/1\"],\"partitions\":[[0,1]],\"values\":[[\"2/1\",\"-1/1\"]]}";
    KhMdSystem *d = NULL;
    if (kh_md_from_json(json, &d) != KH_STATUS_OK) return 1;
    double u = 0.0, r = 0.0;
    if (kh_md_u_ratio(d, 2.0, &u) != KH_STATUS_OK) return 2;
    if (kh_rademacher_pnorm(2, 4.0, &r) != KH_STATUS_OK) return 3;
    if (kh_log_gamma(-1.0, &r) != KH_STATUS_DOMAIN || kh_last_error() == NULL) return 4;
    kh_md_free(d);
    printf("%.15f\n", u);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("main");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let u: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((u - 2f64.sqrt() / 2.0).abs() < 1e-14);
}

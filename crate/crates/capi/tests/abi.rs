//! Exercises the C entry points the way a foreign caller would: raw
//! pointers in, owned strings out, explicit frees.

use std::ffi::{CStr, CString};
use std::fs;
use std::path::Path;
use std::ptr;

use compose_patterns_capi::*;

fn c_string(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut std::os::raw::c_char) -> String {
    assert!(!p.is_null());
    let out = CStr::from_ptr(p).to_string_lossy().into_owned();
    cp_string_free(p);
    out
}

fn fixture_tree(dir: &Path) {
    fs::write(
        dir.join("docker-compose.yml"),
        "services:\n  db:\n    image: postgres:13\n  app:\n    image: example/backend\n    depends_on:\n      - db\n",
    )
    .unwrap();
}

#[test]
fn scan_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fixture_tree(dir.path());
    let root = c_string(dir.path().to_str().unwrap());

    let mut report: *mut CpReport = ptr::null_mut();
    let status = unsafe { cp_scan_root(root.as_ptr(), &mut report) };
    assert_eq!(status, CpStatus::CpOk);
    assert!(!report.is_null());

    unsafe {
        assert_eq!(cp_report_file_count(report), 1);
        assert_eq!(cp_report_warning_count(report), 0);

        let json = take_string(cp_report_json(report));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["files"][0]["path"], "docker-compose.yml");
        assert_eq!(parsed["histogram"]["Database"], 1);

        let text = take_string(cp_report_text(report));
        assert!(text.contains("Database"));

        cp_report_free(report);
    }
}

#[test]
fn scan_honors_options_struct() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("stack.yml"),
        "services:\n  db:\n    image: postgres:13\n",
    )
    .unwrap();
    let root = c_string(dir.path().to_str().unwrap());

    let mut opts = cp_scan_options_default();
    assert_eq!(opts.loose, 0);
    assert!((opts.min_support - 0.05).abs() < 1e-12);
    opts.loose = 1;

    let mut report: *mut CpReport = ptr::null_mut();
    let status = unsafe { cp_scan_root_opts(root.as_ptr(), &opts, &mut report) };
    assert_eq!(status, CpStatus::CpOk);
    unsafe {
        assert_eq!(cp_report_file_count(report), 1);
        cp_report_free(report);
    }
}

#[test]
fn error_paths_set_status_and_message() {
    let mut report: *mut CpReport = ptr::null_mut();

    let status = unsafe { cp_scan_root(ptr::null(), &mut report) };
    assert_eq!(status, CpStatus::CpNullArgument);
    assert!(report.is_null());
    let msg = unsafe { take_string(cp_last_error_message()) };
    assert!(msg.contains("NULL"));

    let missing = c_string("/no/such/root/anywhere");
    let status = unsafe { cp_scan_root(missing.as_ptr(), &mut report) };
    assert_eq!(status, CpStatus::CpRootNotFound);
    assert!(report.is_null());
    let msg = unsafe { take_string(cp_last_error_message()) };
    assert!(msg.contains("/no/such/root/anywhere"));

    let dir = tempfile::tempdir().unwrap();
    let root = c_string(dir.path().to_str().unwrap());
    let mut opts = cp_scan_options_default();
    opts.min_support = 0.0;
    let status = unsafe { cp_scan_root_opts(root.as_ptr(), &opts, &mut report) };
    assert_eq!(status, CpStatus::CpInvalidOption);

    let status = unsafe { cp_scan_root(root.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, CpStatus::CpNullArgument);
}

#[test]
fn classify_image_by_name() {
    unsafe {
        let image = c_string("registry.example.com:5000/library/postgres:13");
        assert_eq!(take_string(cp_classify_image(image.as_ptr())), "Database");

        let bare = c_string("ubuntu:22.04");
        assert_eq!(take_string(cp_classify_image(bare.as_ptr())), "Unclassified");

        assert!(cp_classify_image(ptr::null()).is_null());
    }
}

#[test]
fn explain_pattern_and_id_listing() {
    unsafe {
        let ids = take_string(cp_pattern_ids());
        let lines: Vec<&str> = ids.lines().collect();
        assert_eq!(lines.len(), 14);
        assert!(lines.contains(&"SERVICE_INHERITANCE"));

        let id = c_string("SERVICE_INHERITANCE");
        let text = take_string(cp_explain_pattern(id.as_ptr()));
        assert!(text.contains("extends"));

        let bad = c_string("NOT_A_PATTERN");
        assert!(cp_explain_pattern(bad.as_ptr()).is_null());
        let msg = take_string(cp_last_error_message());
        assert!(msg.contains("SERVICE_INHERITANCE"));
    }
}

#[test]
fn double_free_safe_helpers() {
    unsafe {
        // NULL is always accepted
        cp_string_free(ptr::null_mut());
        cp_report_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("compose_patterns.h");
    let text = fs::read_to_string(header).expect("header generated by the build script");
    for needle in [
        "COMPOSE_PATTERNS_H",
        "typedef struct CpReport CpReport;",
        "cp_scan_root",
        "cp_scan_root_opts",
        "cp_report_json",
        "cp_report_free",
        "cp_classify_image",
        "cp_explain_pattern",
        "cp_string_free",
        "cp_last_error_message",
        "CP_ROOT_NOT_FOUND",
    ] {
        assert!(text.contains(needle), "header lacks {needle:?}");
    }
}

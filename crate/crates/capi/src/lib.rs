//! C ABI over the compose-patterns library.
//!
//! Conventions: handles are opaque pointers released by the matching
//! `_free` function; strings returned as `char*` are heap copies the
//! caller releases with `cp_string_free`; functions that can fail return
//! a `CpStatus`, with details available from `cp_last_error_message`.
//! No pointer is borrowed past the call.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use compose_patterns::classify::{classify_image, default_rules};
use compose_patterns::patterns::{explain, PatternId};
use compose_patterns::report::{
    render_report, scan_path, CorpusReport, ReportFormat, ScanError, ScanOptions,
};

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    CpOk = 0,
    CpNullArgument = 1,
    CpInvalidUtf8 = 2,
    CpRootNotFound = 3,
    CpInvalidOption = 4,
    CpInternal = 5,
}

/// Scan configuration. Obtain defaults from `cp_scan_options_default`
/// and change only the fields of interest. Booleans are 0 or 1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpScanOptions {
    /// Minimum itemset support, in (0, 1].
    pub min_support: f64,
    /// Accept any .yml/.yaml with a top-level services mapping.
    pub loose: c_int,
    /// Count unclassified services during itemset mining.
    pub include_unclassified: c_int,
    /// Follow extends targets whose filename fails the corpus filter.
    pub follow_extends_outside_filter: c_int,
}

/// Opaque scan result. Release with `cp_report_free`.
pub struct CpReport {
    inner: CorpusReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let stored = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn string_to_c(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_last_error("string contains an interior NUL byte");
            ptr::null_mut()
        }
    }
}

/// Borrows a required string argument.
///
/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, CpStatus> {
    if p.is_null() {
        set_last_error("required string argument is NULL");
        return Err(CpStatus::CpNullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8");
        CpStatus::CpInvalidUtf8
    })
}

fn guard_status(body: impl FnOnce() -> CpStatus) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            CpStatus::CpInternal
        }
    }
}

fn guard_ptr<T>(body: impl FnOnce() -> *mut T) -> *mut T {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(p) => p,
        Err(_) => {
            set_last_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// Default scan options, suitable for passing to `cp_scan_root_opts`.
#[no_mangle]
pub extern "C" fn cp_scan_options_default() -> CpScanOptions {
    CpScanOptions {
        min_support: 0.05,
        loose: 0,
        include_unclassified: 0,
        follow_extends_outside_filter: 1,
    }
}

fn do_scan(root: &str, opts_in: Option<&CpScanOptions>) -> Result<CpReport, CpStatus> {
    let mut opts = ScanOptions::new(PathBuf::from(root));
    if let Some(o) = opts_in {
        opts.min_support = o.min_support;
        opts.loose = o.loose != 0;
        opts.include_unclassified = o.include_unclassified != 0;
        opts.follow_extends_outside_filter = o.follow_extends_outside_filter != 0;
    }
    match scan_path(&opts) {
        Ok(inner) => Ok(CpReport { inner }),
        Err(e) => {
            set_last_error(&e.to_string());
            Err(match e {
                ScanError::RootNotFound(_) => CpStatus::CpRootNotFound,
                _ => CpStatus::CpInvalidOption,
            })
        }
    }
}

/// Scans the directory tree at `root` with default options and writes a
/// new report handle to `out`.
///
/// # Safety
/// `root` must be a valid NUL-terminated path; `out` must be a valid
/// pointer to a `CpReport*` slot.
#[no_mangle]
pub unsafe extern "C" fn cp_scan_root(
    root: *const c_char,
    out: *mut *mut CpReport,
) -> CpStatus {
    cp_scan_root_opts(root, ptr::null(), out)
}

/// Scans the directory tree at `root`. `opts` may be NULL for defaults.
///
/// # Safety
/// `root` must be a valid NUL-terminated path; `opts` NULL or valid;
/// `out` must be a valid pointer to a `CpReport*` slot.
#[no_mangle]
pub unsafe extern "C" fn cp_scan_root_opts(
    root: *const c_char,
    opts: *const CpScanOptions,
    out: *mut *mut CpReport,
) -> CpStatus {
    guard_status(|| {
        clear_last_error();
        if out.is_null() {
            set_last_error("out pointer is NULL");
            return CpStatus::CpNullArgument;
        }
        *out = ptr::null_mut();
        let root = match str_arg(root) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match do_scan(root, opts.as_ref()) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(report));
                CpStatus::CpOk
            }
            Err(status) => status,
        }
    })
}

/// The report as pretty-printed JSON. Caller frees with `cp_string_free`.
/// Returns NULL on a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle from `cp_scan_root*`.
#[no_mangle]
pub unsafe extern "C" fn cp_report_json(report: *const CpReport) -> *mut c_char {
    guard_ptr(|| match report.as_ref() {
        Some(r) => string_to_c(render_report(&r.inner, ReportFormat::Json)),
        None => {
            set_last_error("report handle is NULL");
            ptr::null_mut()
        }
    })
}

/// The report rendered as human-readable text. Caller frees with
/// `cp_string_free`. Returns NULL on a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle from `cp_scan_root*`.
#[no_mangle]
pub unsafe extern "C" fn cp_report_text(report: *const CpReport) -> *mut c_char {
    guard_ptr(|| match report.as_ref() {
        Some(r) => string_to_c(render_report(&r.inner, ReportFormat::Text)),
        None => {
            set_last_error("report handle is NULL");
            ptr::null_mut()
        }
    })
}

/// Number of file records in the report (merged views included).
/// Returns 0 on a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live handle from `cp_scan_root*`.
#[no_mangle]
pub unsafe extern "C" fn cp_report_file_count(report: *const CpReport) -> usize {
    report.as_ref().map(|r| r.inner.files.len()).unwrap_or(0)
}

/// Number of warnings collected during the scan. Returns 0 on NULL.
///
/// # Safety
/// `report` must be NULL or a live handle from `cp_scan_root*`.
#[no_mangle]
pub unsafe extern "C" fn cp_report_warning_count(report: *const CpReport) -> usize {
    report.as_ref().map(|r| r.inner.warnings.len()).unwrap_or(0)
}

/// Releases a report handle. NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a live handle; the handle is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_report_free(report: *mut CpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Classifies one image reference against the built-in rule table and
/// returns the canonical service-type name (for example "Database").
/// Caller frees with `cp_string_free`.
///
/// # Safety
/// `image` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_classify_image(image: *const c_char) -> *mut c_char {
    guard_ptr(|| {
        clear_last_error();
        let image = match str_arg(image) {
            Ok(s) => s,
            Err(_) => return ptr::null_mut(),
        };
        let ty = classify_image(image, default_rules());
        string_to_c(ty.name().to_string())
    })
}

/// Prose description of a pattern id such as "SERVICE_INHERITANCE".
/// Returns NULL for an unknown id (see `cp_last_error_message`).
/// Caller frees with `cp_string_free`.
///
/// # Safety
/// `id` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_explain_pattern(id: *const c_char) -> *mut c_char {
    guard_ptr(|| {
        clear_last_error();
        let id = match str_arg(id) {
            Ok(s) => s,
            Err(_) => return ptr::null_mut(),
        };
        match id.parse::<PatternId>() {
            Ok(pattern) => string_to_c(explain(pattern).to_string()),
            Err(e) => {
                set_last_error(&e.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// All pattern ids, newline separated. Caller frees with `cp_string_free`.
#[no_mangle]
pub extern "C" fn cp_pattern_ids() -> *mut c_char {
    guard_ptr(|| {
        let ids: Vec<&str> = PatternId::ALL.iter().map(|p| p.name()).collect();
        string_to_c(ids.join("\n"))
    })
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Copy of the calling thread's last error message, or NULL when the
/// last call succeeded. Caller frees with `cp_string_free`.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

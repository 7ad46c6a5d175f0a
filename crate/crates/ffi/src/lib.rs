//! C ABI for the verification engine.
//!
//! The interface follows a conventional handle-and-status-code design:
//! scenarios and reports are opaque heap objects created and destroyed
//! through paired functions, every fallible call returns a [`TmlStatus`]
//! code, and the most recent error message is available per thread through
//! [`tml_last_error`]. Strings returned as `char*` are owned by the caller
//! and must be released with [`tml_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tmlift::scenario::{parse_scenario, run_scenario, RunReport, Scenario};

/// No error.
pub const TML_OK: i32 = 0;
/// A required argument was null or not valid UTF-8.
pub const TML_INVALID_ARGUMENT: i32 = 1;
/// The scenario JSON was rejected (syntax, schema, or expression error), or
/// the fixture name is unknown.
pub const TML_BAD_SCENARIO: i32 = 2;
/// Evaluation failed while running checks (domain error, singular matrix).
pub const TML_EVAL_ERROR: i32 = 3;

/// Opaque handle to a validated scenario.
pub struct TmlScenario {
    inner: Scenario,
}

/// Opaque handle to the result of running a scenario.
pub struct TmlReport {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

/// Returns the error message of the most recent failing call on this thread,
/// or an empty string after a success. The pointer stays valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tml_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Reads a required C string argument.
///
/// # Safety
///
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn required_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        set_last_error(&format!("{what} must not be null"));
        return Err(TML_INVALID_ARGUMENT);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_last_error(&format!("{what} must be valid UTF-8"));
            Err(TML_INVALID_ARGUMENT)
        }
    }
}

fn leak_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Parses and validates a scenario from JSON text, storing a new handle in
/// `out`. On failure `out` is untouched and the status describes the error.
///
/// # Safety
///
/// `json` must be a valid NUL-terminated string or null; `out` must be a
/// valid pointer to writable memory or null.
#[no_mangle]
pub unsafe extern "C" fn tml_scenario_from_json(
    json: *const c_char,
    out: *mut *mut TmlScenario,
) -> i32 {
    if out.is_null() {
        set_last_error("out must not be null");
        return TML_INVALID_ARGUMENT;
    }
    let text = match unsafe { required_str(json, "json") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    match parse_scenario(text) {
        Ok(scenario) => {
            clear_last_error();
            unsafe { *out = Box::into_raw(Box::new(TmlScenario { inner: scenario })) };
            TML_OK
        }
        Err(e) => {
            set_last_error(&e.to_string());
            TML_BAD_SCENARIO
        }
    }
}

/// Builds a scenario from a named built-in fixture (see
/// [`tml_fixture_names_json`]), storing a new handle in `out`.
///
/// # Safety
///
/// `name` must be a valid NUL-terminated string or null; `out` must be a
/// valid pointer to writable memory or null.
#[no_mangle]
pub unsafe extern "C" fn tml_scenario_from_fixture(
    name: *const c_char,
    out: *mut *mut TmlScenario,
) -> i32 {
    if out.is_null() {
        set_last_error("out must not be null");
        return TML_INVALID_ARGUMENT;
    }
    let name = match unsafe { required_str(name, "name") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    match tmlift::fixtures::fixture(name) {
        Some(f) => {
            clear_last_error();
            let scenario = f.compile();
            unsafe { *out = Box::into_raw(Box::new(TmlScenario { inner: scenario })) };
            TML_OK
        }
        None => {
            set_last_error(&format!("unknown fixture `{name}`"));
            TML_BAD_SCENARIO
        }
    }
}

/// Releases a scenario handle. Null is ignored.
///
/// # Safety
///
/// `scenario` must be null or a pointer previously returned through
/// [`tml_scenario_from_json`] or [`tml_scenario_from_fixture`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn tml_scenario_free(scenario: *mut TmlScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Runs every check of a scenario, storing a new report handle in `out`.
/// `label` names the run in the report (pass the scenario's path or any
/// identifier).
///
/// # Safety
///
/// `scenario` must be a live handle or null; `label` must be a valid
/// NUL-terminated string or null; `out` must be a valid pointer to writable
/// memory or null.
#[no_mangle]
pub unsafe extern "C" fn tml_run(
    scenario: *const TmlScenario,
    label: *const c_char,
    out: *mut *mut TmlReport,
) -> i32 {
    if out.is_null() {
        set_last_error("out must not be null");
        return TML_INVALID_ARGUMENT;
    }
    if scenario.is_null() {
        set_last_error("scenario must not be null");
        return TML_INVALID_ARGUMENT;
    }
    let label = match unsafe { required_str(label, "label") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let scenario = unsafe { &*scenario };
    match run_scenario(&scenario.inner, label) {
        Ok(report) => {
            clear_last_error();
            unsafe { *out = Box::into_raw(Box::new(TmlReport { inner: report })) };
            TML_OK
        }
        Err(e) => {
            set_last_error(&e.to_string());
            TML_EVAL_ERROR
        }
    }
}

/// Returns 1 when every check of the report passed, 0 when any failed, and
/// -1 when `report` is null.
///
/// # Safety
///
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tml_report_passed(report: *const TmlReport) -> i32 {
    if report.is_null() {
        set_last_error("report must not be null");
        return -1;
    }
    if unsafe { &*report }.inner.passed() {
        1
    } else {
        0
    }
}

/// Serializes a report as pretty-printed JSON. The returned string must be
/// released with [`tml_string_free`]; returns null when `report` is null.
///
/// # Safety
///
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tml_report_json(report: *const TmlReport) -> *mut c_char {
    if report.is_null() {
        set_last_error("report must not be null");
        return ptr::null_mut();
    }
    let report = unsafe { &*report };
    match serde_json::to_string_pretty(&report.inner) {
        Ok(json) => leak_string(json),
        Err(e) => {
            set_last_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Renders a report as human-readable text. The returned string must be
/// released with [`tml_string_free`]; returns null when `report` is null.
///
/// # Safety
///
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tml_report_text(report: *const TmlReport) -> *mut c_char {
    if report.is_null() {
        set_last_error("report must not be null");
        return ptr::null_mut();
    }
    leak_string(unsafe { &*report }.inner.to_text())
}

/// Releases a report handle. Null is ignored.
///
/// # Safety
///
/// `report` must be null or a report handle that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn tml_report_free(report: *mut TmlReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Returns the built-in fixture names as a JSON array of strings. The
/// returned string must be released with [`tml_string_free`].
#[no_mangle]
pub extern "C" fn tml_fixture_names_json() -> *mut c_char {
    let names: Vec<&str> = tmlift::fixtures::FIXTURE_NAMES.to_vec();
    match serde_json::to_string(&names) {
        Ok(json) => leak_string(json),
        Err(e) => {
            set_last_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
///
/// `s` must be null or a string returned by this library that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn tml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

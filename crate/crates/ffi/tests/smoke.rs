//! End-to-end tests of the C ABI, exercised through the extern functions
//! exactly as a C caller would use them.

use std::ffi::{CStr, CString};
use std::ptr;

use tmlift_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tml_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn take_string(ptr: *mut std::ffi::c_char) -> String {
    assert!(!ptr.is_null(), "expected a string, got null: {}", last_error());
    let s = unsafe { CStr::from_ptr(ptr) }.to_string_lossy().into_owned();
    unsafe { tml_string_free(ptr) };
    s
}

#[test]
fn fixture_roundtrip_through_the_c_interface() {
    let names_json = take_string(tml_fixture_names_json());
    let names: Vec<String> = serde_json::from_str(&names_json).unwrap();
    assert!(names.iter().any(|n| n == "canonical"));
    assert!(names.iter().any(|n| n == "broken-codazzi"));

    let name = CString::new("canonical").unwrap();
    let mut scenario: *mut TmlScenario = ptr::null_mut();
    assert_eq!(
        unsafe { tml_scenario_from_fixture(name.as_ptr(), &mut scenario) },
        TML_OK,
        "{}",
        last_error()
    );
    assert!(!scenario.is_null());

    let label = CString::new("canonical").unwrap();
    let mut report: *mut TmlReport = ptr::null_mut();
    assert_eq!(
        unsafe { tml_run(scenario, label.as_ptr(), &mut report) },
        TML_OK,
        "{}",
        last_error()
    );
    assert_eq!(unsafe { tml_report_passed(report) }, 1);

    let json = take_string(unsafe { tml_report_json(report) });
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["verdict"], "pass");
    assert_eq!(value["scenario"], "canonical");

    let text = take_string(unsafe { tml_report_text(report) });
    assert!(text.contains("verdict: pass"), "{text}");

    unsafe {
        tml_report_free(report);
        tml_scenario_free(scenario);
    }
}

#[test]
fn failing_fixture_reports_failure_without_error() {
    let name = CString::new("broken-codazzi").unwrap();
    let mut scenario: *mut TmlScenario = ptr::null_mut();
    assert_eq!(
        unsafe { tml_scenario_from_fixture(name.as_ptr(), &mut scenario) },
        TML_OK
    );
    let label = CString::new("broken").unwrap();
    let mut report: *mut TmlReport = ptr::null_mut();
    assert_eq!(unsafe { tml_run(scenario, label.as_ptr(), &mut report) }, TML_OK);
    assert_eq!(unsafe { tml_report_passed(report) }, 0);
    unsafe {
        tml_report_free(report);
        tml_scenario_free(scenario);
    }
}

#[test]
fn scenario_json_path_works_and_reports_schema_errors() {
    let good = CString::new(
        r#"{
            "dim": 2,
            "box": [[-1, 1], [-1, 1]],
            "A": [["1", "0"], ["0", "1"]],
            "checks": ["codazzi"],
            "samples": 5
        }"#,
    )
    .unwrap();
    let mut scenario: *mut TmlScenario = ptr::null_mut();
    assert_eq!(
        unsafe { tml_scenario_from_json(good.as_ptr(), &mut scenario) },
        TML_OK
    );
    unsafe { tml_scenario_free(scenario) };

    let bad = CString::new(r#"{"dim": 2, "box": [[-1, 1], [-1, 1]], "checks": ["nope"]}"#).unwrap();
    let mut out: *mut TmlScenario = ptr::null_mut();
    assert_eq!(
        unsafe { tml_scenario_from_json(bad.as_ptr(), &mut out) },
        TML_BAD_SCENARIO
    );
    assert!(out.is_null());
    assert!(last_error().contains("unknown check"), "{}", last_error());
}

#[test]
fn evaluation_errors_surface_with_point_context() {
    let json = CString::new(
        r#"{
            "dim": 1,
            "box": [[-2.0, -1.0]],
            "gamma": [[["log(x1)"]]],
            "checks": ["brackets"],
            "samples": 2
        }"#,
    )
    .unwrap();
    let mut scenario: *mut TmlScenario = ptr::null_mut();
    assert_eq!(
        unsafe { tml_scenario_from_json(json.as_ptr(), &mut scenario) },
        TML_OK
    );
    let label = CString::new("domain").unwrap();
    let mut report: *mut TmlReport = ptr::null_mut();
    assert_eq!(
        unsafe { tml_run(scenario, label.as_ptr(), &mut report) },
        TML_EVAL_ERROR
    );
    assert!(report.is_null());
    let message = last_error();
    assert!(message.contains("at point"), "{message}");
    unsafe { tml_scenario_free(scenario) };
}

#[test]
fn null_and_invalid_arguments_are_rejected() {
    let mut scenario: *mut TmlScenario = ptr::null_mut();
    assert_eq!(
        unsafe { tml_scenario_from_json(ptr::null(), &mut scenario) },
        TML_INVALID_ARGUMENT
    );
    assert_eq!(
        unsafe { tml_scenario_from_fixture(ptr::null(), &mut scenario) },
        TML_INVALID_ARGUMENT
    );
    let name = CString::new("no-such-fixture").unwrap();
    assert_eq!(
        unsafe { tml_scenario_from_fixture(name.as_ptr(), &mut scenario) },
        TML_BAD_SCENARIO
    );
    let label = CString::new("x").unwrap();
    let mut report: *mut TmlReport = ptr::null_mut();
    assert_eq!(
        unsafe { tml_run(ptr::null(), label.as_ptr(), &mut report) },
        TML_INVALID_ARGUMENT
    );
    assert_eq!(unsafe { tml_report_passed(ptr::null()) }, -1);
    assert!(unsafe { tml_report_json(ptr::null()) }.is_null());
    // Frees ignore null.
    unsafe {
        tml_scenario_free(ptr::null_mut());
        tml_report_free(ptr::null_mut());
        tml_string_free(ptr::null_mut());
    }
}

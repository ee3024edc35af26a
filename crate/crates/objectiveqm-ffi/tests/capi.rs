//! Exercises the C ABI exactly as a foreign binding would: through the
//! exported extern "C" functions, raw pointers, and status codes.

use std::ffi::{CStr, CString};

use objectiveqm_ffi::*;

const SQRT2: f64 = std::f64::consts::SQRT_2;
const E: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn last_error() -> String {
    unsafe { CStr::from_ptr(oqm_last_error_message()).to_string_lossy().into_owned() }
}

#[test]
fn version_is_a_static_string() {
    let version = unsafe { CStr::from_ptr(oqm_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn synthesize_query_serialize_and_free() {
    unsafe {
        let mut model: *mut OqmModel = std::ptr::null_mut();
        // Singlet optimal-angle pattern at eta = 0.5.
        let status = oqm_synthesize_chsh(-E, -E, -E, E, 0.0, 0.0, 0.0, 0.0, 0.5, &mut model);
        assert_eq!(status, OqmStatus::Ok, "{}", last_error());
        assert!(!model.is_null());
        assert!(oqm_model_class_count(model) > 0);

        // Conditional correlation of the first settings pair.
        let a1 = CString::new("A1").unwrap();
        let b1 = CString::new("B1").unwrap();
        let mut value = 0.0;
        let mut defined = false;
        let status =
            oqm_conditional_correlation(model, a1.as_ptr(), b1.as_ptr(), &mut value, &mut defined);
        assert_eq!(status, OqmStatus::Ok, "{}", last_error());
        assert!(defined);
        assert!((value + E).abs() < 1e-9);

        // Unconditional correlation carries the eta^2 suppression.
        let mut unconditional = 0.0;
        let status =
            oqm_unconditional_correlation(model, a1.as_ptr(), b1.as_ptr(), &mut unconditional);
        assert_eq!(status, OqmStatus::Ok);
        assert!(unconditional.abs() <= 1.0);

        // Breakdown of the property A1 in {+1}.
        let delta = [1.0f64];
        let (mut total, mut detect, mut conditional, mut has_conditional) =
            (0.0, 0.0, 0.0, false);
        let status = oqm_state_breakdown(
            model,
            a1.as_ptr(),
            delta.as_ptr(),
            delta.len(),
            false,
            &mut total,
            &mut detect,
            &mut conditional,
            &mut has_conditional,
        );
        assert_eq!(status, OqmStatus::Ok, "{}", last_error());
        assert!((detect - 0.5).abs() < 1e-9, "per-side efficiency is eta");
        assert!(has_conditional);
        assert!((total - detect * conditional).abs() < 1e-12);

        // JSON round trip through the ABI.
        let json = oqm_model_to_json(model);
        assert!(!json.is_null(), "{}", last_error());
        let mut reparsed: *mut OqmModel = std::ptr::null_mut();
        let status = oqm_model_from_json(json, &mut reparsed);
        assert_eq!(status, OqmStatus::Ok, "{}", last_error());
        assert_eq!(oqm_model_class_count(reparsed), oqm_model_class_count(model));

        // Simulation report through the ABI.
        let report = oqm_chsh_blockwise_json(model, 10_000, 7);
        assert!(!report.is_null(), "{}", last_error());
        let parsed: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        let s = parsed["s_estimate"].as_f64().unwrap();
        assert!((s - 2.0 * SQRT2).abs() < 0.15);

        oqm_string_free(report);
        oqm_string_free(json);
        oqm_model_free(reparsed);
        oqm_model_free(model);
    }
}

#[test]
fn infeasible_targets_return_infeasible_without_model() {
    unsafe {
        let mut model: *mut OqmModel = std::ptr::null_mut();
        let status = oqm_synthesize_chsh(-E, -E, -E, E, 0.0, 0.0, 0.0, 0.0, 1.0, &mut model);
        assert_eq!(status, OqmStatus::Infeasible);
        assert!(model.is_null());
        assert!(last_error().contains("phase-1"));
    }
}

#[test]
fn threshold_through_the_abi() {
    unsafe {
        let mut eta = 0.0;
        let status = oqm_eta_threshold(-E, -E, -E, E, 0.005, &mut eta);
        assert_eq!(status, OqmStatus::Ok, "{}", last_error());
        assert!((0.82..=0.84).contains(&eta), "eta* = {eta}");
    }
}

#[test]
fn null_and_garbage_inputs_are_reported() {
    unsafe {
        let mut model: *mut OqmModel = std::ptr::null_mut();
        assert_eq!(
            oqm_model_from_json(std::ptr::null(), &mut model),
            OqmStatus::NullPointer
        );
        let garbage = CString::new("{not json").unwrap();
        assert_eq!(
            oqm_model_from_json(garbage.as_ptr(), &mut model),
            OqmStatus::InvalidInput
        );
        assert!(!last_error().is_empty());
        // Bad eta.
        let status = oqm_synthesize_chsh(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.5, &mut model);
        assert_eq!(status, OqmStatus::InvalidInput);
        // NULL model handles are tolerated by the count and free paths.
        assert_eq!(oqm_model_class_count(std::ptr::null()), 0);
        oqm_model_free(std::ptr::null_mut());
        oqm_string_free(std::ptr::null_mut());
    }
}

#[test]
fn ks_demo_reports_zero_violations() {
    let report = oqm_ks_demo_json(20_000, 9);
    assert!(!report.is_null(), "{}", last_error());
    let parsed: serde_json::Value = unsafe {
        serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap()
    };
    assert_eq!(parsed["satisfying_count"], 0);
    assert_eq!(parsed["min_violations"], 1);
    assert_eq!(parsed["check"]["total_violations"], 0);
    unsafe { oqm_string_free(report) };
}

#[test]
fn generated_header_exists_and_names_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("objectiveqm.h");
    let text = std::fs::read_to_string(&header).expect("cbindgen header generated at build time");
    for symbol in [
        "oqm_version",
        "oqm_model_from_json",
        "oqm_model_to_json",
        "oqm_model_free",
        "oqm_string_free",
        "oqm_state_breakdown",
        "oqm_conditional_correlation",
        "oqm_unconditional_correlation",
        "oqm_synthesize_chsh",
        "oqm_eta_threshold",
        "oqm_chsh_blockwise_json",
        "oqm_ks_demo_json",
        "OqmStatus",
        "OqmModel",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}

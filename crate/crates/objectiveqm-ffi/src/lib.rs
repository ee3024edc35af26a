//! C ABI for the objectiveqm library.
//!
//! Conventions: models travel as opaque `OqmModel` handles owned by the
//! caller and released with `oqm_model_free`; strings returned by the library
//! are NUL-terminated, owned by the caller, and released with
//! `oqm_string_free`; every fallible call returns an `OqmStatus`, and the
//! most recent failure message on the calling thread is available through
//! `oqm_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use objectiveqm::error::Error;
use objectiveqm::io::json_fmt::to_json_bytes;
use objectiveqm::io::ModelFileDoc;
use objectiveqm::model::{MacroProperty, MicroModel};
use objectiveqm::nogo::{
    chsh_blockwise, ks_context_check, ks_evasion_model, ks_global_search, ChshSettings,
};
use objectiveqm::oracle::OutcomeSet;
use objectiveqm::presets;
use objectiveqm::synthesis::{
    eta_threshold_with_marginals, synthesize_chsh, ChshSynthesis, ChshTarget,
};

/// Call outcome. `OQM_STATUS_INFEASIBLE` and `OQM_STATUS_NO_THRESHOLD` are
/// scientific results, not failures.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OqmStatus {
    Ok = 0,
    Infeasible = 1,
    InvalidInput = 2,
    Internal = 3,
    NullPointer = 4,
    NotFound = 5,
    NoThreshold = 6,
}

/// Opaque micro-model handle.
pub struct OqmModel {
    inner: MicroModel,
    /// Original document when the model came in as JSON; keeps targets
    /// serializable.
    doc: Option<ModelFileDoc>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> OqmStatus {
    match err {
        Error::InvalidInput(_) | Error::Domain(_) | Error::TooLarge(_) => OqmStatus::InvalidInput,
        Error::NotFound(_) => OqmStatus::NotFound,
        Error::NoThreshold { .. } => OqmStatus::NoThreshold,
        Error::Internal(_) | Error::NumericallyAmbiguous { .. } | Error::InfeasibleEvasion(_) => {
            OqmStatus::Internal
        }
    }
}

fn fail(err: &Error) -> OqmStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Borrows a C string argument; records an error on NULL/UTF-8 problems.
unsafe fn arg_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, OqmStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is NULL"));
        return Err(OqmStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        OqmStatus::InvalidInput
    })
}

unsafe fn arg_model<'a>(ptr: *const OqmModel) -> Result<&'a OqmModel, OqmStatus> {
    if ptr.is_null() {
        set_error("model handle is NULL");
        return Err(OqmStatus::NullPointer);
    }
    Ok(&*ptr)
}

fn into_c_string(json: Vec<u8>) -> *mut c_char {
    match CString::new(json) {
        Ok(s) => s.into_raw(),
        Err(_) => {
            set_error("output contained an interior NUL byte");
            std::ptr::null_mut()
        }
    }
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn oqm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Most recent error message on this thread; valid until the next failing
/// call from the same thread. Do not free.
#[no_mangle]
pub extern "C" fn oqm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library. NULL is accepted.
///
/// # Safety
/// `s` must be a pointer previously returned by an `oqm_*` function that
/// documents `oqm_string_free` as its deallocator, and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oqm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Frees a model handle. NULL is accepted.
///
/// # Safety
/// `model` must come from `oqm_model_from_json` or `oqm_synthesize_chsh`
/// and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn oqm_model_free(model: *mut OqmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Parses a model-file JSON document into a validated model handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_model` must be a valid
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn oqm_model_from_json(
    json: *const c_char,
    out_model: *mut *mut OqmModel,
) -> OqmStatus {
    if out_model.is_null() {
        set_error("out_model is NULL");
        return OqmStatus::NullPointer;
    }
    let text = match arg_str(json, "json") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let doc: ModelFileDoc = match serde_json::from_str(text) {
        Ok(doc) => doc,
        Err(e) => {
            set_error(&format!("model parse error: {e}"));
            return OqmStatus::InvalidInput;
        }
    };
    match doc.to_model() {
        Ok(inner) => {
            *out_model = Box::into_raw(Box::new(OqmModel { inner, doc: Some(doc) }));
            OqmStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Serializes a model handle back to model-file JSON. Returns NULL on error;
/// free with `oqm_string_free`.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oqm_model_to_json(model: *const OqmModel) -> *mut c_char {
    let handle = match arg_model(model) {
        Ok(h) => h,
        Err(_) => return std::ptr::null_mut(),
    };
    let doc = match &handle.doc {
        Some(doc) => doc.clone(),
        None => match ModelFileDoc::from_parts(&handle.inner, None) {
            Ok(doc) => doc,
            Err(e) => {
                fail(&e);
                return std::ptr::null_mut();
            }
        },
    };
    match to_json_bytes(&doc) {
        Ok(bytes) => into_c_string(bytes),
        Err(e) => {
            set_error(&format!("serialization error: {e}"));
            std::ptr::null_mut()
        }
    }
}

/// Number of micro-classes; 0 for a NULL handle.
///
/// # Safety
/// `model`, when non-NULL, must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oqm_model_class_count(model: *const OqmModel) -> usize {
    match arg_model(model) {
        Ok(h) => h.inner.classes().len(),
        Err(_) => 0,
    }
}

/// Analytic probability breakdown of the property (observable, delta) on the
/// model: overall probability, detection probability, and the probability
/// conditional on detection. `*out_has_conditional` is false when nothing is
/// ever detected (the conditional is undefined and `*out_conditional` is set
/// to NaN).
///
/// # Safety
/// `model` must be a live handle; `observable` a NUL-terminated string;
/// `delta` must point to `delta_len` doubles; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn oqm_state_breakdown(
    model: *const OqmModel,
    observable: *const c_char,
    delta: *const f64,
    delta_len: usize,
    include_a0: bool,
    out_total: *mut f64,
    out_detect: *mut f64,
    out_conditional: *mut f64,
    out_has_conditional: *mut bool,
) -> OqmStatus {
    let handle = match arg_model(model) {
        Ok(h) => h,
        Err(status) => return status,
    };
    let label = match arg_str(observable, "observable") {
        Ok(l) => l,
        Err(status) => return status,
    };
    if (delta.is_null() && delta_len > 0)
        || out_total.is_null()
        || out_detect.is_null()
        || out_conditional.is_null()
        || out_has_conditional.is_null()
    {
        set_error("output pointer or delta buffer is NULL");
        return OqmStatus::NullPointer;
    }
    let members = if delta_len == 0 {
        Vec::new()
    } else {
        std::slice::from_raw_parts(delta, delta_len).to_vec()
    };
    let outcome_set = match OutcomeSet::new(members, include_a0) {
        Ok(set) => set,
        Err(e) => return fail(&e),
    };
    let property = MacroProperty::new(label, outcome_set);
    match handle.inner.state_breakdown(&property) {
        Ok(breakdown) => {
            *out_total = breakdown.total;
            *out_detect = breakdown.detect;
            *out_conditional = breakdown.conditional.unwrap_or(f64::NAN);
            *out_has_conditional = breakdown.conditional.is_some();
            OqmStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Detected-pairs-only correlation of two dichotomic elementary observables.
/// `*out_defined` is false when the coincidence rate vanishes.
///
/// # Safety
/// `model` must be a live handle; label pointers NUL-terminated; out
/// pointers valid.
#[no_mangle]
pub unsafe extern "C" fn oqm_conditional_correlation(
    model: *const OqmModel,
    a: *const c_char,
    b: *const c_char,
    out_value: *mut f64,
    out_defined: *mut bool,
) -> OqmStatus {
    let handle = match arg_model(model) {
        Ok(h) => h,
        Err(status) => return status,
    };
    let (a, b) = match (arg_str(a, "a"), arg_str(b, "b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(status), _) | (_, Err(status)) => return status,
    };
    if out_value.is_null() || out_defined.is_null() {
        set_error("output pointer is NULL");
        return OqmStatus::NullPointer;
    }
    match handle.inner.conditional_correlation(a, b) {
        Ok(Some(value)) => {
            *out_value = value;
            *out_defined = true;
            OqmStatus::Ok
        }
        Ok(None) => {
            *out_value = f64::NAN;
            *out_defined = false;
            OqmStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// All-objects correlation with the no-registration outcome counted as 0.
///
/// # Safety
/// As for `oqm_conditional_correlation`.
#[no_mangle]
pub unsafe extern "C" fn oqm_unconditional_correlation(
    model: *const OqmModel,
    a: *const c_char,
    b: *const c_char,
    out_value: *mut f64,
) -> OqmStatus {
    let handle = match arg_model(model) {
        Ok(h) => h,
        Err(status) => return status,
    };
    let (a, b) = match (arg_str(a, "a"), arg_str(b, "b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(status), _) | (_, Err(status)) => return status,
    };
    if out_value.is_null() {
        set_error("output pointer is NULL");
        return OqmStatus::NullPointer;
    }
    match handle.inner.unconditional_correlation(a, b) {
        Ok(value) => {
            *out_value = value;
            OqmStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Synthesizes a model whose detected-block statistics meet the CHSH targets
/// (correlations e_xy, per-setting conditional marginals, per-side efficiency
/// eta). Returns `OQM_STATUS_INFEASIBLE` without a model when no local
/// objective model exists. Setting labels are A1, A2, B1, B2.
///
/// # Safety
/// `out_model` must be a valid writable pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn oqm_synthesize_chsh(
    e11: f64,
    e12: f64,
    e21: f64,
    e22: f64,
    a_marginal_1: f64,
    a_marginal_2: f64,
    b_marginal_1: f64,
    b_marginal_2: f64,
    eta: f64,
    out_model: *mut *mut OqmModel,
) -> OqmStatus {
    if out_model.is_null() {
        set_error("out_model is NULL");
        return OqmStatus::NullPointer;
    }
    let target = match ChshTarget::with_marginals(
        [[e11, e12], [e21, e22]],
        [a_marginal_1, a_marginal_2],
        [b_marginal_1, b_marginal_2],
        eta,
    ) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    match synthesize_chsh(&target) {
        Ok(ChshSynthesis::Feasible(model)) => {
            *out_model = Box::into_raw(Box::new(OqmModel { inner: *model, doc: None }));
            OqmStatus::Ok
        }
        Ok(ChshSynthesis::Infeasible { phase1_objective }) => {
            set_error(&format!(
                "no local objective model: phase-1 objective {phase1_objective:.3e}"
            ));
            *out_model = std::ptr::null_mut();
            OqmStatus::Infeasible
        }
        Err(e) => fail(&e),
    }
}

/// Largest per-side efficiency at which the CHSH targets stay classically
/// reproducible, bisected to `tol`. Marginal targets are taken as unbiased.
///
/// # Safety
/// `out_eta` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn oqm_eta_threshold(
    e11: f64,
    e12: f64,
    e21: f64,
    e22: f64,
    tol: f64,
    out_eta: *mut f64,
) -> OqmStatus {
    if out_eta.is_null() {
        set_error("out_eta is NULL");
        return OqmStatus::NullPointer;
    }
    match eta_threshold_with_marginals(&[[e11, e12], [e21, e22]], [0.0; 2], [0.0; 2], tol) {
        Ok(report) => {
            *out_eta = report.eta_star;
            OqmStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Runs the block-wise CHSH estimation (standard labels A1, A2, B1, B2) and
/// returns the report as JSON. NULL on error; free with `oqm_string_free`.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oqm_chsh_blockwise_json(
    model: *const OqmModel,
    n_per_block: u64,
    seed: u64,
) -> *mut c_char {
    let handle = match arg_model(model) {
        Ok(h) => h,
        Err(_) => return std::ptr::null_mut(),
    };
    match chsh_blockwise(&handle.inner, &ChshSettings::standard(), n_per_block, seed) {
        Ok(report) => match to_json_bytes(&report) {
            Ok(bytes) => into_c_string(bytes),
            Err(e) => {
                set_error(&format!("serialization error: {e}"));
                std::ptr::null_mut()
            }
        },
        Err(e) => {
            fail(&e);
            std::ptr::null_mut()
        }
    }
}

/// Runs the full Peres-Mermin pipeline (exhaustive search, evasion model,
/// per-context simulation of `n_per_context` joint measurements) and returns
/// a JSON report. NULL on error; free with `oqm_string_free`.
#[no_mangle]
pub extern "C" fn oqm_ks_demo_json(n_per_context: u64, seed: u64) -> *mut c_char {
    let system = presets::peres_mermin();
    let result = ks_global_search(&system)
        .and_then(|search| {
            let model = ks_evasion_model(&system, &search)?;
            let check = ks_context_check(&model, &system, n_per_context, seed)?;
            Ok((search, check))
        })
        .and_then(|(search, check)| {
            #[derive(serde::Serialize)]
            struct Demo {
                num_assignments: u64,
                satisfying_count: usize,
                min_violations: usize,
                check: objectiveqm::nogo::KsCheckReport,
            }
            to_json_bytes(&Demo {
                num_assignments: search.num_assignments,
                satisfying_count: search.satisfying.len(),
                min_violations: search.min_violations,
                check,
            })
            .map_err(|e| Error::Internal(format!("serialization error: {e}")))
        });
    match result {
        Ok(bytes) => into_c_string(bytes),
        Err(e) => {
            fail(&e);
            std::ptr::null_mut()
        }
    }
}

//! C ABI for the catebench workbench.
//!
//! Conventions:
//!
//! - Complex values live behind opaque handles (`CbExperiment`, `CbModel`);
//!   every constructor has a matching `*_free`, and the caller owns the
//!   handle in between.
//! - Functions return a [`CbStatus`] code; on any non-OK status the
//!   thread-local error message is readable via [`cb_last_error`].
//! - Strings are NUL-terminated UTF-8.
//!
//! The generated header lives at `include/catebench.h`.
//!
//! Callers own the usual FFI obligations: pointers must be valid for the
//! stated lengths and handles must not be used after `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::path::PathBuf;

use catebench::data::ExperimentData;
use catebench::dgp::{DgpKind, DgpSpec};
use catebench::harness::{cate_mse, fit_method_model, MethodSpec};
use catebench::learners::CateModel;
use catebench::matrix::Matrix;

/// Result code of every fallible C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RuntimeError = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: CbStatus, msg: impl Into<String>) -> CbStatus {
    set_error(msg);
    status
}

/// One experiment's data behind an opaque pointer.
pub struct CbExperiment(ExperimentData);

/// A fitted CATE model behind an opaque pointer.
pub struct CbModel(CateModel);

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf` (truncated to
/// `len - 1` bytes, always NUL-terminated) and returns the full message
/// length in bytes. Call with `buf == NULL` to query the length.
#[no_mangle]
pub unsafe extern "C" fn cb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn cstr_arg(ptr: *const c_char, what: &str) -> Result<String, CbStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(CbStatus::NullPointer);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(|s| s.to_string())
        .map_err(|_| {
            set_error(format!("{what} is not valid UTF-8"));
            CbStatus::InvalidArgument
        })
}

/// Generates one experiment from a named data-generating process.
///
/// `dgp` is one of: semi-synth-v1, semi-synth-v2, sim-lm, sim-rf, sim-rft,
/// mnist (synthetic images). On success `*out` owns the new handle.
#[no_mangle]
pub unsafe extern "C" fn cb_experiment_simulate(
    dgp: *const c_char,
    n_units: usize,
    seed: u64,
    out: *mut *mut CbExperiment,
) -> CbStatus {
    if out.is_null() {
        return fail(CbStatus::NullPointer, "out is NULL");
    }
    let kind = match cstr_arg(dgp, "dgp") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let kind = match DgpKind::parse(&kind) {
        Ok(k) => k,
        Err(e) => return fail(CbStatus::InvalidArgument, e.to_string()),
    };
    let spec = DgpSpec::new(kind, n_units, 1, seed);
    match spec.generate_experiment(0) {
        Ok(data) => {
            *out = Box::into_raw(Box::new(CbExperiment(data)));
            CbStatus::Ok
        }
        Err(e) => fail(CbStatus::RuntimeError, e.to_string()),
    }
}

/// Reads an experiment from the columnar CSV format.
#[no_mangle]
pub unsafe extern "C" fn cb_experiment_read_csv(
    path: *const c_char,
    out: *mut *mut CbExperiment,
) -> CbStatus {
    if out.is_null() {
        return fail(CbStatus::NullPointer, "out is NULL");
    }
    let path = match cstr_arg(path, "path") {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    match ExperimentData::read_csv(&path) {
        Ok(data) => {
            *out = Box::into_raw(Box::new(CbExperiment(data)));
            CbStatus::Ok
        }
        Err(e) => fail(CbStatus::RuntimeError, e.to_string()),
    }
}

/// Writes an experiment to the columnar CSV format; set `with_truth` only
/// when the experiment carries ground-truth surfaces.
#[no_mangle]
pub unsafe extern "C" fn cb_experiment_write_csv(
    exp: *const CbExperiment,
    path: *const c_char,
    with_truth: bool,
) -> CbStatus {
    let Some(exp) = exp.as_ref() else {
        return fail(CbStatus::NullPointer, "experiment is NULL");
    };
    let path = match cstr_arg(path, "path") {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    match exp.0.write_csv(&path, with_truth) {
        Ok(()) => CbStatus::Ok,
        Err(e) => fail(CbStatus::RuntimeError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cb_experiment_n_units(exp: *const CbExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.0.n_units())
}

#[no_mangle]
pub unsafe extern "C" fn cb_experiment_n_features(exp: *const CbExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.0.n_features())
}

#[no_mangle]
pub unsafe extern "C" fn cb_experiment_treated_count(exp: *const CbExperiment) -> usize {
    exp.as_ref()
        .map_or(0, |e| e.0.w.iter().map(|&w| w as usize).sum())
}

/// Copies the true CATE vector into `out` (length `cb_experiment_n_units`).
/// Fails when the experiment has no attached truth.
#[no_mangle]
pub unsafe extern "C" fn cb_experiment_true_tau(
    exp: *const CbExperiment,
    out: *mut f64,
) -> CbStatus {
    let Some(exp) = exp.as_ref() else {
        return fail(CbStatus::NullPointer, "experiment is NULL");
    };
    if out.is_null() {
        return fail(CbStatus::NullPointer, "out is NULL");
    }
    match &exp.0.truth {
        Some(t) => {
            std::ptr::copy_nonoverlapping(t.tau.as_ptr(), out, t.tau.len());
            CbStatus::Ok
        }
        None => fail(CbStatus::InvalidArgument, "experiment has no truth"),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cb_experiment_free(exp: *mut CbExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Fits a single-experiment learner. `method` is a learner id (t-nn, s-nn,
/// y-nn, x-nn, t-lm, s-rf, t-rf); `max_steps` of 0 keeps the default
/// optimizer budget. On success `*out` owns the fitted model.
#[no_mangle]
pub unsafe extern "C" fn cb_fit(
    exp: *const CbExperiment,
    method: *const c_char,
    seed: u64,
    max_steps: usize,
    out: *mut *mut CbModel,
) -> CbStatus {
    let Some(exp) = exp.as_ref() else {
        return fail(CbStatus::NullPointer, "experiment is NULL");
    };
    if out.is_null() {
        return fail(CbStatus::NullPointer, "out is NULL");
    }
    let method = match cstr_arg(method, "method") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let mut spec = match MethodSpec::parse(&method) {
        Ok(m) => m,
        Err(e) => return fail(CbStatus::InvalidArgument, e.to_string()),
    };
    if spec.transfer.is_some() {
        return fail(
            CbStatus::InvalidArgument,
            "transfer strategies need collections; fit single-experiment learners here",
        );
    }
    if max_steps > 0 {
        spec.max_steps = Some(max_steps);
    }
    match fit_method_model(&spec, &exp.0, seed) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(CbModel(model)));
            CbStatus::Ok
        }
        Err(e) => fail(CbStatus::RuntimeError, e.to_string()),
    }
}

/// Predicts CATE for `n_rows` units of `n_cols` features held row-major in
/// `features`, writing `n_rows` values to `out`.
#[no_mangle]
pub unsafe extern "C" fn cb_model_predict_tau(
    model: *const CbModel,
    features: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> CbStatus {
    let Some(model) = model.as_ref() else {
        return fail(CbStatus::NullPointer, "model is NULL");
    };
    if features.is_null() || out.is_null() {
        return fail(CbStatus::NullPointer, "features/out is NULL");
    }
    if n_rows == 0 || n_cols == 0 {
        return fail(CbStatus::InvalidArgument, "empty feature matrix");
    }
    let data = std::slice::from_raw_parts(features, n_rows * n_cols).to_vec();
    let x = match Matrix::from_vec(n_rows, n_cols, data) {
        Ok(m) => m,
        Err(e) => return fail(CbStatus::InvalidArgument, e.to_string()),
    };
    match model.0.predict_tau(&x) {
        Ok(tau) => {
            std::ptr::copy_nonoverlapping(tau.as_ptr(), out, n_rows);
            CbStatus::Ok
        }
        Err(e) => fail(CbStatus::RuntimeError, e.to_string()),
    }
}

/// Serializes the model as JSON to `path`.
#[no_mangle]
pub unsafe extern "C" fn cb_model_save_json(
    model: *const CbModel,
    path: *const c_char,
) -> CbStatus {
    let Some(model) = model.as_ref() else {
        return fail(CbStatus::NullPointer, "model is NULL");
    };
    let path = match cstr_arg(path, "path") {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    let json = match serde_json_string(&model.0) {
        Ok(j) => j,
        Err(e) => return fail(CbStatus::RuntimeError, e),
    };
    match std::fs::write(&path, json) {
        Ok(()) => CbStatus::Ok,
        Err(e) => fail(CbStatus::RuntimeError, e.to_string()),
    }
}

fn serde_json_string(model: &CateModel) -> Result<String, String> {
    // serde_json comes in through the core crate; avoid a direct dependency.
    catebench::learners::model_to_json(model).map_err(|e| e.to_string())
}

#[no_mangle]
pub unsafe extern "C" fn cb_model_free(model: *mut CbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Mean squared error between two CATE vectors of length `len`.
#[no_mangle]
pub unsafe extern "C" fn cb_cate_mse(
    tau_hat: *const f64,
    tau_true: *const f64,
    len: usize,
    out: *mut f64,
) -> CbStatus {
    if tau_hat.is_null() || tau_true.is_null() || out.is_null() {
        return fail(CbStatus::NullPointer, "tau_hat/tau_true/out is NULL");
    }
    let a = std::slice::from_raw_parts(tau_hat, len);
    let b = std::slice::from_raw_parts(tau_true, len);
    match cate_mse(a, b) {
        Ok(v) => {
            *out = v;
            CbStatus::Ok
        }
        Err(e) => fail(CbStatus::InvalidArgument, e.to_string()),
    }
}

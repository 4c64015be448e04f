//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers and status codes.

use std::ffi::{CStr, CString};

use catebench_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0i8; 512];
    unsafe {
        cb_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(cb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn simulate_fit_predict_and_score_through_the_c_surface() {
    let dgp = CString::new("sim-lm").unwrap();
    let mut exp: *mut CbExperiment = std::ptr::null_mut();
    let status = unsafe { cb_experiment_simulate(dgp.as_ptr(), 300, 7, &mut exp) };
    assert_eq!(status, CbStatus::Ok, "{}", last_error());
    assert!(!exp.is_null());

    let n = unsafe { cb_experiment_n_units(exp) };
    let d = unsafe { cb_experiment_n_features(exp) };
    assert_eq!(n, 300);
    assert_eq!(d, 11);
    let treated = unsafe { cb_experiment_treated_count(exp) };
    assert!(treated > 0 && treated < n);

    let method = CString::new("t-lm").unwrap();
    let mut model: *mut CbModel = std::ptr::null_mut();
    let status = unsafe { cb_fit(exp, method.as_ptr(), 3, 2000, &mut model) };
    assert_eq!(status, CbStatus::Ok, "{}", last_error());

    // Predict on a zero feature row: sim-lm surfaces agree at x = 0, so the
    // estimate should be small after any reasonable fit.
    let features = vec![0.0f64; d];
    let mut tau = vec![f64::NAN; 1];
    let status =
        unsafe { cb_model_predict_tau(model, features.as_ptr(), 1, d, tau.as_mut_ptr()) };
    assert_eq!(status, CbStatus::Ok, "{}", last_error());
    assert!(tau[0].is_finite());

    let mut true_tau = vec![0.0f64; n];
    let status = unsafe { cb_experiment_true_tau(exp, true_tau.as_mut_ptr()) };
    assert_eq!(status, CbStatus::Ok);

    let mut mse = f64::NAN;
    let status = unsafe {
        cb_cate_mse(
            true_tau.as_ptr(),
            true_tau.as_ptr(),
            n,
            &mut mse as *mut f64,
        )
    };
    assert_eq!(status, CbStatus::Ok);
    assert_eq!(mse, 0.0);

    unsafe {
        cb_model_free(model);
        cb_experiment_free(exp);
    }
}

#[test]
fn csv_round_trip_through_the_c_surface() {
    let dir = std::env::temp_dir().join("catebench_ffi_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("exp.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let dgp = CString::new("mnist").unwrap();
    let mut exp: *mut CbExperiment = std::ptr::null_mut();
    let status = unsafe { cb_experiment_simulate(dgp.as_ptr(), 50, 1, &mut exp) };
    assert_eq!(status, CbStatus::Ok, "{}", last_error());

    let status = unsafe { cb_experiment_write_csv(exp, cpath.as_ptr(), true) };
    assert_eq!(status, CbStatus::Ok, "{}", last_error());

    let mut back: *mut CbExperiment = std::ptr::null_mut();
    let status = unsafe { cb_experiment_read_csv(cpath.as_ptr(), &mut back) };
    assert_eq!(status, CbStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { cb_experiment_n_units(back) }, 50);
    assert_eq!(unsafe { cb_experiment_n_features(back) }, 49);

    unsafe {
        cb_experiment_free(exp);
        cb_experiment_free(back);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut exp: *mut CbExperiment = std::ptr::null_mut();
    let bad = CString::new("not-a-dgp").unwrap();
    let status = unsafe { cb_experiment_simulate(bad.as_ptr(), 10, 0, &mut exp) };
    assert_eq!(status, CbStatus::InvalidArgument);
    assert!(last_error().contains("unknown dgp"));

    let status = unsafe { cb_experiment_simulate(std::ptr::null(), 10, 0, &mut exp) };
    assert_eq!(status, CbStatus::NullPointer);

    // Transfer methods are rejected by cb_fit.
    let dgp = CString::new("sim-lm").unwrap();
    let status = unsafe { cb_experiment_simulate(dgp.as_ptr(), 60, 2, &mut exp) };
    assert_eq!(status, CbStatus::Ok);
    let method = CString::new("t-nn/frozen").unwrap();
    let mut model: *mut CbModel = std::ptr::null_mut();
    let status = unsafe { cb_fit(exp, method.as_ptr(), 0, 50, &mut model) };
    assert_eq!(status, CbStatus::InvalidArgument);
    assert!(model.is_null());
    unsafe { cb_experiment_free(exp) };
}

#[test]
fn generated_header_exists_and_declares_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/catebench.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for symbol in [
        "cb_version",
        "cb_last_error",
        "cb_experiment_simulate",
        "cb_experiment_read_csv",
        "cb_experiment_write_csv",
        "cb_experiment_true_tau",
        "cb_fit",
        "cb_model_predict_tau",
        "cb_model_save_json",
        "cb_cate_mse",
        "CbStatus",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}

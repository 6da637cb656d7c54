use std::ffi::{c_char, CString};
use std::ptr;

use gpn_ffi::*;

fn last_error() -> String {
    let n = unsafe { gpn_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; n];
    unsafe { gpn_last_error_message(buf.as_mut_ptr().cast::<c_char>(), n) };
    buf.pop();
    String::from_utf8(buf).unwrap()
}

fn model_normal(s1: f64, s2: f64, rho: f64) -> *mut GpnModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gpn_model_normal(s1, s2, rho, &mut m) }, GpnStatus::Ok);
    m
}

fn estimator(m: *const GpnModel, comp: u8, name: &str, nu: f64) -> Result<*mut GpnEstimator, GpnStatus> {
    let name = CString::new(name).unwrap();
    let mut e = ptr::null_mut();
    match unsafe { gpn_estimator_lookup(m, comp, name.as_ptr(), nu, &mut e) } {
        GpnStatus::Ok => Ok(e),
        s => Err(s),
    }
}

fn name_of(e: *const GpnEstimator) -> String {
    let mut buf = [0 as c_char; 64];
    let n = unsafe { gpn_estimator_name(e, buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n - 1].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn special_functions() {
    let mut v = 0.0;
    assert_eq!(unsafe { gpn_gamma_median(1.0, &mut v) }, GpnStatus::Ok);
    assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(unsafe { gpn_regularized_gamma_p(1.0, std::f64::consts::LN_2, &mut v) }, GpnStatus::Ok);
    assert!((v - 0.5).abs() < 1e-14);
    assert_eq!(unsafe { gpn_normal_quantile(0.975, &mut v) }, GpnStatus::Ok);
    assert!((v - 1.959964).abs() < 1e-6);
    assert!((gpn_normal_cdf(v) - 0.975).abs() < 1e-12);

    assert_eq!(unsafe { gpn_normal_quantile(1.5, &mut v) }, GpnStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { gpn_gamma_median(-1.0, &mut v) }, GpnStatus::Domain);
    assert_eq!(unsafe { gpn_gamma_median(1.0, ptr::null_mut()) }, GpnStatus::NullPointer);
    assert_eq!(unsafe { gpn_gamma_median(2.0, &mut v) }, GpnStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn models_and_errors() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gpn_model_normal(-1.0, 1.0, 0.0, &mut m) }, GpnStatus::Domain);
    assert!(m.is_null());
    assert!(last_error().contains("sigma1"), "{}", last_error());

    let json = CString::new(r#"{"name":"gamma","alpha1":1,"alpha2":2}"#).unwrap();
    assert_eq!(unsafe { gpn_model_from_json(json.as_ptr(), &mut m) }, GpnStatus::Ok);
    let mut kind = GpnProblemKind::Location;
    assert_eq!(unsafe { gpn_model_kind(m, &mut kind) }, GpnStatus::Ok);
    assert_eq!(kind, GpnProblemKind::Scale);
    let mut med = 0.0;
    let mut p = 0.0;
    assert_eq!(unsafe { gpn_model_cond_median(m, 2, 1.5, 0.8, &mut med) }, GpnStatus::Ok);
    assert_eq!(unsafe { gpn_model_cond_cdf(m, 2, 1.5, 0.8, med, &mut p) }, GpnStatus::Ok);
    assert!((p - 0.5).abs() < 1e-10);
    assert_eq!(unsafe { gpn_model_d_density(m, 1.5, 0.8, &mut p) }, GpnStatus::Ok);
    assert!(p > 0.0);
    assert_eq!(unsafe { gpn_model_cond_median(m, 3, 1.5, 0.8, &mut med) }, GpnStatus::Domain);
    assert_eq!(unsafe { gpn_model_d_density(ptr::null(), 1.0, 1.0, &mut p) }, GpnStatus::NullPointer);
    unsafe { gpn_model_free(m) };

    let bad = CString::new(r#"{"name":"gamma","alpha1":1}"#).unwrap();
    assert_eq!(unsafe { gpn_model_from_json(bad.as_ptr(), &mut m) }, GpnStatus::Domain);
    assert_eq!(unsafe { gpn_model_from_json(ptr::null(), &mut m) }, GpnStatus::NullPointer);
    unsafe { gpn_model_free(ptr::null_mut()) };
}

#[test]
fn estimators_and_gpn() {
    let m = model_normal(3.0, 0.5, -0.9);
    let rmle = estimator(m, 1, "rmle", f64::NAN).unwrap();
    let pnlee = estimator(m, 1, "pnlee", f64::NAN).unwrap();
    assert_eq!(name_of(rmle), "rmle");

    let mut clamped = ptr::null_mut();
    assert_eq!(unsafe { gpn_estimator_clamp(m, pnlee, &mut clamped) }, GpnStatus::Ok);
    assert_eq!(name_of(clamped), "pnlee_star");
    let (mut a, mut b) = (0.0, 0.0);
    for t in [-3.0, -0.5, 0.0, 2.0] {
        unsafe {
            gpn_estimator_psi(clamped, t, &mut a);
            gpn_estimator_psi(rmle, t, &mut b);
        }
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(unsafe { gpn_estimator_evaluate(pnlee, 1.25, 4.0, &mut a) }, GpnStatus::Ok);
    assert_eq!(a, 1.25);

    let mut r = GpnResult::default();
    let st = unsafe { gpn_monte_carlo(m, rmle, pnlee, 0.0, GpnLoss::LocationAbs as i32, 100_000, 42, &mut r) };
    assert_eq!(st, GpnStatus::Ok);
    assert!((r.estimate - 0.743).abs() < 0.02, "{r:?}");
    assert!((r.estimate - (r.win_fraction + r.tie_fraction / 2.0)).abs() < 1e-15);
    let mut o = 0.0;
    assert_eq!(unsafe { gpn_oracle(m, rmle, pnlee, 0.0, GpnLoss::LocationAbs as i32, &mut o) }, GpnStatus::Ok);
    assert!((o - r.estimate).abs() < 4.0 * r.std_error);

    assert_eq!(
        unsafe { gpn_oracle(m, rmle, pnlee, 0.0, GpnLoss::LocationSquared as i32, &mut o) },
        GpnStatus::Unsupported
    );
    assert_eq!(unsafe { gpn_oracle(m, rmle, pnlee, 0.0, 17, &mut o) }, GpnStatus::Domain);
    assert_eq!(
        unsafe { gpn_oracle(m, rmle, pnlee, 0.0, GpnLoss::ScaleAbs as i32, &mut o) },
        GpnStatus::InvalidTask
    );
    assert_eq!(unsafe { gpn_oracle(m, rmle, pnlee, -1.0, GpnLoss::LocationAbs as i32, &mut o) }, GpnStatus::Domain);

    let second = estimator(m, 2, "pnlee", f64::NAN).unwrap();
    assert_eq!(
        unsafe { gpn_monte_carlo(m, rmle, second, 0.0, GpnLoss::LocationAbs as i32, 10, 1, &mut r) },
        GpnStatus::InvalidTask
    );

    assert_eq!(estimator(m, 1, "foo", f64::NAN).unwrap_err(), GpnStatus::UnknownEstimator);
    assert!(last_error().contains("pnlee"));

    let m2 = model_normal(0.5, 5.0, 0.9);
    let fam = estimator(m2, 1, "psi_nu_hp", 1.05).unwrap();
    assert_eq!(name_of(fam), "psi_nu_hp[nu=1.05]");
    assert_eq!(estimator(m2, 1, "psi_nu_hp", 7.0).unwrap_err(), GpnStatus::Domain);

    unsafe {
        for e in [rmle, pnlee, clamped, second, fam] {
            gpn_estimator_free(e);
        }
        gpn_estimator_free(ptr::null_mut());
        gpn_model_free(m);
        gpn_model_free(m2);
    }
}

#[test]
fn name_truncates_and_reports_size() {
    let m = model_normal(1.0, 1.0, 0.0);
    let e = estimator(m, 1, "pnlee_star", f64::NAN).unwrap();
    let mut buf = [0x7f as c_char; 4];
    let need = unsafe { gpn_estimator_name(e, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(need, "pnlee_star".len() + 1);
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { gpn_estimator_name(ptr::null(), buf.as_mut_ptr(), 4) }, 0);
    unsafe {
        gpn_estimator_free(e);
        gpn_model_free(m);
    }
}

#[test]
fn errors_are_thread_local() {
    let mut v = 0.0;
    assert_eq!(unsafe { gpn_gamma_median(-1.0, &mut v) }, GpnStatus::Domain);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

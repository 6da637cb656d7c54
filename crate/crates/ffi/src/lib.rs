//! C ABI over `gpn-core`.
//!
//! Models and estimators are opaque heap handles released with their
//! `*_free` function. Fallible calls return a [`GpnStatus`] and write their
//! result through an out-pointer; on failure the message is available from
//! [`gpn_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gpn_core::estimators::{self, Estimator, LossFn};
use gpn_core::gpn::{self as engine, ComparisonTask};
use gpn_core::models::{
    BivariateNormalSpec, Component, ExpLocationSpec, GammaScaleSpec, ModelSpec, PowerScaleSpec,
    ProblemKind, RestrictedParams,
};
use gpn_core::{specfun, GpnError};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Convergence = 4,
    KindMismatch = 5,
    Unsupported = 6,
    UnknownEstimator = 7,
    InvalidTask = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpnProblemKind {
    Location = 0,
    Scale = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpnLoss {
    LocationAbs = 0,
    LocationSquared = 1,
    ScaleAbs = 2,
    ScaleSquared = 3,
}

fn loss_from(code: i32) -> Result<LossFn, Failure> {
    Ok(match code {
        c if c == GpnLoss::LocationAbs as i32 => LossFn::LocationAbs,
        c if c == GpnLoss::LocationSquared as i32 => LossFn::LocationSquared,
        c if c == GpnLoss::ScaleAbs as i32 => LossFn::ScaleAbs,
        c if c == GpnLoss::ScaleSquared as i32 => LossFn::ScaleSquared,
        c => return Err(Failure(GpnStatus::Domain, format!("unknown loss code {c}"))),
    })
}

/// Monte Carlo result; `estimate = win_fraction + tie_fraction / 2`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GpnResult {
    pub estimate: f64,
    pub win_fraction: f64,
    pub tie_fraction: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Opaque model handle.
pub struct GpnModel {
    spec: ModelSpec,
}

/// Opaque estimator handle.
pub struct GpnEstimator {
    inner: Estimator,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &GpnError) -> GpnStatus {
    match e {
        GpnError::Domain(_) => GpnStatus::Domain,
        GpnError::Convergence { .. } => GpnStatus::Convergence,
        GpnError::KindMismatch(_) => GpnStatus::KindMismatch,
        GpnError::Unsupported(_) => GpnStatus::Unsupported,
        GpnError::UnknownEstimator { .. } => GpnStatus::UnknownEstimator,
        GpnError::InvalidTask(_) => GpnStatus::InvalidTask,
    }
}

struct Failure(GpnStatus, String);

impl From<GpnError> for Failure {
    fn from(e: GpnError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GpnStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, records any error or panic, and stores the value through `out`.
fn guard<T>(out: *mut T, f: impl FnOnce() -> Result<T, Failure>) -> GpnStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return GpnStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            // SAFETY: `out` is non-null and the caller guarantees it is writable.
            unsafe { out.write(v) };
            set_error("");
            GpnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GpnStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(m: *const GpnModel) -> Result<&'a ModelSpec, Failure> {
    m.as_ref().map(|m| &m.spec).ok_or_else(|| null("model"))
}

unsafe fn estimator_ref<'a>(e: *const GpnEstimator) -> Result<&'a Estimator, Failure> {
    e.as_ref().map(|e| &e.inner).ok_or_else(|| null("estimator"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(GpnStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

fn component(c: u8) -> Result<Component, Failure> {
    Ok(Component::from_index(c)?)
}

/// Copies `s` plus a NUL into `buf` (truncating to `len`) and returns the
/// buffer size needed for the full string.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize) -> usize {
    let bytes = s.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
    }
    bytes.len() + 1
}

/// Copies the calling thread's last error message into `buf` and returns the
/// size needed, including the NUL. An empty message means the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gpn_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, len))
}

// ---- special functions ----

#[no_mangle]
pub extern "C" fn gpn_normal_cdf(z: f64) -> f64 {
    specfun::normal_cdf(z)
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_normal_quantile(p: f64, out: *mut f64) -> GpnStatus {
    guard(out, || Ok(specfun::normal_quantile(p)?))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_regularized_gamma_p(alpha: f64, x: f64, out: *mut f64) -> GpnStatus {
    guard(out, || Ok(specfun::regularized_gamma_p(alpha, x)?))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_gamma_median(alpha: f64, out: *mut f64) -> GpnStatus {
    guard(out, || Ok(specfun::gamma_median(alpha)?))
}

// ---- models ----

fn boxed(spec: ModelSpec) -> *mut GpnModel {
    Box::into_raw(Box::new(GpnModel { spec }))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_normal(sigma1: f64, sigma2: f64, rho: f64, out: *mut *mut GpnModel) -> GpnStatus {
    guard(out, || Ok(boxed(ModelSpec::Normal(BivariateNormalSpec::new(sigma1, sigma2, rho)?))))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_exponential(sigma1: f64, sigma2: f64, out: *mut *mut GpnModel) -> GpnStatus {
    guard(out, || Ok(boxed(ModelSpec::Exponential(ExpLocationSpec::new(sigma1, sigma2)?))))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_gamma(alpha1: f64, alpha2: f64, out: *mut *mut GpnModel) -> GpnStatus {
    guard(out, || Ok(boxed(ModelSpec::Gamma(GammaScaleSpec::new(alpha1, alpha2)?))))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_power(alpha1: f64, alpha2: f64, out: *mut *mut GpnModel) -> GpnStatus {
    guard(out, || Ok(boxed(ModelSpec::Power(PowerScaleSpec::new(alpha1, alpha2)?))))
}

/// Parses a model from its JSON form, e.g. `{"name":"gamma","alpha1":1,"alpha2":2}`.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_from_json(json: *const c_char, out: *mut *mut GpnModel) -> GpnStatus {
    guard(out, || {
        let text = str_arg(json, "json")?;
        let spec: ModelSpec = serde_json::from_str(text)
            .map_err(|e| Failure(GpnStatus::Domain, format!("invalid model JSON: {e}")))?;
        spec.validate()?;
        Ok(boxed(spec))
    })
}

/// # Safety
/// `model` must be null or a handle from a `gpn_model_*` constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_free(model: *mut GpnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_kind(model: *const GpnModel, out: *mut GpnProblemKind) -> GpnStatus {
    guard(out, || {
        Ok(match model_ref(model)?.kind() {
            ProblemKind::Location => GpnProblemKind::Location,
            ProblemKind::Scale => GpnProblemKind::Scale,
        })
    })
}

/// Median of Z_component given D = t at gap `lambda`.
///
/// # Safety
/// `model` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_cond_median(
    model: *const GpnModel,
    component: u8,
    lambda: f64,
    t: f64,
    out: *mut f64,
) -> GpnStatus {
    guard(out, || Ok(model_ref(model)?.cond_median(self::component(component)?, lambda, t)?))
}

/// P[Z_component <= s | D = t] at gap `lambda`.
///
/// # Safety
/// `model` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_cond_cdf(
    model: *const GpnModel,
    component: u8,
    lambda: f64,
    t: f64,
    s: f64,
    out: *mut f64,
) -> GpnStatus {
    guard(out, || Ok(model_ref(model)?.cond_cdf(self::component(component)?, lambda, t, s)?))
}

/// # Safety
/// `model` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_model_d_density(model: *const GpnModel, lambda: f64, t: f64, out: *mut f64) -> GpnStatus {
    guard(out, || Ok(model_ref(model)?.d_density(lambda, t)?))
}

// ---- estimators ----

/// Looks up a catalog estimator for `component` (1 or 2). Pass NaN as `nu`
/// for names outside the ν families.
///
/// # Safety
/// `model` must be a live handle, `name` a NUL-terminated string and `out`
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_estimator_lookup(
    model: *const GpnModel,
    component: u8,
    name: *const c_char,
    nu: f64,
    out: *mut *mut GpnEstimator,
) -> GpnStatus {
    guard(out, || {
        let spec = model_ref(model)?;
        let name = str_arg(name, "name")?;
        let nu = (!nu.is_nan()).then_some(nu);
        let inner = estimators::lookup(spec, self::component(component)?, name, nu)?;
        Ok(Box::into_raw(Box::new(GpnEstimator { inner })))
    })
}

/// Clamp-improves `base` with the model's default bounds.
///
/// # Safety
/// `model` and `base` must be live handles; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_estimator_clamp(
    model: *const GpnModel,
    base: *const GpnEstimator,
    out: *mut *mut GpnEstimator,
) -> GpnStatus {
    guard(out, || {
        let spec = model_ref(model)?;
        let base = estimator_ref(base)?;
        let bounds = estimators::default_bounds(spec, base.target())?;
        let inner = estimators::clamp(base, &bounds)?;
        Ok(Box::into_raw(Box::new(GpnEstimator { inner })))
    })
}

/// # Safety
/// `estimator` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpn_estimator_free(estimator: *mut GpnEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// Copies the estimator's label into `buf`; returns the size needed including the NUL,
/// or 0 when `estimator` is null.
///
/// # Safety
/// `estimator` must be null or a live handle; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gpn_estimator_name(estimator: *const GpnEstimator, buf: *mut c_char, len: usize) -> usize {
    match estimator.as_ref() {
        Some(e) => copy_out(&e.inner.label(), buf, len),
        None => 0,
    }
}

/// # Safety
/// `estimator` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_estimator_psi(estimator: *const GpnEstimator, t: f64, out: *mut f64) -> GpnStatus {
    guard(out, || Ok(estimator_ref(estimator)?.psi(t)))
}

/// Estimate of the estimator's target parameter from the observation (x1, x2).
///
/// # Safety
/// `estimator` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_estimator_evaluate(
    estimator: *const GpnEstimator,
    x1: f64,
    x2: f64,
    out: *mut f64,
) -> GpnStatus {
    guard(out, || {
        Ok(estimator_ref(estimator)?.evaluate(&gpn_core::models::Observation::new(x1, x2)))
    })
}

// ---- GPN ----

unsafe fn task(
    model: *const GpnModel,
    candidate: *const GpnEstimator,
    reference: *const GpnEstimator,
    gap: f64,
    loss: i32,
    n_samples: u64,
    seed: u64,
) -> Result<ComparisonTask, Failure> {
    let spec = *model_ref(model)?;
    let params = RestrictedParams::from_gap(spec.kind(), gap)?;
    spec.check_gap(gap)?;
    Ok(ComparisonTask::new(
        spec,
        params,
        estimator_ref(candidate)?.clone(),
        estimator_ref(reference)?.clone(),
        loss_from(loss)?,
        n_samples,
        seed,
    )?)
}

/// Monte Carlo GPN of `candidate` relative to `reference` at gap θ2 − θ1
/// (location) or θ2/θ1 (scale). `loss` is a `GpnLoss` value.
///
/// # Safety
/// Handles must be live; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_monte_carlo(
    model: *const GpnModel,
    candidate: *const GpnEstimator,
    reference: *const GpnEstimator,
    gap: f64,
    loss: i32,
    n_samples: u64,
    seed: u64,
    out: *mut GpnResult,
) -> GpnStatus {
    guard(out, || {
        let t = task(model, candidate, reference, gap, loss, n_samples, seed)?;
        let r = engine::gpn_monte_carlo(&t)?;
        Ok(GpnResult {
            estimate: r.estimate,
            win_fraction: r.win_fraction,
            tie_fraction: r.tie_fraction,
            std_error: r.std_error,
            n_samples: r.n_samples,
            seed: r.seed,
        })
    })
}

/// Deterministic quadrature GPN; `loss` must be an absolute-error `GpnLoss`.
///
/// # Safety
/// Handles must be live; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gpn_oracle(
    model: *const GpnModel,
    candidate: *const GpnEstimator,
    reference: *const GpnEstimator,
    gap: f64,
    loss: i32,
    out: *mut f64,
) -> GpnStatus {
    guard(out, || {
        let t = task(model, candidate, reference, gap, loss, 1, 0)?;
        Ok(engine::gpn_oracle(&t)?)
    })
}

//! C ABI for lifeboot.
//!
//! Objects are opaque handles created by `lb_*_new`/`lb_fit`/`lb_bootstrap`
//! and released with the matching `lb_*_free`. Every fallible call returns an
//! [`LbStatus`]; on failure `lb_last_error_message` describes the error
//! (thread-local, valid until the next failing call on the same thread).
//! Parameters are addressed by index in the family's reporting order:
//! Weibull (eta, beta), lognormal (mu, sigma), generalized gamma
//! (mu, sigma, lambda).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lifeboot::bootstrap::{bc_percentile_interval, percentile_interval, run_bootstrap, BootstrapOptions, BootstrapRun};
use lifeboot::io::{parse_lifedata, parse_lifedata_str};
use lifeboot::rng::StreamRng;
use lifeboot::{
    fit_ml, gen_weights, prob_degenerate_resample, wald_interval, Error, Family, FitOptions, FitResult, Observation,
    WeightScheme,
};

/// Result codes; the nonzero values match the CLI exit codes where they
/// overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbStatus {
    Ok = 0,
    /// A required pointer was null or a buffer too small.
    NullOrBuffer = 1,
    Input = 2,
    Numeric = 3,
    Pathology = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbFamily {
    Weibull = 0,
    Lognormal = 1,
    GenGamma = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbScheme {
    Multinomial = 0,
    Dirichlet = 1,
    Exponential = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbKind {
    Exact = 0,
    Right = 1,
    Left = 2,
    Interval = 3,
}

fn family_of(v: i32) -> Result<Family, LbStatus> {
    match v {
        x if x == LbFamily::Weibull as i32 => Ok(Family::Weibull),
        x if x == LbFamily::Lognormal as i32 => Ok(Family::Lognormal),
        x if x == LbFamily::GenGamma as i32 => Ok(Family::GenGamma),
        _ => Err(fail(Error::InvalidInput(format!("unknown family code {v}")))),
    }
}

fn scheme_of(v: i32) -> Result<WeightScheme, LbStatus> {
    match v {
        x if x == LbScheme::Multinomial as i32 => Ok(WeightScheme::MultinomialInteger),
        x if x == LbScheme::Dirichlet as i32 => Ok(WeightScheme::DirichletFractional),
        x if x == LbScheme::Exponential as i32 => Ok(WeightScheme::IidExponential),
        _ => Err(fail(Error::InvalidInput(format!("unknown weight scheme code {v}")))),
    }
}

/// Life data.
pub struct LbDataset {
    obs: Vec<Observation>,
}

/// A maximum-likelihood fit.
pub struct LbFit {
    fit: FitResult,
}

/// A bootstrap run.
pub struct LbRun {
    run: BootstrapRun,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: Error) -> LbStatus {
    set_error(&format!("{}: {e}", e.code()));
    match e.exit_code() {
        2 => LbStatus::Input,
        3 => LbStatus::Numeric,
        _ => LbStatus::Pathology,
    }
}

fn null(what: &str) -> LbStatus {
    set_error(&format!("E_NULL: {what}"));
    LbStatus::NullOrBuffer
}

/// Runs `f`, converting panics into `LbStatus::Internal`.
fn guard(f: impl FnOnce() -> LbStatus) -> LbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("E_INTERNAL: panic in lifeboot");
            LbStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Option<&'a [T]> {
    if n == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

/// Message describing the most recent failure on this thread, as
/// "CODE: text". Never null.
#[no_mangle]
pub extern "C" fn lb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from parallel arrays of length `n`; `kind` holds
/// `LbKind` codes. `time2` (interval upper ends) and `trunc_lower` may be
/// null; NaN entries mean "absent". `count` may be null (all ones).
///
/// # Safety
/// Non-null array pointers must reference `n` readable elements; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_dataset_new(
    time: *const f64,
    time2: *const f64,
    kind: *const i32,
    trunc_lower: *const f64,
    count: *const u32,
    n: usize,
    out: *mut *mut LbDataset,
) -> LbStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let (Some(time), Some(kind)) = (slice(time, n), slice(kind, n)) else {
            return null("time or kind");
        };
        let time2 = if time2.is_null() { None } else { slice(time2, n) };
        let trunc = if trunc_lower.is_null() { None } else { slice(trunc_lower, n) };
        let count = if count.is_null() { None } else { slice(count, n) };
        let mut obs = Vec::with_capacity(n);
        for i in 0..n {
            let mut o = match kind[i] {
                k if k == LbKind::Exact as i32 => Observation::exact(time[i]),
                k if k == LbKind::Right as i32 => Observation::right(time[i]),
                k if k == LbKind::Left as i32 => Observation::left(time[i]),
                k if k == LbKind::Interval as i32 => Observation::interval(time[i], time2.map_or(f64::NAN, |t| t[i])),
                k => return fail(Error::InvalidInput(format!("row {}: unknown kind code {k}", i + 1))),
            };
            if let Some(c) = count {
                o = o.with_count(c[i]);
            }
            if let Some(t) = trunc.map(|t| t[i]).filter(|t| !t.is_nan()) {
                o = o.truncated_at(t);
            }
            if let Err(e) = o.validate() {
                return fail(Error::InvalidInput(format!("row {}: {e}", i + 1)));
            }
            obs.push(o);
        }
        *out = Box::into_raw(Box::new(LbDataset { obs }));
        LbStatus::Ok
    })
}

/// Reads a life-data CSV file (`rocket_motor` names the bundled data).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_dataset_from_csv_path(path: *const c_char, out: *mut *mut LbDataset) -> LbStatus {
    guard(|| {
        if out.is_null() || path.is_null() {
            return null("path or out");
        }
        *out = ptr::null_mut();
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            return fail(Error::InvalidInput("path is not UTF-8".into()));
        };
        match parse_lifedata(Path::new(p)) {
            Ok(obs) => {
                *out = Box::into_raw(Box::new(LbDataset { obs }));
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses life-data CSV text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_dataset_from_csv_text(text: *const c_char, out: *mut *mut LbDataset) -> LbStatus {
    guard(|| {
        if out.is_null() || text.is_null() {
            return null("text or out");
        }
        *out = ptr::null_mut();
        let Ok(t) = CStr::from_ptr(text).to_str() else {
            return fail(Error::InvalidInput("text is not UTF-8".into()));
        };
        match parse_lifedata_str(t, Path::new("<text>")) {
            Ok(obs) => {
                *out = Box::into_raw(Box::new(LbDataset { obs }));
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of records (rows, not units).
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn lb_dataset_len(ds: *const LbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.obs.len())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lb_dataset_free(ds: *mut LbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Maximum-likelihood fit of the `LbFamily` code `family`. `weights` may be null (unit weights); otherwise
/// it holds one weight per record.
///
/// # Safety
/// `ds` must be a live handle; `weights` must reference `n_weights` values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_fit(
    ds: *const LbDataset,
    family: i32,
    weights: *const f64,
    n_weights: usize,
    out: *mut *mut LbFit,
) -> LbStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Some(ds) = ds.as_ref() else { return null("dataset") };
        let w = if weights.is_null() { None } else { slice(weights, n_weights) };
        let family = match family_of(family) {
            Ok(f) => f,
            Err(s) => return s,
        };
        match fit_ml(family, &ds.obs, w, &FitOptions::default()) {
            Ok(fit) => {
                *out = Box::into_raw(Box::new(LbFit { fit }));
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of parameters of the fitted family (2 or 3).
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_fit_n_params(fit: *const LbFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.params.values().len())
}

/// Copies estimates to `params` and standard errors (NaN where unavailable)
/// to `se`; either pointer may be null. Buffers need `lb_fit_n_params` slots.
///
/// # Safety
/// `fit` must be a live handle; non-null buffers must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn lb_fit_params(fit: *const LbFit, params: *mut f64, se: *mut f64, cap: usize) -> LbStatus {
    guard(|| {
        let Some(f) = fit.as_ref() else { return null("fit") };
        let v = f.fit.params.values();
        if cap < v.len() {
            return null("buffer too small");
        }
        for (k, x) in v.iter().enumerate() {
            if !params.is_null() {
                *params.add(k) = *x;
            }
            if !se.is_null() {
                *se.add(k) = f.fit.se[k].unwrap_or(f64::NAN);
            }
        }
        LbStatus::Ok
    })
}

/// Maximized loglikelihood.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_fit_loglik(fit: *const LbFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.fit.loglik)
}

/// Wald interval for parameter `index` at `level`.
///
/// # Safety
/// `fit` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_fit_wald(
    fit: *const LbFit,
    index: usize,
    level: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> LbStatus {
    guard(|| {
        let Some(f) = fit.as_ref() else { return null("fit") };
        if lower.is_null() || upper.is_null() {
            return null("lower or upper");
        }
        let Some(&p) = f.fit.family().param_names().get(index) else {
            return fail(Error::InvalidInput(format!("parameter index {index} out of range")));
        };
        match wald_interval(&f.fit, p, level) {
            Ok((lo, hi)) => {
                *lower = lo;
                *upper = hi;
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lb_fit_free(fit: *mut LbFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Runs `b` bootstrap replicates (`family`, `scheme` are `LbFamily`,
/// `LbScheme` codes). With `strict`, returns
/// `LB_STATUS_PATHOLOGY` when more than 5% of replicates are pathological.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_bootstrap(
    ds: *const LbDataset,
    family: i32,
    scheme: i32,
    b: usize,
    seed: u64,
    unit_level: bool,
    strict: bool,
    out: *mut *mut LbRun,
) -> LbStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Some(ds) = ds.as_ref() else { return null("dataset") };
        let opts = BootstrapOptions {
            unit_level,
            strict,
            ..Default::default()
        };
        let (family, scheme) = match (family_of(family), scheme_of(scheme)) {
            (Ok(f), Ok(s)) => (f, s),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match run_bootstrap(family, &ds.obs, scheme, b, seed, &opts) {
            Ok(run) => {
                *out = Box::into_raw(Box::new(LbRun { run }));
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Replicates that enter interval computations.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lb_run_usable(run: *const LbRun) -> usize {
    run.as_ref().map_or(0, |r| r.run.usable_count())
}

/// Copies the B draws of parameter `index` in replicate order; excluded
/// replicates are NaN.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn lb_run_draws(run: *const LbRun, index: usize, out: *mut f64, cap: usize) -> LbStatus {
    guard(|| {
        let Some(r) = run.as_ref() else { return null("run") };
        if out.is_null() || cap < r.run.b {
            return null("buffer too small");
        }
        let Some(&p) = r.run.param_names().get(index) else {
            return fail(Error::InvalidInput(format!("parameter index {index} out of range")));
        };
        match r.run.draws(p) {
            Ok(d) => {
                ptr::copy_nonoverlapping(d.as_ptr(), out, d.len());
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Bootstrap interval for parameter `index`: bias-corrected percentile when
/// `bias_corrected`, simple percentile otherwise.
///
/// # Safety
/// `run` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_run_interval(
    run: *const LbRun,
    index: usize,
    level: f64,
    bias_corrected: bool,
    lower: *mut f64,
    upper: *mut f64,
) -> LbStatus {
    guard(|| {
        let Some(r) = run.as_ref() else { return null("run") };
        if lower.is_null() || upper.is_null() {
            return null("lower or upper");
        }
        let Some(&p) = r.run.param_names().get(index) else {
            return fail(Error::InvalidInput(format!("parameter index {index} out of range")));
        };
        let res = r.run.draws(p).and_then(|d| {
            if bias_corrected {
                bc_percentile_interval(&d, r.run.point_fit.params.values()[index], level)
            } else {
                percentile_interval(&d, level)
            }
        });
        match res {
            Ok(i) => {
                *lower = i.lower;
                *upper = i.upper;
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lb_run_free(run: *mut LbRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Fills `out[0..n]` with replicate `replicate` (1-based) of the weight
/// stream for `seed`.
///
/// # Safety
/// `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn lb_gen_weights(scheme: i32, n: usize, seed: u64, replicate: u64, out: *mut f64) -> LbStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let scheme = match scheme_of(scheme) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let mut rng = StreamRng::replicate(seed, replicate);
        match gen_weights(scheme, n, &mut rng, replicate) {
            Ok(w) => {
                ptr::copy_nonoverlapping(w.values().as_ptr(), out, n);
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Probability that a row resample of `n` rows with `r` failures keeps
/// fewer than two failures.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lb_prob_degenerate_resample(n: u64, r: u64, out: *mut f64) -> LbStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match prob_degenerate_resample(n, r) {
            Ok(p) => {
                *out = p;
                LbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

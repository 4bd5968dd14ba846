//! C ABI over `dpsbp-wave`.
//!
//! Every fallible function returns a [`DpsbpStatus`]; on failure the message
//! is available from [`dpsbp_last_error`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dpsbp_wave::cli::{self, ExperimentConfig, RunSummary};
use dpsbp_wave::diagnostics::{self, ExactSolution};
use dpsbp_wave::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsbpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InvalidConfig = 4,
    Numerical = 5,
    Io = 6,
    NotAvailable = 7,
    Panic = 8,
}

/// Parsed and validated experiment configuration.
pub struct DpsbpConfig(ExperimentConfig);

/// Headline results of one run.
pub struct DpsbpSummary(RunSummary);

/// Closed-form reference solution.
pub struct DpsbpExact(ExactSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> DpsbpStatus {
    match e {
        Error::Parse { .. } => DpsbpStatus::Parse,
        Error::InvalidConfig(_) => DpsbpStatus::InvalidConfig,
        Error::Io(_) => DpsbpStatus::Io,
        Error::SingularMatrix
        | Error::NoConvergence { .. }
        | Error::LineSearchFailure { .. }
        | Error::Certification(_) => DpsbpStatus::Numerical,
        _ => DpsbpStatus::InvalidArgument,
    }
}

fn fail(status: DpsbpStatus, msg: impl Into<String>) -> DpsbpStatus {
    set_error(msg);
    status
}

/// Runs `f`, translating library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (DpsbpStatus, String)>) -> DpsbpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpsbpStatus::Ok,
        Ok(Err((s, m))) => fail(s, m),
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DpsbpStatus::Panic, msg)
        }
    }
}

fn lib(e: Error) -> (DpsbpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DpsbpStatus, String) {
    (DpsbpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn utf8<'a>(s: *const c_char, what: &str) -> Result<&'a str, (DpsbpStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| (DpsbpStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dpsbp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dpsbp_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Parses a JSON configuration into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_config_parse(json: *const c_char, out: *mut *mut DpsbpConfig) -> DpsbpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = cli::parse_config_str(utf8(json, "json")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(DpsbpConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`dpsbp_config_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_config_free(cfg: *mut DpsbpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured experiment, writing its CSV files to `out_dir`.
///
/// # Safety
/// `cfg` must be a live handle, `out_dir` a NUL-terminated path and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_run(
    cfg: *const DpsbpConfig,
    out_dir: *const c_char,
    out: *mut *mut DpsbpSummary,
) -> DpsbpStatus {
    guard(|| {
        if cfg.is_null() {
            return Err(null("cfg"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dir = utf8(out_dir, "out_dir")?;
        let summary = cli::run(&(*cfg).0, Path::new(dir)).map_err(lib)?;
        *out = Box::into_raw(Box::new(DpsbpSummary(summary)));
        Ok(())
    })
}

/// Number of fitted rates (zero unless the run was a convergence study).
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_summary_rate_count(s: *const DpsbpSummary) -> usize {
    s.as_ref().map_or(0, |s| s.0.rates.len())
}

/// Rate `index` and its flavor label (two characters plus NUL fit in `label`
/// when `label_len >= 3`; pass null to skip the label).
///
/// # Safety
/// `s` must be a live handle, `rate` valid, `label` null or writable for `label_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_summary_rate(
    s: *const DpsbpSummary,
    index: usize,
    rate: *mut f64,
    label: *mut c_char,
    label_len: usize,
) -> DpsbpStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("summary"))?;
        if rate.is_null() {
            return Err(null("rate"));
        }
        let (name, r) = s.0.rates.get(index).ok_or((
            DpsbpStatus::InvalidArgument,
            format!("rate index {index} out of range for {} rates", s.0.rates.len()),
        ))?;
        if !label.is_null() {
            if label_len < name.len() + 1 {
                return Err((DpsbpStatus::InvalidArgument, format!("label buffer needs {} bytes", name.len() + 1)));
            }
            ptr::copy_nonoverlapping(name.as_ptr() as *const c_char, label, name.len());
            *label.add(name.len()) = 0;
        }
        *rate = *r;
        Ok(())
    })
}

/// Final error against the exact solution (forward runs) or the true
/// displacement (inversions).
///
/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_summary_final_error(s: *const DpsbpSummary, out: *mut f64) -> DpsbpStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("summary"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = s.0.final_error.ok_or((DpsbpStatus::NotAvailable, "run has no final error".to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`dpsbp_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_summary_free(s: *mut DpsbpSummary) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Reference solution for `f = Π cos(π x_a)`, `g = 0` on `[-1, 1]^dim`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_exact_new(dim: usize, c: f64, sigma: f64, out: *mut *mut DpsbpExact) -> DpsbpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(dim == 1 || dim == 2) {
            return Err((DpsbpStatus::InvalidArgument, format!("dim must be 1 or 2, got {dim}")));
        }
        if !(c > 0.0 && c.is_finite() && sigma >= 0.0 && sigma.is_finite()) {
            return Err((DpsbpStatus::InvalidArgument, format!("need c > 0 and sigma >= 0, got {c} and {sigma}")));
        }
        *out = Box::into_raw(Box::new(DpsbpExact(diagnostics::exact_solution(dim, c, sigma))));
        Ok(())
    })
}

/// Evaluates at `x[0..dim]` and time `t`.
///
/// # Safety
/// `ex` must be a live handle, `x` readable for `dim` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_exact_eval(ex: *const DpsbpExact, x: *const f64, t: f64, out: *mut f64) -> DpsbpStatus {
    guard(|| {
        let ex = ex.as_ref().ok_or_else(|| null("exact"))?;
        if x.is_null() {
            return Err(null("x"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ex.0.eval(std::slice::from_raw_parts(x, ex.0.dim), t);
        Ok(())
    })
}

/// # Safety
/// `ex` must come from [`dpsbp_exact_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_exact_free(ex: *mut DpsbpExact) {
    if !ex.is_null() {
        drop(Box::from_raw(ex));
    }
}

/// Least-squares slope of `log(errors)` against `log(spacings)`.
///
/// # Safety
/// `spacings` and `errors` must be readable for `n` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_convergence_rate(
    spacings: *const f64,
    errors: *const f64,
    n: usize,
    out: *mut f64,
) -> DpsbpStatus {
    guard(|| {
        if spacings.is_null() || errors.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let d = std::slice::from_raw_parts(spacings, n);
        let e = std::slice::from_raw_parts(errors, n);
        let pts: Vec<(f64, f64)> = d.iter().copied().zip(e.iter().copied()).collect();
        *out = diagnostics::convergence_rate(&pts).map_err(lib)?;
        Ok(())
    })
}

/// Certifies the operators of `order` on the standard sizes. `passed` is set
/// even when some check fails; the status is only non-zero for bad input.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpsbp_certify(order: usize, passed: *mut bool) -> DpsbpStatus {
    guard(|| {
        if passed.is_null() {
            return Err(null("passed"));
        }
        let reports = cli::certify_reports(order).map_err(lib)?;
        *passed = reports.iter().all(|r| r.all_passed());
        Ok(())
    })
}

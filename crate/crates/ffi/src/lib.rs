//! C interface: opaque handles, status codes and a thread-local error message.
//!
//! Every function returns a [`TbStatus`]; outputs go through pointer arguments. Handles
//! are created by `*_new`/`*_from_json`/`*_run` and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thresholding_bandit::complexity::{characteristic_time_bounds, solve_complexity};
use thresholding_bandit::harness::{records_csv, run_experiment, summaries_csv, ExperimentConfig, ExperimentResult};
use thresholding_bandit::{optimal_arm, BanditInstance, Error, Setting};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Budget = 4,
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbSetting {
    NonMonotonic = 0,
    Increasing = 1,
    BelowThreshold = 2,
}

fn setting_from(code: u32) -> Result<Setting, Fail> {
    match code {
        c if c == TbSetting::NonMonotonic as u32 => Ok(Setting::NonMonotonic),
        c if c == TbSetting::Increasing as u32 => Ok(Setting::Increasing),
        c if c == TbSetting::BelowThreshold as u32 => Ok(Setting::BelowThreshold),
        other => Err(Fail(TbStatus::InvalidArgument, format!("unknown setting code {other}"))),
    }
}

/// Bandit model: means, threshold and setting.
pub struct TbInstance(BanditInstance);

/// Validated experiment configuration.
pub struct TbExperiment(ExperimentConfig);

/// Per-replication records and per-algorithm summaries of a finished experiment.
pub struct TbResult(ExperimentResult);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TbSummary {
    pub replications: u64,
    pub mean_tau: f64,
    pub stderr_tau: f64,
    pub error_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TbStatus {
    match err {
        Error::Config(_) | Error::InvalidInstance(_) | Error::ArmOutOfRange { .. } => TbStatus::InvalidArgument,
        Error::Domain(_) => TbStatus::Domain,
        Error::Budget(_) => TbStatus::Budget,
        Error::Io(_) => TbStatus::Io,
    }
}

struct Fail(TbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies `text` plus a NUL terminator into `buf`; `needed` receives the full size.
unsafe fn write_str(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Fail> {
    let size = text.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buf.is_null() || cap < size {
        return Err(Fail(TbStatus::BufferTooSmall, format!("buffer needs {size} bytes, got {cap}")));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Copies the message of the last failed call on this thread (empty after a success).
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null; `needed` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn tb_last_error_message(buf: *mut c_char, cap: usize, needed: *mut usize) -> TbStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match write_str(&msg, buf, cap, needed) {
        Ok(()) => TbStatus::Ok,
        Err(Fail(status, _)) => status,
    }
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// `setting` is a [`TbSetting`] value.
///
/// # Safety
/// `mu` must point to `k` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_instance_new(
    mu: *const f64,
    k: usize,
    threshold: f64,
    setting: u32,
    out: *mut *mut TbInstance,
) -> TbStatus {
    guard(|| {
        if mu.is_null() {
            return Err(null("mu"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let means = std::slice::from_raw_parts(mu, k).to_vec();
        let inst = BanditInstance::new(means, threshold, setting_from(setting)?)?;
        *out = Box::into_raw(Box::new(TbInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from [`tb_instance_new`] and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn tb_instance_free(inst: *mut TbInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live handle; `k` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_instance_arms(inst: *const TbInstance, k: *mut usize) -> TbStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        *k.as_mut().ok_or_else(|| null("k"))? = inst.0.k();
        Ok(())
    })
}

/// Index (from 0) of the arm to identify; `tied` receives the number of arms sharing
/// the minimal distance.
///
/// # Safety
/// `inst` must be a live handle; `arm` and `tied` valid for writes (`tied` may be null).
#[no_mangle]
pub unsafe extern "C" fn tb_optimal_arm(inst: *const TbInstance, arm: *mut usize, tied: *mut usize) -> TbStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let arm = arm.as_mut().ok_or_else(|| null("arm"))?;
        let star = optimal_arm(&inst.0)?;
        *arm = star.index;
        if let Some(t) = tied.as_mut() {
            *t = star.tie_count;
        }
        Ok(())
    })
}

/// Optimal weights (`k` doubles) and characteristic time (infinite on ties).
///
/// # Safety
/// `inst` must be a live handle; `weights` valid for `k` doubles; `t_star` valid or null.
#[no_mangle]
pub unsafe extern "C" fn tb_solve_complexity(
    inst: *const TbInstance,
    weights: *mut f64,
    k: usize,
    t_star: *mut f64,
) -> TbStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        if weights.is_null() {
            return Err(null("weights"));
        }
        if k != inst.0.k() {
            return Err(Fail(TbStatus::BufferTooSmall, format!("weights holds {k} values, instance has {}", inst.0.k())));
        }
        let sol = solve_complexity(&inst.0);
        std::slice::from_raw_parts_mut(weights, k).copy_from_slice(sol.weights.as_slice());
        if let Some(t) = t_star.as_mut() {
            *t = sol.t_star;
        }
        Ok(())
    })
}

/// Gap-based lower and upper bounds on the increasing-case characteristic time.
///
/// # Safety
/// `inst` must be a live handle; `lower` and `upper` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_time_bounds(inst: *const TbInstance, lower: *mut f64, upper: *mut f64) -> TbStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let lower = lower.as_mut().ok_or_else(|| null("lower"))?;
        let upper = upper.as_mut().ok_or_else(|| null("upper"))?;
        (*lower, *upper) = characteristic_time_bounds(&inst.0)?;
        Ok(())
    })
}

/// Parses and validates a JSON experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_experiment_from_json(json: *const c_char, out: *mut *mut TbExperiment) -> TbStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Fail(TbStatus::InvalidArgument, "configuration is not UTF-8".into()))?;
        let cfg = ExperimentConfig::from_json(text)?;
        *out = Box::into_raw(Box::new(TbExperiment(cfg)));
        Ok(())
    })
}

/// # Safety
/// `exp` must come from [`tb_experiment_from_json`]; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn tb_experiment_free(exp: *mut TbExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Runs every replication; blocks until done.
///
/// # Safety
/// `exp` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_experiment_run(exp: *const TbExperiment, out: *mut *mut TbResult) -> TbStatus {
    guard(|| {
        let exp = deref(exp, "exp")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let res = run_experiment(&exp.0)?;
        *out = Box::into_raw(Box::new(TbResult(res)));
        Ok(())
    })
}

/// # Safety
/// `res` must come from [`tb_experiment_run`]; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn tb_result_free(res: *mut TbResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of summaries, one per configured algorithm.
///
/// # Safety
/// `res` must be a live handle; `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_result_summary_count(res: *const TbResult, count: *mut usize) -> TbStatus {
    guard(|| {
        let res = deref(res, "res")?;
        *count.as_mut().ok_or_else(|| null("count"))? = res.0.summaries.len();
        Ok(())
    })
}

/// # Safety
/// `res` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tb_result_summary(res: *const TbResult, index: usize, out: *mut TbSummary) -> TbStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = res.0.summaries.get(index).ok_or(Error::ArmOutOfRange { index, k: res.0.summaries.len() })?;
        *out = TbSummary {
            replications: s.replications,
            mean_tau: s.mean_tau,
            stderr_tau: s.stderr_tau,
            error_rate: s.error_rate,
        };
        Ok(())
    })
}

/// Summary CSV (or the per-replication records when `raw` is true) as a NUL-terminated
/// string. With a null or short buffer, `needed` still receives the required size and
/// the call returns `BufferTooSmall`.
///
/// # Safety
/// `res` must be a live handle; `buf` valid for `cap` bytes or null; `needed` valid or null.
#[no_mangle]
pub unsafe extern "C" fn tb_result_csv(
    res: *const TbResult,
    raw: bool,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> TbStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let text = if raw { records_csv(&res.0.records)? } else { summaries_csv(&res.0.summaries)? };
        write_str(&text, buf, cap, needed)
    })
}

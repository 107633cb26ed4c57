//! C ABI over `tamp-core`.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `*_free`. Every fallible call returns a [`TampStatus`]; on anything but
//! `TAMP_STATUS_OK` a message is available from [`tamp_last_error`] on the
//! same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tamp_core::exec::Outcome;
use tamp_core::pipeline::{self, Planned, RunError};
use tamp_core::scenario::Scenario;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TampStatus {
    Ok = 0,
    /// Unreadable or malformed scenario, domain, problem or world.
    InputError = 1,
    /// Planning or execution ended in a failure outcome.
    PlanFailure = 2,
    NullArgument = 3,
    /// A string argument is not UTF-8.
    Utf8 = 4,
    Panic = 5,
}

/// Outcome of a run, as reported by [`tamp_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TampOutcome {
    Success = 0,
    UnsolvableTask = 1,
    AttemptsExhausted = 2,
}

/// A loaded scenario.
pub struct TampScenario {
    inner: Scenario,
}

/// A planned incumbent with its serialized form.
pub struct TampPlan {
    planned: Planned,
    jsonl: CString,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TampRunSummary {
    pub outcome: TampOutcome,
    /// Planned effort before execution, seconds.
    pub c_star: f64,
    /// Effort actually spent, seconds.
    pub effort_s: f64,
    pub replans: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: TampStatus, msg: impl Into<Vec<u8>>) -> TampStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `TampStatus::Panic`.
fn guard(f: impl FnOnce() -> TampStatus) -> TampStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TampStatus::Ok {
                set_error("");
            }
            s
        }
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(TampStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn run_error(e: RunError) -> TampStatus {
    match e {
        RunError::Input(e) => fail(TampStatus::InputError, e.to_string()),
        RunError::Plan(f) => fail(TampStatus::PlanFailure, format!("{f:?}")),
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tamp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn tamp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tamp_scenario_load(path: *const c_char, out: *mut *mut TampScenario) -> TampStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(TampStatus::NullArgument, "path and out must not be null");
        }
        // SAFETY: non-null and nul-terminated per the contract.
        let Ok(p) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(TampStatus::Utf8, "path is not UTF-8");
        };
        match Scenario::load(Path::new(p)) {
            Ok(inner) => {
                // SAFETY: `out` is non-null and writable per the contract.
                unsafe { *out = Box::into_raw(Box::new(TampScenario { inner })) };
                TampStatus::Ok
            }
            Err(e) => fail(TampStatus::InputError, e.to_string()),
        }
    })
}

/// Overrides the planner seed.
///
/// # Safety
/// `sc` must come from [`tamp_scenario_load`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn tamp_scenario_set_seed(sc: *mut TampScenario, seed: u64) -> TampStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let Some(sc) = (unsafe { sc.as_mut() }) else {
            return fail(TampStatus::NullArgument, "scenario is null");
        };
        sc.inner.set_seed(seed);
        TampStatus::Ok
    })
}

/// # Safety
/// `sc` must be null or come from [`tamp_scenario_load`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tamp_scenario_free(sc: *mut TampScenario) {
    if !sc.is_null() {
        // SAFETY: allocated by Box::into_raw in tamp_scenario_load.
        drop(unsafe { Box::from_raw(sc) });
    }
}

/// Plans from the scenario's initial state.
///
/// # Safety
/// `sc` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tamp_plan(sc: *const TampScenario, out: *mut *mut TampPlan) -> TampStatus {
    guard(|| {
        if out.is_null() {
            return fail(TampStatus::NullArgument, "out is null");
        }
        // SAFETY: live handle per the contract.
        let Some(sc) = (unsafe { sc.as_ref() }) else {
            return fail(TampStatus::NullArgument, "scenario is null");
        };
        match pipeline::plan(&sc.inner) {
            Ok(planned) => {
                let text = planned.incumbent.to_jsonl(&sc.inner.task);
                let jsonl = CString::new(text).expect("JSON output has no nul bytes");
                // SAFETY: `out` is non-null and writable.
                unsafe { *out = Box::into_raw(Box::new(TampPlan { planned, jsonl })) };
                TampStatus::Ok
            }
            Err(e) => run_error(e),
        }
    })
}

/// Incumbent effort c*, seconds; NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn tamp_plan_cost(p: *const TampPlan) -> f64 {
    // SAFETY: null or live per the contract.
    unsafe { p.as_ref() }.map_or(f64::NAN, |p| p.planned.incumbent.c_star)
}

/// Number of actions in the incumbent; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn tamp_plan_len(p: *const TampPlan) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { p.as_ref() }.map_or(0, |p| p.planned.incumbent.steps.len())
}

/// Incumbent as JSON lines, one step per line. Owned by the plan.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn tamp_plan_incumbent_jsonl(p: *const TampPlan) -> *const c_char {
    // SAFETY: null or live per the contract.
    unsafe { p.as_ref() }.map_or(std::ptr::null(), |p| p.jsonl.as_ptr())
}

/// # Safety
/// `p` must be null or come from [`tamp_plan`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tamp_plan_free(p: *mut TampPlan) {
    if !p.is_null() {
        // SAFETY: allocated by Box::into_raw in tamp_plan.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Plans and executes against the scenario timeline. A failure outcome
/// still fills `summary` (and `trace_jsonl`) and returns
/// `TAMP_STATUS_PLAN_FAILURE`. `trace_jsonl` may be null; otherwise it
/// receives a string to release with [`tamp_string_free`].
///
/// # Safety
/// `sc` must be a live scenario handle; `summary` must be writable;
/// `trace_jsonl` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tamp_run(
    sc: *const TampScenario,
    summary: *mut TampRunSummary,
    trace_jsonl: *mut *mut c_char,
) -> TampStatus {
    guard(|| {
        if summary.is_null() {
            return fail(TampStatus::NullArgument, "summary is null");
        }
        // SAFETY: live handle per the contract.
        let Some(sc) = (unsafe { sc.as_ref() }) else {
            return fail(TampStatus::NullArgument, "scenario is null");
        };
        let (planned, trace) = match pipeline::run(&sc.inner) {
            Ok(r) => r,
            Err(e) => return run_error(e),
        };
        let outcome = match trace.outcome {
            Outcome::Success => TampOutcome::Success,
            Outcome::Failure(tamp_core::engine::Failure::UnsolvableTask) => TampOutcome::UnsolvableTask,
            Outcome::Failure(tamp_core::engine::Failure::AttemptsExhausted) => TampOutcome::AttemptsExhausted,
        };
        // SAFETY: `summary` is non-null and writable.
        unsafe {
            *summary = TampRunSummary {
                outcome,
                c_star: planned.incumbent.c_star,
                effort_s: trace.effort_s,
                replans: trace.replans as u32,
            }
        };
        if !trace_jsonl.is_null() {
            let s = CString::new(trace.to_jsonl()).expect("JSON output has no nul bytes");
            // SAFETY: non-null and writable per the contract.
            unsafe { *trace_jsonl = s.into_raw() };
        }
        match trace.outcome {
            Outcome::Success => TampStatus::Ok,
            Outcome::Failure(f) => fail(TampStatus::PlanFailure, format!("{f:?}")),
        }
    })
}

/// Releases a string returned through an out-parameter.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tamp_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

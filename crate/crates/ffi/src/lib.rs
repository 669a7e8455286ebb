//! C ABI over the `mirror-descent` solvers.
//!
//! Objects cross the boundary as opaque handles (`MdInstance`, `MdTrace`,
//! `MdRestart`) created by `md_*` constructors and released with the
//! matching `*_free`. Every fallible call returns an [`MdStatus`]; on failure
//! `md_last_error_message` describes the error for the calling thread.
//! Panics never unwind into C: they are caught and reported as
//! `MD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mirror_descent::instances::{
    from_json_str, generate_max_quadratic, load_instance, make_known_solution_instance,
    to_json_string, FixtureKind, ProblemInstance,
};
use mirror_descent::solvers::{
    adaptive_cap, phi_inverse, run_adaptive_with, run_partial_adaptive_with, run_restarted,
    RestartReport, SolveOptions, SolveTrace, StepKind,
};
use mirror_descent::{MdError, Point};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Precondition = 4,
    Degenerate = 5,
    Parse = 6,
    Validation = 7,
    InvariantViolation = 8,
    MissingSolution = 9,
    Io = 10,
    OutOfRange = 11,
    Panic = 12,
}

impl From<&MdError> for MdStatus {
    fn from(e: &MdError) -> Self {
        match e {
            MdError::Input(_) => MdStatus::InvalidArgument,
            MdError::Domain(_) => MdStatus::Domain,
            MdError::Precondition(_) => MdStatus::Precondition,
            MdError::Degenerate(_) => MdStatus::Degenerate,
            MdError::Parse { .. } => MdStatus::Parse,
            MdError::Validation(_) => MdStatus::Validation,
            MdError::InvariantViolation(_) => MdStatus::InvariantViolation,
            MdError::MissingSolution(_) => MdStatus::MissingSolution,
            MdError::Io(_) => MdStatus::Io,
        }
    }
}

/// A loaded or generated problem instance.
pub struct MdInstance(ProblemInstance);

/// Result of an adaptive or partial-adaptive run.
pub struct MdTrace(SolveTrace);

/// Result of a restarted run.
pub struct MdRestart(RestartReport);

/// One iteration of a trace.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MdStep {
    pub k: usize,
    /// 1 for a productive step, 0 otherwise.
    pub productive: u8,
    pub step_size: f64,
    pub f_value: f64,
    pub g_value: f64,
    pub grad_dual_norm: f64,
}

/// One restart of a restarted run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MdRestartStep {
    pub p: usize,
    pub r_p_sq: f64,
    pub eps_p: f64,
    pub inner_accuracy: f64,
    pub inner_iterations: usize,
    pub productive_count: usize,
    /// `‖x_p − x*‖²`, NaN when the instance has no known solution.
    pub dist_sq_to_solution: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "\\0")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MdStatus, String);

impl From<MdError> for Failure {
    fn from(e: MdError) -> Self {
        Failure(MdStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> MdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("panic: {msg}"));
            MdStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            MdStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_point(x: &[f64], buf: *mut f64, len: usize) -> FfiResult<()> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < x.len() {
        return Err(Failure(
            MdStatus::OutOfRange,
            format!("buffer holds {len} values, {} needed", x.len()),
        ));
    }
    ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `md_*` call on the same thread.
#[no_mangle]
pub extern "C" fn md_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn md_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads an instance from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_instance_load(
    path: *const c_char,
    out: *mut *mut MdInstance,
) -> MdStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, MdInstance(load_instance(path)?))
    })
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_instance_from_json(
    json: *const c_char,
    out: *mut *mut MdInstance,
) -> MdStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        put(out, MdInstance(from_json_str(text)?))
    })
}

/// Builds a fixture by name: `active-linear`, `strongly-convex-ball` or
/// `max-quadratic-linear`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_instance_fixture(
    name: *const c_char,
    out: *mut *mut MdInstance,
) -> MdStatus {
    guard(|| {
        let kind = FixtureKind::from_name(str_arg(name, "name")?)?;
        put(out, MdInstance(make_known_solution_instance(kind)))
    })
}

/// Random max-of-quadratics instance on `[−1,1]^dim`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_instance_generate(
    dim: usize,
    pieces: usize,
    seed: u64,
    out: *mut *mut MdInstance,
) -> MdStatus {
    guard(|| put(out, MdInstance(generate_max_quadratic(dim, pieces, seed)?)))
}

/// Serializes an instance; release the string with `md_string_free`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_instance_to_json(
    inst: *const MdInstance,
    out: *mut *mut c_char,
) -> MdStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = CString::new(to_json_string(&inst.0))
            .map_err(|_| Failure(MdStatus::Io, "NUL in JSON".into()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from `md_instance_to_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn md_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn md_instance_free(inst: *mut MdInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Dimension of the instance, 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_instance_dim(inst: *const MdInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.dim())
}

fn trace_options(inst: &ProblemInstance) -> SolveOptions {
    SolveOptions {
        retain_iterates: false,
        ..SolveOptions::for_instance(inst)
    }
}

/// Partial-adaptive method at accuracy `eps`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_solve_partial(
    inst: *const MdInstance,
    eps: f64,
    out: *mut *mut MdTrace,
) -> MdStatus {
    guard(|| {
        let inst = &handle(inst, "instance")?.0;
        put(
            out,
            MdTrace(run_partial_adaptive_with(inst, eps, &trace_options(inst))?),
        )
    })
}

/// Adaptive method at accuracy `eps`, capped at `cap_multiplier` times its
/// iteration bound.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_solve_adaptive(
    inst: *const MdInstance,
    eps: f64,
    cap_multiplier: f64,
    out: *mut *mut MdTrace,
) -> MdStatus {
    guard(|| {
        let inst = &handle(inst, "instance")?.0;
        let cap = adaptive_cap(inst, eps, cap_multiplier)?;
        put(
            out,
            MdTrace(run_adaptive_with(
                inst,
                eps,
                Some(cap),
                &trace_options(inst),
            )?),
        )
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn md_trace_free(trace: *mut MdTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of steps taken, 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_trace_total_iterations(trace: *const MdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.total_iterations)
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_trace_productive_count(trace: *const MdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.productive_count)
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_trace_nonproductive_count(trace: *const MdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.nonproductive_count)
}

/// `f(x̄)`, NaN for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_trace_output_f(trace: *const MdTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.0.output_f)
}

/// `g(x̄)`, NaN for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_trace_output_g(trace: *const MdTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.0.output_g)
}

/// Copies `x̄` into `buf`, which must hold at least `md_instance_dim` values.
///
/// # Safety
/// `trace` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn md_trace_output_point(
    trace: *const MdTrace,
    buf: *mut f64,
    len: usize,
) -> MdStatus {
    guard(|| copy_point(&handle(trace, "trace")?.0.output_point, buf, len))
}

/// Step `k` of the trace.
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_trace_step(
    trace: *const MdTrace,
    k: usize,
    out: *mut MdStep,
) -> MdStatus {
    guard(|| {
        let t = &handle(trace, "trace")?.0;
        let r = t.iterations.get(k).ok_or_else(|| {
            Failure(
                MdStatus::OutOfRange,
                format!("step {k} of {}", t.iterations.len()),
            )
        })?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = MdStep {
            k: r.k,
            productive: u8::from(r.kind == StepKind::Productive),
            step_size: r.step_size,
            f_value: r.f_value,
            g_value: r.g_value,
            grad_dual_norm: r.grad_dual_norm,
        };
        Ok(())
    })
}

/// Restarted partial-adaptive method from `x0` (the setup's center when
/// null) with initial squared radius `r0_sq`.
///
/// # Safety
/// `inst` must be a live handle; `x0` must be null or point to `dim`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_restart(
    inst: *const MdInstance,
    eps: f64,
    x0: *const f64,
    dim: usize,
    r0_sq: f64,
    out: *mut *mut MdRestart,
) -> MdStatus {
    guard(|| {
        let inst = &handle(inst, "instance")?.0;
        let start = if x0.is_null() {
            inst.setup().center().clone()
        } else {
            Point::new(std::slice::from_raw_parts(x0, dim).to_vec())?
        };
        put(out, MdRestart(run_restarted(inst, eps, &start, r0_sq)?))
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn md_restart_free(r: *mut MdRestart) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of restarts `p̂`, 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_restart_count(r: *const MdRestart) -> usize {
    r.as_ref().map_or(0, |r| r.0.p_hat)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_restart_total_inner_iterations(r: *const MdRestart) -> usize {
    r.as_ref().map_or(0, |r| r.0.total_inner_iterations)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_restart_iteration_bound(r: *const MdRestart) -> usize {
    r.as_ref().map_or(0, |r| r.0.iteration_bound)
}

/// Restart `index` (0-based; its `p` is `index + 1`).
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_restart_step(
    r: *const MdRestart,
    index: usize,
    out: *mut MdRestartStep,
) -> MdStatus {
    guard(|| {
        let rep = &handle(r, "restart")?.0;
        let s = rep.restarts.get(index).ok_or_else(|| {
            Failure(
                MdStatus::OutOfRange,
                format!("restart {index} of {}", rep.restarts.len()),
            )
        })?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = MdRestartStep {
            p: s.p,
            r_p_sq: s.r_p_sq,
            eps_p: s.eps_p,
            inner_accuracy: s.inner_accuracy,
            inner_iterations: s.inner_iterations,
            productive_count: s.productive_count,
            dist_sq_to_solution: s.dist_sq_to_solution.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Copies the final point into `buf`.
///
/// # Safety
/// `r` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn md_restart_final_point(
    r: *const MdRestart,
    buf: *mut f64,
    len: usize,
) -> MdStatus {
    guard(|| copy_point(&handle(r, "restart")?.0.final_point, buf, len))
}

/// Inverse of `τ(δ) = max{δG + δ²L/2, δM_g}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_phi_inverse(
    eps: f64,
    grad_norm_star: f64,
    l: f64,
    m_g: f64,
    out: *mut f64,
) -> MdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = phi_inverse(eps, grad_norm_star, l, m_g)?;
        Ok(())
    })
}

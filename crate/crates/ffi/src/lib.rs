//! C ABI over `ringbec`.
//!
//! Every function returns an [`RbStatus`]; on failure the message is
//! available from [`rb_last_error`] on the same thread until the next call.
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ringbec::config::{preset, Format, RunConfig};
use ringbec::drives::resonance_frequency;
use ringbec::integrator::{integrate, Trajectory};
use ringbec::model::{Interaction, ModelParams};
use ringbec::output::write_trajectory;
use ringbec::scenarios::{critical_imbalance_analytic, selfconfine_residual};
use ringbec::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or index out of range.
    InvalidArgument = 1,
    /// Malformed or inconsistent configuration or parameters.
    Config = 2,
    /// Integration or analysis failed.
    Numerical = 3,
    Io = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbFormat {
    Csv = 0,
    Jsonl = 1,
}

/// Model parameters.
pub struct RbParams {
    inner: ModelParams,
}

/// Integrated trajectory together with the hash of its configuration.
pub struct RbTrajectory {
    inner: Trajectory,
    config_hash: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            _ if e.is_config() => RbStatus::Config,
            Error::Io { .. } => RbStatus::Io,
            Error::InvalidState(_) | Error::UndefinedWinding(_) => RbStatus::InvalidArgument,
            _ => RbStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(RbStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RbStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RbStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("`{name}` is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid(format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn rb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_params(
    n_wells: usize,
    total_atoms: f64,
    k_tilde: f64,
    interaction: Interaction,
    out: *mut *mut RbParams,
) -> RbStatus {
    guard(|| {
        let inner = ModelParams::new(n_wells, total_atoms, k_tilde, interaction)?;
        unsafe { write_out(out, Box::into_raw(Box::new(RbParams { inner })), "out") }
    })
}

/// Parameters from the dimensionless interaction `lambda = U N_T / (2 k_tilde)`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rb_params_new(
    n_wells: usize,
    total_atoms: f64,
    k_tilde: f64,
    lambda: f64,
    out: *mut *mut RbParams,
) -> RbStatus {
    new_params(n_wells, total_atoms, k_tilde, Interaction::Lambda(lambda), out)
}

/// Parameters from the on-site interaction `U`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rb_params_new_with_u(
    n_wells: usize,
    total_atoms: f64,
    k_tilde: f64,
    u: f64,
    out: *mut *mut RbParams,
) -> RbStatus {
    new_params(n_wells, total_atoms, k_tilde, Interaction::U(u), out)
}

/// # Safety
/// `params` must come from `rb_params_new*` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rb_params_free(params: *mut RbParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_params_lambda(params: *const RbParams, out: *mut f64) -> RbStatus {
    guard(|| write_out(out, ref_arg(params, "params")?.inner.lambda(), "out"))
}

/// # Safety
/// `params` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_params_u(params: *const RbParams, out: *mut f64) -> RbStatus {
    guard(|| write_out(out, ref_arg(params, "params")?.inner.u(), "out"))
}

/// `omega_R = 2 k_tilde`.
///
/// # Safety
/// `params` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_params_omega_r(params: *const RbParams, out: *mut f64) -> RbStatus {
    guard(|| write_out(out, ref_arg(params, "params")?.inner.omega_r(), "out"))
}

/// Closed-form drive resonance in units of `omega_R`; four wells only.
///
/// # Safety
/// `params` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_resonance_frequency(params: *const RbParams, out: *mut f64) -> RbStatus {
    guard(|| {
        let w = resonance_frequency(&ref_arg(params, "params")?.inner)?;
        write_out(out, w, "out")
    })
}

/// Residual of the self-confinement criterion at imbalance `n`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_selfconfine_residual(n: f64, lambda: f64, out: *mut f64) -> RbStatus {
    guard(|| write_out(out, selfconfine_residual(n, lambda)?, "out"))
}

/// Analytic confinement (`upper`) and depletion (`lower`) thresholds in atoms.
///
/// # Safety
/// Every output pointer must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_thresholds_analytic(
    lambda: f64,
    total_atoms: f64,
    n_star: *mut f64,
    upper: *mut f64,
    lower: *mut f64,
) -> RbStatus {
    guard(|| {
        let t = critical_imbalance_analytic(lambda, total_atoms)?;
        write_out(n_star, t.n_star, "n_star")?;
        write_out(upper, t.upper, "upper")?;
        write_out(lower, t.lower, "lower")
    })
}

fn simulate(config: RunConfig, out: *mut *mut RbTrajectory) -> Result<(), Failure> {
    let config = config.materialize()?;
    let built = config.build()?;
    let inner = integrate(&built.initial, &built.params, &built.schedule, &built.options)?;
    let handle = RbTrajectory {
        inner,
        config_hash: config.hash()?,
    };
    unsafe { write_out(out, Box::into_raw(Box::new(handle)), "out") }
}

/// Integrates a TOML configuration.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rb_simulate_config(config: *const c_char, out: *mut *mut RbTrajectory) -> RbStatus {
    guard(|| simulate(RunConfig::parse(str_arg(config, "config")?)?, out))
}

/// Integrates a built-in preset such as `"fig3a"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rb_simulate_preset(name: *const c_char, out: *mut *mut RbTrajectory) -> RbStatus {
    guard(|| simulate(preset(str_arg(name, "name")?)?, out))
}

/// # Safety
/// `traj` must come from `rb_simulate_*` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_free(traj: *mut RbTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples.
///
/// # Safety
/// `traj` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_len(traj: *const RbTrajectory, out: *mut usize) -> RbStatus {
    guard(|| write_out(out, ref_arg(traj, "traj")?.inner.len(), "out"))
}

/// # Safety
/// `traj` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_n_wells(traj: *const RbTrajectory, out: *mut usize) -> RbStatus {
    guard(|| write_out(out, ref_arg(traj, "traj")?.inner.n_wells(), "out"))
}

/// Time of `sample` in `1/omega_R`.
///
/// # Safety
/// `traj` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_time(traj: *const RbTrajectory, sample: usize, out: *mut f64) -> RbStatus {
    guard(|| {
        let t = ref_arg(traj, "traj")?;
        let s = t
            .inner
            .samples
            .get(sample)
            .ok_or_else(|| invalid(format!("sample {sample} out of range")))?;
        write_out(out, s.time, "out")
    })
}

/// Copies the populations of `sample` into `out[0..len]`; `len` must equal the well count.
///
/// # Safety
/// `traj` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_populations(
    traj: *const RbTrajectory,
    sample: usize,
    out: *mut f64,
    len: usize,
) -> RbStatus {
    guard(|| {
        let t = ref_arg(traj, "traj")?;
        let s = t
            .inner
            .samples
            .get(sample)
            .ok_or_else(|| invalid(format!("sample {sample} out of range")))?;
        let pops = &s.observables.populations;
        if out.is_null() || len != pops.len() {
            return Err(invalid(format!("need a buffer of {} values", pops.len())));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(pops);
        Ok(())
    })
}

/// Largest `|sum N_i - N_T| / N_T` over accepted steps.
///
/// # Safety
/// `traj` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_norm_drift(traj: *const RbTrajectory, out: *mut f64) -> RbStatus {
    guard(|| write_out(out, ref_arg(traj, "traj")?.inner.stats.max_norm_drift, "out"))
}

/// Writes the trajectory as CSV or JSONL, atomically.
///
/// # Safety
/// `traj` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rb_trajectory_write(
    traj: *const RbTrajectory,
    path: *const c_char,
    format: RbFormat,
) -> RbStatus {
    guard(|| {
        let t = ref_arg(traj, "traj")?;
        let path = str_arg(path, "path")?;
        let format = match format {
            RbFormat::Csv => Format::Csv,
            RbFormat::Jsonl => Format::Jsonl,
        };
        write_trajectory(&t.inner, Path::new(path), format, &t.config_hash)?;
        Ok(())
    })
}

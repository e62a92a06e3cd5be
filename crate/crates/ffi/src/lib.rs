//! C ABI over `aniso-core`.
//!
//! Objects cross the boundary as opaque handles created by `aniso_*_new`-style
//! constructors and released with the matching `*_free`. Every function
//! returns an [`AnisoStatus`]; on failure, [`aniso_last_error_message`] gives a
//! description that stays valid until the next failing call on the same thread.
//! Panics are caught and reported as `ANISO_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aniso_core::cli::{self, ExperimentConfig};
use aniso_core::diagnostics::{audit, AuditTolerances, DiagnosticsRow};
use aniso_core::kinetic::{self, FrequencyPoint, Verdict};
use aniso_core::model::presets;
use aniso_core::solver::{self, SolverError, Trajectory};
use aniso_core::ModelSpec;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnisoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Model = 4,
    Solver = 5,
    /// The run stopped on non-finite values; the partial trajectory is returned.
    BlowUp = 6,
    Kinetic = 7,
    Diagnostics = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Verdict of the nondegeneracy check; values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnisoVerdict {
    Pass = 0,
    Fail = 3,
    Inconclusive = 4,
}

impl From<Verdict> for AnisoVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Self::Pass,
            Verdict::Fail => Self::Fail,
            Verdict::Inconclusive => Self::Inconclusive,
        }
    }
}

/// One diagnostics row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnisoRow {
    pub t: f64,
    pub mean: f64,
    pub l1_to_mean: f64,
    pub l2_energy: f64,
    pub linf: f64,
    pub dissipation_resolved: f64,
    pub dissipation_budget: f64,
}

impl From<&DiagnosticsRow> for AnisoRow {
    fn from(r: &DiagnosticsRow) -> Self {
        Self {
            t: r.t,
            mean: r.mean,
            l1_to_mean: r.l1_to_mean,
            l2_energy: r.l2_energy,
            linf: r.linf,
            dissipation_resolved: r.dissipation_resolved,
            dissipation_budget: r.dissipation_budget,
        }
    }
}

/// Headline numbers of an audit. `decay_time` is NaN when the decay
/// threshold was not reached.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnisoAudit {
    pub passed: bool,
    pub max_principle_violation: f64,
    pub energy_monotonicity_violation: f64,
    pub contraction_violation: f64,
    pub mean_drift: f64,
    pub telescoping_error: f64,
    pub cumulative_budget: f64,
    pub global_budget_bound: f64,
    pub decay_time: f64,
}

/// Parsed experiment configuration.
pub struct AnisoConfig {
    inner: ExperimentConfig,
}

/// Immutable model; safe to share between threads.
pub struct AnisoModel {
    inner: ModelSpec,
}

/// Result of a run.
pub struct AnisoTrajectory {
    inner: Trajectory,
}

/// Callback `S'(ξ)` with user data.
pub type AnisoScalarFn = Option<unsafe extern "C" fn(xi: f64, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: AnisoStatus,
    message: String,
}

impl Failure {
    fn new(status: AnisoStatus, message: impl ToString) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }
}

type FfiResult = Result<(), Failure>;

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> AnisoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AnisoStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            AnisoStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(AnisoStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(AnisoStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(AnisoStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(AnisoStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(AnisoStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `data` into `buf` if it fits; `*len` always receives the size needed.
unsafe fn copy_out<T: Copy>(data: &[T], buf: *mut T, cap: usize, len: *mut usize) -> FfiResult {
    *out_ptr(len, "len")? = data.len();
    if cap < data.len() {
        return Err(Failure::new(
            AnisoStatus::BufferTooSmall,
            format!("buffer holds {cap} elements, {} needed", data.len()),
        ));
    }
    if !data.is_empty() {
        if buf.is_null() {
            return Err(Failure::new(AnisoStatus::NullPointer, "buf is null"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    }
    Ok(())
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn model_failure(e: impl ToString) -> Failure {
    Failure::new(AnisoStatus::Model, e)
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn aniso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null if there was none.
#[no_mangle]
pub extern "C" fn aniso_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses configuration text. All problems are listed in the error message.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_config_parse(text: *const c_char, out: *mut *mut AnisoConfig) -> AnisoStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = c_str(text, "text")?;
        let inner = cli::parse_config(text).map_err(|e| Failure::new(AnisoStatus::Config, e))?;
        *out = into_handle(AnisoConfig { inner });
        Ok(())
    })
}

/// Default configuration for a preset model.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_config_for_preset(name: *const c_char, out: *mut *mut AnisoConfig) -> AnisoStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let name = c_str(name, "name")?;
        let inner = ExperimentConfig::for_preset(name).ok_or_else(|| {
            Failure::new(AnisoStatus::InvalidArgument, format!("unknown preset `{name}`"))
        })?;
        *out = into_handle(AnisoConfig { inner });
        Ok(())
    })
}

/// Canonical text of the configuration, NUL-terminated. `*len` receives the
/// required size in bytes including the terminator.
///
/// # Safety
/// `config` must be a live handle; `buf` must hold `cap` bytes; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_config_serialize(
    config: *const AnisoConfig,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> AnisoStatus {
    guard(|| {
        let config = deref(config, "config")?;
        let text = CString::new(config.inner.serialize()).expect("no interior NUL");
        let bytes = text.as_bytes_with_nul();
        copy_out(std::slice::from_raw_parts(bytes.as_ptr().cast::<c_char>(), bytes.len()), buf, cap, len)
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aniso_config_free(config: *mut AnisoConfig) {
    free_handle(config);
}

/// One of the named preset models.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_model_preset(name: *const c_char, out: *mut *mut AnisoModel) -> AnisoStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let name = c_str(name, "name")?;
        let inner = presets::by_name(name).ok_or_else(|| {
            Failure::new(AnisoStatus::InvalidArgument, format!("unknown preset `{name}`"))
        })?;
        *out = into_handle(AnisoModel { inner });
        Ok(())
    })
}

/// The model described by a configuration.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_model_from_config(config: *const AnisoConfig, out: *mut *mut AnisoModel) -> AnisoStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let config = deref(config, "config")?;
        let inner = config.inner.model.build().map_err(model_failure)?;
        *out = into_handle(AnisoModel { inner });
        Ok(())
    })
}

/// Spatial dimension d and state bound M.
///
/// # Safety
/// `model` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_model_info(
    model: *const AnisoModel,
    dimension: *mut usize,
    state_bound: *mut f64,
) -> AnisoStatus {
    guard(|| {
        let model = deref(model, "model")?;
        *out_ptr(dimension, "dimension")? = model.inner.dimension();
        *out_ptr(state_bound, "state_bound")? = model.inner.state_bound();
        Ok(())
    })
}

/// Runs every model check on `samples` points of [−M, M].
///
/// # Safety
/// `model` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_model_validate(
    model: *const AnisoModel,
    samples: usize,
    passed: *mut bool,
    worst_residual: *mut f64,
) -> AnisoStatus {
    guard(|| {
        let model = deref(model, "model")?;
        if samples < 2 {
            return Err(Failure::new(AnisoStatus::InvalidArgument, "samples must be at least 2"));
        }
        let report = model.inner.validate(samples);
        *out_ptr(passed, "passed")? = report.passed();
        *out_ptr(worst_residual, "worst_residual")? = report.worst_residual();
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aniso_model_free(model: *mut AnisoModel) {
    free_handle(model);
}

/// ω(τ, κ; λ) = ∫_{|ξ|≤M} λ / (λ + |τ + a(ξ)·κ|² + (κᵀA(ξ)κ)²) dξ.
///
/// # Safety
/// `model` must be a live handle; `kappa` must hold `kappa_len` values.
#[no_mangle]
pub unsafe extern "C" fn aniso_omega_at(
    model: *const AnisoModel,
    tau: f64,
    kappa: *const f64,
    kappa_len: usize,
    lambda: f64,
    out: *mut f64,
) -> AnisoStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let kappa = slice(kappa, kappa_len, "kappa")?;
        if kappa.len() != model.inner.dimension() {
            return Err(Failure::new(
                AnisoStatus::InvalidArgument,
                format!("kappa has {} entries, model dimension is {}", kappa.len(), model.inner.dimension()),
            ));
        }
        let fp = FrequencyPoint::new(tau, kappa);
        let w = kinetic::omega_at(&model.inner, &fp, lambda)
            .map_err(|e| Failure::new(AnisoStatus::Kinetic, e))?;
        *out_ptr(out, "out")? = w;
        Ok(())
    })
}

/// S(u) − S(0) = ∫ S'(ξ) χ(ξ; u) dξ over [−M, M].
///
/// # Safety
/// `s_prime` must be callable with `user_data`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_entropy_from_kinetic(
    s_prime: AnisoScalarFn,
    user_data: *mut c_void,
    u: f64,
    state_bound: f64,
    out: *mut f64,
) -> AnisoStatus {
    guard(|| {
        let f = s_prime.ok_or_else(|| Failure::new(AnisoStatus::NullPointer, "s_prime is null"))?;
        let s = kinetic::entropy_from_kinetic(|xi| f(xi, user_data), u, state_bound)
            .map_err(|e| Failure::new(AnisoStatus::Kinetic, e))?;
        *out_ptr(out, "out")? = s;
        Ok(())
    })
}

/// Runs the check described by the `[condition]` section on the model of
/// the configuration. `omega_floor` receives ω at the smallest λ.
///
/// # Safety
/// `config` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_check_condition(
    config: *const AnisoConfig,
    verdict: *mut AnisoVerdict,
    omega_floor: *mut f64,
) -> AnisoStatus {
    guard(|| {
        let c = &deref(config, "config")?.inner;
        let model = c.model.build().map_err(model_failure)?;
        let plan = c.condition.plan(&c.grid.periods);
        let report = kinetic::check_condition(&model, c.condition.delta, &c.condition.lambdas, &plan)
            .map_err(|e| Failure::new(AnisoStatus::Kinetic, e))?;
        *out_ptr(verdict, "verdict")? = report.verdict.into();
        *out_ptr(omega_floor, "omega_floor")? = report.omegas.last().copied().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Cell averages of the configured initial profile, in storage order.
///
/// # Safety
/// `config` must be a live handle; `buf` must hold `cap` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_initial_field(
    config: *const AnisoConfig,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AnisoStatus {
    guard(|| {
        let c = &deref(config, "config")?.inner;
        let grid = c.grid.build().map_err(|e| Failure::new(AnisoStatus::Config, e))?;
        let field = cli::initial_field(&c.initial, &grid).map_err(|e| Failure::new(AnisoStatus::Solver, e))?;
        copy_out(&field.values, buf, cap, len)
    })
}

/// Simulates the configured experiment. Nothing is written to disk. On
/// `ANISO_STATUS_BLOW_UP`, `*out` holds the trajectory up to the failure.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_run(config: *const AnisoConfig, out: *mut *mut AnisoTrajectory) -> AnisoStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let c = &deref(config, "config")?.inner;
        let model = c.model.build().map_err(model_failure)?;
        let grid = c.grid.build().map_err(|e| Failure::new(AnisoStatus::Config, e))?;
        let u0 = cli::initial_field(&c.initial, &grid).map_err(|e| Failure::new(AnisoStatus::Solver, e))?;
        match solver::run(&model, &grid, &u0, &c.scheme) {
            Ok(inner) => {
                *out = into_handle(AnisoTrajectory { inner });
                Ok(())
            }
            Err(SolverError::BlowUp { time, max_abs, partial }) => {
                *out = into_handle(AnisoTrajectory { inner: *partial });
                Err(Failure::new(
                    AnisoStatus::BlowUp,
                    format!("blow-up at t = {time:.6e} (max |u| {max_abs:.6e})"),
                ))
            }
            Err(e) => Err(Failure::new(AnisoStatus::Solver, e)),
        }
    })
}

/// Number of diagnostics rows.
///
/// # Safety
/// `trajectory` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_trajectory_row_count(
    trajectory: *const AnisoTrajectory,
    count: *mut usize,
) -> AnisoStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        *out_ptr(count, "count")? = t.inner.rows.len();
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be a live handle; `row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_trajectory_row(
    trajectory: *const AnisoTrajectory,
    index: usize,
    row: *mut AnisoRow,
) -> AnisoStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        let r = t.inner.rows.get(index).ok_or_else(|| {
            Failure::new(
                AnisoStatus::InvalidArgument,
                format!("row {index} out of range ({} rows)", t.inner.rows.len()),
            )
        })?;
        *out_ptr(row, "row")? = r.into();
        Ok(())
    })
}

/// Final cell values in storage order.
///
/// # Safety
/// `trajectory` must be a live handle; `buf` must hold `cap` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_trajectory_final_field(
    trajectory: *const AnisoTrajectory,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AnisoStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        copy_out(&t.inner.final_field.values, buf, cap, len)
    })
}

/// Audits the trajectory with default tolerances. `state_bound` scales the
/// budget tolerance; pass 0 to use ‖u₀‖_∞.
///
/// # Safety
/// `trajectory` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aniso_trajectory_audit(
    trajectory: *const AnisoTrajectory,
    state_bound: f64,
    out: *mut AnisoAudit,
) -> AnisoStatus {
    guard(|| {
        let t = &deref(trajectory, "trajectory")?.inner;
        let m = if state_bound > 0.0 { state_bound } else { t.initial_linf };
        let r = audit(t, m, &AuditTolerances::default())
            .map_err(|e| Failure::new(AnisoStatus::Diagnostics, e))?;
        *out_ptr(out, "out")? = AnisoAudit {
            passed: r.passed,
            max_principle_violation: r.max_principle_violation,
            energy_monotonicity_violation: r.energy_monotonicity_violation,
            contraction_violation: r.contraction_violation,
            mean_drift: r.mean_drift,
            telescoping_error: r.telescoping_error,
            cumulative_budget: r.cumulative_budget,
            global_budget_bound: r.global_budget_bound,
            decay_time: r.decay.time.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aniso_trajectory_free(trajectory: *mut AnisoTrajectory) {
    free_handle(trajectory);
}

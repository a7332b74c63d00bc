//! C interface to the solver.
//!
//! A simulation lives behind an opaque [`KseSimulation`] handle. Every
//! fallible call returns a [`KseStatus`]; the message of the last failure
//! on the calling thread is available from [`kse_last_error_message`].
//! Status values 2 to 5 match the exit codes of the `kse` executable.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kse::config::{parse_config, RunConfig};
use kse::diagnostics::compute_record;
use kse::initial::build_initial_state;
use kse::snapshot::write_snapshot;
use kse::timestepper::{integrate, step, StepControl};
use kse::{KseError, Params, State};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KseStatus {
    Ok = 0,
    ConfigError = 2,
    BlowUp = 3,
    AuditFailure = 4,
    IoError = 5,
    NullPointer = 10,
    InvalidArgument = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KseField {
    Rho = 0,
    C = 1,
    Omega = 2,
}

/// Scalar diagnostics of the current state.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KseDiagnostics {
    pub t: f64,
    pub mass_rho: f64,
    pub min_rho: f64,
    pub min_c: f64,
    /// ‖c‖_q for q = 1, 2, 4, 8, ∞.
    pub c_lq: [f64; 5],
    pub rho_linf: f64,
    pub circulation: f64,
    pub x_energy: f64,
    pub y_quantity: f64,
    pub tail_fraction: f64,
}

/// Opaque simulation handle.
pub struct KseSimulation {
    state: State,
    params: Params,
    step: StepControl,
    q: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &KseError) -> KseStatus {
    match err.exit_code() {
        2 => KseStatus::ConfigError,
        3 => KseStatus::BlowUp,
        4 => KseStatus::AuditFailure,
        _ => KseStatus::IoError,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (KseStatus, String)>) -> KseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KseStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KseStatus::Panic
        }
    }
}

fn fail(e: KseError) -> (KseStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (KseStatus, String) {
    (KseStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (KseStatus, String) {
    (KseStatus::InvalidArgument, msg.into())
}

fn from_config(config: &RunConfig) -> Result<KseSimulation, KseError> {
    let grid = config.grid.build()?;
    let state = build_initial_state(&grid, &config.ic)?;
    Ok(KseSimulation {
        state,
        params: config.params.clone(),
        step: config.step.clone(),
        q: config.diag.q.clone(),
    })
}

unsafe fn sim_ref<'a>(sim: *const KseSimulation) -> Result<&'a KseSimulation, (KseStatus, String)> {
    sim.as_ref().ok_or_else(|| null("simulation"))
}

unsafe fn sim_mut<'a>(sim: *mut KseSimulation) -> Result<&'a mut KseSimulation, (KseStatus, String)> {
    sim.as_mut().ok_or_else(|| null("simulation"))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (KseStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kse_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn kse_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a simulation from configuration text (same format as the
/// command line `--config` file).
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_new_from_config(
    config_text: *const c_char,
    out: *mut *mut KseSimulation,
) -> KseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = c_str(config_text, "config_text")?;
        let config = parse_config(text).map_err(fail)?;
        let sim = from_config(&config).map_err(fail)?;
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// Canonical initial data on an `n × n` grid of the 2π torus with
/// chemical amplitude `amplitude_c`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_new_canonical(
    n: u32,
    amplitude_c: f64,
    out: *mut *mut KseSimulation,
) -> KseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut config = RunConfig::canonical();
        config.grid.n = n as usize;
        config.ic.amplitude_c = amplitude_c;
        let sim = from_config(&config).map_err(fail)?;
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must come from a constructor of this library and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_free(sim: *mut KseSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Points per axis.
///
/// # Safety
/// `sim` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_grid_size(sim: *const KseSimulation) -> u32 {
    sim.as_ref().map_or(0, |s| s.state.grid().n() as u32)
}

/// Current simulation time, NaN for a NULL handle.
///
/// # Safety
/// `sim` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_time(sim: *const KseSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.t)
}

/// One step of size `dt`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_step(sim: *mut KseSimulation, dt: f64) -> KseStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        s.state = step(&s.state, &s.params, dt).map_err(fail)?;
        Ok(())
    })
}

/// Integrates with CFL step control until time `t_end`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_advance(sim: *mut KseSimulation, t_end: f64) -> KseStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        if !(t_end.is_finite() && t_end >= s.state.t) {
            return Err(invalid("t_end must be finite and not before the current time"));
        }
        let control = StepControl {
            t_end,
            ..s.step.clone()
        };
        s.state = integrate(&s.state, &s.params, &control, &mut []).map_err(fail)?;
        Ok(())
    })
}

/// Copies one field (row-major, `n·n` values, x2 fastest) into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_copy_field(
    sim: *const KseSimulation,
    field: KseField,
    buf: *mut f64,
    len: usize,
) -> KseStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let f = match field {
            KseField::Rho => &s.state.rho,
            KseField::C => &s.state.c,
            KseField::Omega => &s.state.omega,
        };
        let values = f.values();
        if len < values.len() {
            return Err((
                KseStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Fills `out` with the diagnostics of the current state.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_diagnostics(
    sim: *const KseSimulation,
    out: *mut KseDiagnostics,
) -> KseStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = compute_record(&s.state, &s.params, &s.q).map_err(fail)?;
        *out = KseDiagnostics {
            t: r.t,
            mass_rho: r.mass_rho,
            min_rho: r.min_rho,
            min_c: r.min_c,
            c_lq: r.lq_c,
            rho_linf: r.linf_rho,
            circulation: r.circulation,
            x_energy: r.x_energy,
            y_quantity: r.y_quantity,
            tail_fraction: r.tail_fraction,
        };
        Ok(())
    })
}

/// Writes the current state as a binary snapshot.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kse_simulation_write_snapshot(
    sim: *const KseSimulation,
    path: *const c_char,
) -> KseStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let path = c_str(path, "path")?;
        write_snapshot(Path::new(path), &s.state).map_err(fail)
    })
}

//! C ABI over `cdyn`.
//!
//! Objects cross the boundary as opaque handles created by `*_load`/`*_run`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CdynStatus`]; on failure the message is kept per thread and
//! can be read with [`cdyn_last_error`]. Arrays are caller-allocated: query
//! the shape first, then copy into a buffer of at least that length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cdyn::harness::{load_scenario, micro_run, run_convergence_sweep, Scenario, SweepReport};
use cdyn::mean_field::{wasserstein1, ParticleMeasure};
use cdyn::{Error, Sampling, Trajectory};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Refused = 4,
    Budget = 5,
    /// A solver monitor or stability guard stopped the run.
    Runtime = 6,
    NonFinite = 7,
    Measure = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// A loaded and validated scenario.
pub struct CdynScenario(Scenario);

/// Samples of a microscopic run.
pub struct CdynTrajectory(Trajectory);

/// Result of a convergence sweep.
pub struct CdynSweep(SweepReport);

/// One row of a sweep.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdynSweepRow {
    pub n: usize,
    pub x_error: f64,
    pub m_error: f64,
    pub x_projection: f64,
    pub m_projection: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CdynStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) => CdynStatus::InvalidInput,
            Error::NonFinite { .. } | Error::Kernel { .. } => CdynStatus::NonFinite,
            Error::Config(_) | Error::Json(_) => CdynStatus::Config,
            Error::Budget(_) => CdynStatus::Budget,
            Error::Monitor { .. } | Error::Instability { .. } => CdynStatus::Runtime,
            Error::Measure(_) => CdynStatus::Measure,
            Error::Refused(_) => CdynStatus::Refused,
            Error::Io(_) => CdynStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CdynStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("interior NULs removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CdynStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            CdynStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(Some(msg));
            status
        }
        Err(_) => {
            set_error(Some("panic inside cdyn".into()));
            CdynStatus::Panic
        }
    }
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CdynStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Failure(
            CdynStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the message of the last failed call on this thread into `buf`
/// (truncated, always NUL-terminated when `len > 0`) and returns the length
/// the full message needs including its NUL, or 0 if the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cdyn_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_scenario_load(path: *const c_char, out: *mut *mut CdynScenario) -> CdynStatus {
    guard(|| {
        let sc = load_scenario(Path::new(text(path, "path")?))?;
        put(out, boxed(CdynScenario(sc)), "out")
    })
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_scenario_from_json(json: *const c_char, out: *mut *mut CdynScenario) -> CdynStatus {
    guard(|| {
        let sc = Scenario::from_json(text(json, "json")?)?;
        sc.validate()?;
        put(out, boxed(CdynScenario(sc)), "out")
    })
}

/// # Safety
/// `sc` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdyn_scenario_free(sc: *mut CdynScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Agent count used for single runs, the horizon and the time step.
///
/// # Safety
/// `sc` must be a live handle; each output must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_scenario_info(
    sc: *const CdynScenario,
    agents: *mut usize,
    horizon: *mut f64,
    dt: *mut f64,
) -> CdynStatus {
    guard(|| {
        let sc = &obj(sc, "scenario")?.0;
        if !agents.is_null() {
            *agents = sc.default_agents();
        }
        if !horizon.is_null() {
            *horizon = sc.horizon;
        }
        if !dt.is_null() {
            *dt = sc.dt;
        }
        Ok(())
    })
}

/// Integrates the microscopic system of `sc` with RK4 on `agents` agents
/// (0 for the scenario default), recording `samples ≥ 2` uniform instants.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_simulate_micro(
    sc: *const CdynScenario,
    agents: usize,
    samples: usize,
    out: *mut *mut CdynTrajectory,
) -> CdynStatus {
    guard(|| {
        let sc = &obj(sc, "scenario")?.0;
        if samples < 2 {
            return Err(Failure(CdynStatus::InvalidInput, "samples must be at least 2".into()));
        }
        let n = if agents == 0 { sc.default_agents() } else { agents };
        let traj = micro_run(sc, n, Sampling::Uniform(samples))?;
        put(out, boxed(CdynTrajectory(traj)), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdyn_trajectory_free(t: *mut CdynTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of samples, agents and opinion dimension.
///
/// # Safety
/// `t` must be a live handle; each output must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_trajectory_shape(
    t: *const CdynTrajectory,
    samples: *mut usize,
    agents: *mut usize,
    dim: *mut usize,
) -> CdynStatus {
    guard(|| {
        let t = &obj(t, "trajectory")?.0;
        let first = &t.states[0];
        if !samples.is_null() {
            *samples = t.states.len();
        }
        if !agents.is_null() {
            *agents = first.len();
        }
        if !dim.is_null() {
            *dim = first.dim;
        }
        Ok(())
    })
}

/// Copies the sample instants.
///
/// # Safety
/// `t` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdyn_trajectory_times(t: *const CdynTrajectory, buf: *mut f64, len: usize) -> CdynStatus {
    guard(|| copy_out(&obj(t, "trajectory")?.0.times, buf, len))
}

fn sample(t: &Trajectory, k: usize) -> Result<&cdyn::AgentEnsemble, Failure> {
    t.states.get(k).ok_or_else(|| {
        Failure(
            CdynStatus::InvalidInput,
            format!("sample {k} out of range for {} samples", t.states.len()),
        )
    })
}

/// Copies the opinions of sample `k`, agent-major (`agents × dim` values).
///
/// # Safety
/// `t` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdyn_trajectory_positions(
    t: *const CdynTrajectory,
    k: usize,
    buf: *mut f64,
    len: usize,
) -> CdynStatus {
    guard(|| copy_out(&sample(&obj(t, "trajectory")?.0, k)?.positions, buf, len))
}

/// Copies the weights of sample `k` (`agents` values).
///
/// # Safety
/// `t` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdyn_trajectory_weights(
    t: *const CdynTrajectory,
    k: usize,
    buf: *mut f64,
    len: usize,
) -> CdynStatus {
    guard(|| copy_out(&sample(&obj(t, "trajectory")?.0, k)?.weights, buf, len))
}

/// Runs the convergence sweep over `n_list` (the scenario's list when
/// `n_len == 0`).
///
/// # Safety
/// `sc` must be a live handle; `n_list` must hold `n_len` values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_sweep_run(
    sc: *const CdynScenario,
    n_list: *const usize,
    n_len: usize,
    out: *mut *mut CdynSweep,
) -> CdynStatus {
    guard(|| {
        let sc = &obj(sc, "scenario")?.0;
        let list = slice(n_list, n_len, "n_list")?;
        let report = run_convergence_sweep(sc, (n_len > 0).then_some(list))?;
        put(out, boxed(CdynSweep(report)), "out")
    })
}

/// # Safety
/// `s` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdyn_sweep_free(s: *mut CdynSweep) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Row count and overall verdict.
///
/// # Safety
/// `s` must be a live handle; each output must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_sweep_summary(s: *const CdynSweep, rows: *mut usize, passed: *mut bool) -> CdynStatus {
    guard(|| {
        let r = &obj(s, "sweep")?.0;
        if !rows.is_null() {
            *rows = r.rows.len();
        }
        if !passed.is_null() {
            *passed = r.passed();
        }
        Ok(())
    })
}

/// Row `k` of the sweep, rows sorted by agent count.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_sweep_row(s: *const CdynSweep, k: usize, out: *mut CdynSweepRow) -> CdynStatus {
    guard(|| {
        let r = &obj(s, "sweep")?.0;
        let row = r.rows.get(k).ok_or_else(|| {
            Failure(CdynStatus::InvalidInput, format!("row {k} out of range for {} rows", r.rows.len()))
        })?;
        put(
            out,
            CdynSweepRow {
                n: row.n,
                x_error: row.x_error,
                m_error: row.m_error,
                x_projection: row.x_projection,
                m_projection: row.m_projection,
            },
            "out",
        )
    })
}

/// Wasserstein-1 distance between two non-negative atom sets on the line
/// with equal total mass.
///
/// # Safety
/// Each location/mass array must hold its stated number of values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdyn_wasserstein1(
    a_len: usize,
    a_loc: *const f64,
    a_mass: *const f64,
    b_len: usize,
    b_loc: *const f64,
    b_mass: *const f64,
    out: *mut f64,
) -> CdynStatus {
    guard(|| {
        let measure = |len, loc, mass| -> Result<ParticleMeasure, Failure> {
            let loc = slice(loc, len, "locations")?;
            let mass = slice(mass, len, "masses")?;
            Ok(ParticleMeasure::new(1, loc.to_vec(), mass.to_vec())?)
        };
        let d = wasserstein1(&measure(a_len, a_loc, a_mass)?, &measure(b_len, b_loc, b_mass)?)?;
        put(out, d, "out")
    })
}

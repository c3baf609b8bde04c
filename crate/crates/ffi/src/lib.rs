//! C ABI over the sqmanip pipeline.
//!
//! Scenarios and runs are opaque handles owned by the caller and released with
//! the matching `_free` function. Every entry point returns an [`SqStatus`];
//! on failure the message is kept per thread and read back with
//! [`sq_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sqmanip::geometry::{closest_pair, Pose2, ProxyPair, Superquadric2, DEFAULT_MAX_ITER, DEFAULT_TOL};
use sqmanip::harness::{emit, metrics, plan, simulate, MetricsReport, Mode, PlanOutput, Scenario, TelemetryRow};
use sqmanip::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Scenario rejected; the message names the offending field.
    Validation = 3,
    Io = 4,
    /// Geometry, planning or simulation failure.
    Runtime = 5,
    OutOfRange = 6,
    Panic = 7,
}

pub const SQ_MODE_SQ: u32 = 0;
pub const SQ_MODE_ELLIPSE: u32 = 1;

/// Parsed scenario.
pub struct SqScenario {
    inner: Scenario,
}

/// Result of planning, and optionally simulating, one scenario.
pub struct SqRun {
    plan: PlanOutput,
    telemetry: Vec<TelemetryRow>,
    events: Vec<String>,
    report: MetricsReport,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SqMetrics {
    pub plan_time: f64,
    pub min_distance: f64,
    pub arc_length: f64,
    pub jerkiness: f64,
    pub samples: usize,
    pub ticks: usize,
    pub h_co_min: f64,
    pub sim_min_gap: f64,
    pub thrust_min: f64,
    pub thrust_max: f64,
    pub infeasible_ticks: usize,
}

/// One planned sample: `z` is `[x, y, psi, theta1, theta3]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SqSample {
    pub s: f64,
    pub z: [f64; 5],
    pub eef: [f64; 2],
    pub eef_heading: f64,
    pub gap: f64,
}

/// One control tick of a simulated run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SqTick {
    pub t: f64,
    pub q: [f64; 6],
    pub theta: [f64; 3],
    pub thrust: [f64; 6],
    pub min_h: f64,
    pub min_gap: f64,
    pub status: u8,
    pub fallback: bool,
}

/// Planar superquadric: semi-axes, exponent and pose.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SqShape {
    pub a1: f64,
    pub a2: f64,
    pub eps: f64,
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SqGap {
    /// Distance when disjoint, minus the penetration depth otherwise.
    pub gap: f64,
    pub point_a: [f64; 2],
    pub point_b: [f64; 2],
    pub normal_angle: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SqStatus {
    match e.root() {
        Error::Validation { .. } | Error::Overlap { .. } => SqStatus::Validation,
        Error::Io { .. } => SqStatus::Io,
        _ => SqStatus::Runtime,
    }
}

struct Fail(SqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SqStatus::Ok
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
            SqStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SqStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn mode_arg(mode: u32) -> Result<Mode, Fail> {
    match mode {
        SQ_MODE_SQ => Ok(Mode::Sq),
        SQ_MODE_ELLIPSE => Ok(Mode::Ellipse),
        m => Err(Fail(SqStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated, always
/// NUL-terminated when `len > 0`) and returns the untruncated length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sq_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_load(path: *const c_char, out: *mut *mut SqScenario) -> SqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let s = sqmanip::harness::load_scenario(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(SqScenario { inner: s }));
        Ok(())
    })
}

/// Parses a scenario from TOML text; `name` is used when the text has none and may be null.
///
/// # Safety
/// String arguments must be NUL-terminated (or null for `name`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_from_toml(text: *const c_char, name: *const c_char, out: *mut *mut SqScenario) -> SqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let text = str_arg(text, "text")?;
        let name = if name.is_null() { "scenario" } else { str_arg(name, "name")? };
        let s = Scenario::from_toml(text, name)?;
        *out = Box::into_raw(Box::new(SqScenario { inner: s }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_free(scenario: *mut SqScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_scenario_obstacle_count(scenario: *const SqScenario, out: *mut usize) -> SqStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(scenario, "scenario")?.inner.footprints.len();
        Ok(())
    })
}

/// Plans the scenario in `mode` (`SQ_MODE_SQ` or `SQ_MODE_ELLIPSE`) and, when
/// `closed_loop` is set, flies the plan in simulation.
///
/// # Safety
/// `scenario` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_run(scenario: *const SqScenario, mode: u32, closed_loop: bool, out: *mut *mut SqRun) -> SqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let s = &ref_arg(scenario, "scenario")?.inner;
        let p = plan(s, mode_arg(mode)?)?;
        let (telemetry, events) = match closed_loop {
            true => {
                let sim = simulate(s, &p)?;
                (sim.telemetry, sim.events)
            }
            false => (Vec::new(), Vec::new()),
        };
        let report = metrics(&p.rows, &telemetry, p.plan_time)?;
        *out = Box::into_raw(Box::new(SqRun {
            plan: p,
            telemetry,
            events,
            report,
        }));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from [`sq_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_run_free(run: *mut SqRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_run_metrics(run: *const SqRun, out: *mut SqMetrics) -> SqStatus {
    guard(|| {
        let r = &ref_arg(run, "run")?.report;
        *out_arg(out, "out")? = SqMetrics {
            plan_time: r.plan_time,
            min_distance: r.min_distance,
            arc_length: r.arc_length,
            jerkiness: r.jerkiness,
            samples: r.samples,
            ticks: r.ticks,
            h_co_min: r.h_co_min,
            sim_min_gap: r.sim_min_gap,
            thrust_min: r.thrust_min,
            thrust_max: r.thrust_max,
            infeasible_ticks: r.infeasible_ticks,
        };
        Ok(())
    })
}

/// Number of planned samples and of simulated ticks (zero for plan-only runs).
///
/// # Safety
/// `run` must be valid; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn sq_run_counts(run: *const SqRun, samples: *mut usize, ticks: *mut usize) -> SqStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        if let Some(s) = samples.as_mut() {
            *s = r.plan.rows.len();
        }
        if let Some(t) = ticks.as_mut() {
            *t = r.telemetry.len();
        }
        Ok(())
    })
}

/// # Safety
/// `run` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_run_sample(run: *const SqRun, index: usize, out: *mut SqSample) -> SqStatus {
    guard(|| {
        let rows = &ref_arg(run, "run")?.plan.rows;
        let r = rows
            .get(index)
            .ok_or_else(|| Fail(SqStatus::OutOfRange, format!("sample {index} of {}", rows.len())))?;
        let mut z = [0.0; 5];
        z.copy_from_slice(r.z.as_slice());
        *out_arg(out, "out")? = SqSample {
            s: r.s,
            z,
            eef: [r.eef.x, r.eef.y],
            eef_heading: r.eef_heading,
            gap: r.gap,
        };
        Ok(())
    })
}

/// # Safety
/// `run` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_run_tick(run: *const SqRun, index: usize, out: *mut SqTick) -> SqStatus {
    guard(|| {
        let tel = &ref_arg(run, "run")?.telemetry;
        let r = tel
            .get(index)
            .ok_or_else(|| Fail(SqStatus::OutOfRange, format!("tick {index} of {}", tel.len())))?;
        let mut tick = SqTick {
            t: r.t,
            min_h: r.min_h,
            min_gap: r.min_gap,
            status: r.status,
            fallback: r.fallback,
            ..Default::default()
        };
        tick.q.copy_from_slice(r.q.as_slice());
        tick.theta.copy_from_slice(r.theta.as_slice());
        tick.thrust.copy_from_slice(r.thrust.as_slice());
        *out_arg(out, "out")? = tick;
        Ok(())
    })
}

/// Writes the run's output files into `dir`, creating it if needed.
///
/// # Safety
/// `run` must be valid and `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sq_run_emit(run: *const SqRun, dir: *const c_char) -> SqStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        let dir = Path::new(str_arg(dir, "dir")?);
        let tel = (!r.telemetry.is_empty()).then_some((r.telemetry.as_slice(), r.events.as_slice()));
        emit(dir, &r.plan.rows, tel, &r.plan.voronoi, &r.report)?;
        Ok(())
    })
}

/// Signed gap between two planar superquadrics and the closest points.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sq_closest_gap(a: *const SqShape, b: *const SqShape, out: *mut SqGap) -> SqStatus {
    guard(|| {
        let shape = |s: &SqShape| Superquadric2::new(s.a1, s.a2, s.eps, Pose2::new(s.angle, s.x, s.y));
        let sa = shape(ref_arg(a, "a")?).map_err(|e| Fail(SqStatus::InvalidArgument, e.to_string()))?;
        let sb = shape(ref_arg(b, "b")?).map_err(|e| Fail(SqStatus::InvalidArgument, e.to_string()))?;
        let c = closest_pair(&sa, &sb, &ProxyPair::facing(&sa, &sb), DEFAULT_TOL, DEFAULT_MAX_ITER);
        *out_arg(out, "out")? = SqGap {
            gap: c.gap,
            point_a: [c.point_i.x, c.point_i.y],
            point_b: [c.point_j.x, c.point_j.y],
            normal_angle: c.normal_angle,
        };
        Ok(())
    })
}

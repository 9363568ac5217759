//! C ABI over `qwaypoint`.
//!
//! Objects are opaque handles released with the matching `*_free`. Every
//! fallible call returns a [`QwStatus`]; on failure the message is available
//! from [`qw_last_error`] on the same thread. Matrices cross the boundary as
//! row-major `n*n` arrays, split into real and imaginary parts when complex.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qwaypoint::matspace::CMatrix;
use qwaypoint::nalgebra::DMatrix;
use qwaypoint::{
    default_theta_grid, lie_closure, load_system, propagate, spanning_rank, theorem1_waypoints,
    theorem3_waypoints, trajectory_independence, Controllability, ControlField, Error,
    PropagatorTrajectory, QuantumSystem, SpanReport, WaypointSet,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    NotControllable = 5,
    Postcondition = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwControllability {
    No = 0,
    SU = 1,
    U = 2,
}

/// A validated `(H0, μ)` pair.
pub struct QwSystem(QuantumSystem);

/// An ordered list of way-point unitaries.
pub struct QwWaypointSet(WaypointSet);

/// Spanning-rank report of a set of conjugated dipoles.
pub struct QwSpanReport(SpanReport);

/// Propagator samples `U(t_k)` at the field nodes.
pub struct QwTrajectory(PropagatorTrajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QwStatus {
    match e {
        Error::Parse(_) | Error::InvalidField(_) => QwStatus::Parse,
        Error::Io(_) => QwStatus::Io,
        Error::Validation { .. } => QwStatus::Validation,
        Error::NotControllable { .. } => QwStatus::NotControllable,
        Error::Postcondition(_) | Error::NoWitness { .. } => QwStatus::Postcondition,
        _ => QwStatus::InvalidArgument,
    }
}

fn fail(status: QwStatus, msg: impl Into<String>) -> QwStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), QwStatus>) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QwStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(QwStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: qwaypoint::Result<T>) -> Result<T, QwStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, QwStatus> {
    p.as_ref().ok_or_else(|| fail(QwStatus::NullPointer, "null handle"))
}

fn check_out<T>(p: *mut T) -> Result<(), QwStatus> {
    if p.is_null() {
        Err(fail(QwStatus::NullPointer, "null output pointer"))
    } else {
        Ok(())
    }
}

unsafe fn write_complex(m: &CMatrix, re: *mut f64, im: *mut f64) -> Result<(), QwStatus> {
    check_out(re)?;
    check_out(im)?;
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            *re.add(i * n + j) = m[(i, j)].re;
            *im.add(i * n + j) = m[(i, j)].im;
        }
    }
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn qw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a system from row-major real `n*n` arrays.
///
/// # Safety
/// `h0` and `mu` must point to `n*n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_system_new(n: usize, h0: *const f64, mu: *const f64, out: *mut *mut QwSystem) -> QwStatus {
    guard(|| {
        check_out(out)?;
        if h0.is_null() || mu.is_null() {
            return Err(fail(QwStatus::NullPointer, "null matrix"));
        }
        let len = n.checked_mul(n).ok_or_else(|| fail(QwStatus::InvalidArgument, "dimension overflow"))?;
        let h = DMatrix::from_row_slice(n, n, std::slice::from_raw_parts(h0, len));
        let m = DMatrix::from_row_slice(n, n, std::slice::from_raw_parts(mu, len));
        let sys = lift(QuantumSystem::new(h, m, None))?;
        *out = Box::into_raw(Box::new(QwSystem(sys)));
        Ok(())
    })
}

/// Loads a JSON or CSV system file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_system_load(path: *const c_char, out: *mut *mut QwSystem) -> QwStatus {
    guard(|| {
        check_out(out)?;
        if path.is_null() {
            return Err(fail(QwStatus::NullPointer, "null path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| fail(QwStatus::InvalidArgument, "path is not UTF-8"))?;
        let file = File::open(path).map_err(|e| fail(QwStatus::Io, format!("{path}: {e}")))?;
        let sys = lift(load_system(BufReader::new(file)))?;
        *out = Box::into_raw(Box::new(QwSystem(sys)));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_system_free(sys: *mut QwSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Dimension `N`, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_system_dim(sys: *const QwSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.dim())
}

/// Lie-closure verdict and dimension.
///
/// # Safety
/// `sys` must be a live handle; `verdict` and `dimension` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_controllability(
    sys: *const QwSystem,
    verdict: *mut QwControllability,
    dimension: *mut usize,
) -> QwStatus {
    guard(|| {
        let s = deref(sys)?;
        check_out(verdict)?;
        check_out(dimension)?;
        let r = lie_closure(s.0.h0(), s.0.mu());
        *verdict = match r.verdict {
            Controllability::No => QwControllability::No,
            Controllability::SU => QwControllability::SU,
            Controllability::U => QwControllability::U,
        };
        *dimension = r.dimension;
        Ok(())
    })
}

/// Dipole-dependent way-points (four per level pair) for the system's μ.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_waypoints_dipole_dependent(sys: *const QwSystem, out: *mut *mut QwWaypointSet) -> QwStatus {
    guard(|| {
        let s = deref(sys)?;
        check_out(out)?;
        let set = lift(theorem1_waypoints(&s.0.dipole()))?;
        *out = Box::into_raw(Box::new(QwWaypointSet(set)));
        Ok(())
    })
}

/// Dipole-independent way-points for dimension `n` on the default angle grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_waypoints_dipole_independent(n: usize, out: *mut *mut QwWaypointSet) -> QwStatus {
    guard(|| {
        check_out(out)?;
        let set = lift(theorem3_waypoints(n, &default_theta_grid()))?;
        *out = Box::into_raw(Box::new(QwWaypointSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_waypoints_len(set: *const QwWaypointSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Copies way-point `index` (0-based) into `re` and `im`, each `n*n` doubles.
///
/// # Safety
/// `set` must be a live handle; `re` and `im` must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_waypoints_get(set: *const QwWaypointSet, index: usize, re: *mut f64, im: *mut f64) -> QwStatus {
    guard(|| {
        let s = deref(set)?;
        let u = s.0.unitaries().get(index).ok_or_else(|| fail(QwStatus::OutOfRange, format!("index {index} out of range")))?;
        write_complex(u.matrix(), re, im)
    })
}

/// # Safety
/// `set` must be null or a live handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_waypoints_free(set: *mut QwWaypointSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Span of `W* μ W` over the set, for the system's μ.
///
/// # Safety
/// `sys` and `set` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_waypoints_span(
    sys: *const QwSystem,
    set: *const QwWaypointSet,
    out: *mut *mut QwSpanReport,
) -> QwStatus {
    guard(|| {
        let s = deref(sys)?;
        let w = deref(set)?;
        check_out(out)?;
        let dipoles = lift(w.0.conjugated_dipoles(&s.0.dipole()))?;
        let report = lift(spanning_rank(&dipoles))?;
        *out = Box::into_raw(Box::new(QwSpanReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_span_rank(report: *const QwSpanReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.rank)
}

/// Matrix dimension `N`; a full span has rank `N²−1`.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_span_dim(report: *const QwSpanReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.dim)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_span_is_full(report: *const QwSpanReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.full)
}

/// Copies up to `len` singular values (descending) and returns how many exist.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `len` doubles or be null
/// when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn qw_span_singular_values(report: *const QwSpanReport, buf: *mut f64, len: usize) -> usize {
    let Some(r) = report.as_ref() else { return 0 };
    let sv = &r.0.singular_values;
    if !buf.is_null() {
        for (k, v) in sv.iter().take(len).enumerate() {
            *buf.add(k) = *v;
        }
    }
    sv.len()
}

/// # Safety
/// `report` must be null or a live handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_span_free(report: *mut QwSpanReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Propagates `m` piecewise-constant amplitudes over `horizon`.
///
/// # Safety
/// `sys` must be a live handle; `values` must hold `m` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qw_propagate(
    sys: *const QwSystem,
    horizon: f64,
    values: *const f64,
    m: usize,
    out: *mut *mut QwTrajectory,
) -> QwStatus {
    guard(|| {
        let s = deref(sys)?;
        check_out(out)?;
        if values.is_null() && m > 0 {
            return Err(fail(QwStatus::NullPointer, "null field values"));
        }
        let v = if m == 0 { Vec::new() } else { std::slice::from_raw_parts(values, m).to_vec() };
        let field = lift(ControlField::new(horizon, v))?;
        *out = Box::into_raw(Box::new(QwTrajectory(propagate(&s.0, &field))));
        Ok(())
    })
}

/// Number of samples, `M + 1`.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_trajectory_len(traj: *const QwTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Copies `U(t_k)` into `re` and `im`, each `n*n` doubles.
///
/// # Safety
/// `traj` must be a live handle; `re` and `im` must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_trajectory_unitary(traj: *const QwTrajectory, k: usize, re: *mut f64, im: *mut f64) -> QwStatus {
    guard(|| {
        let t = deref(traj)?;
        let u = t.0.unitaries().get(k).ok_or_else(|| fail(QwStatus::OutOfRange, format!("sample {k} out of range")))?;
        write_complex(u.matrix(), re, im)
    })
}

/// Span of the conjugated dipole over every trajectory sample.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_trajectory_span(traj: *const QwTrajectory, out: *mut *mut QwSpanReport) -> QwStatus {
    guard(|| {
        let t = deref(traj)?;
        check_out(out)?;
        let report = lift(trajectory_independence(&t.0, None))?;
        *out = Box::into_raw(Box::new(QwSpanReport(report)));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_trajectory_free(traj: *mut QwTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

//! C ABI over the `minhom` engine.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns an [`MhStatus`]; the
//! message of the last failure on the calling thread is available through
//! [`mh_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use minhom::curve::{winding_number, ClosedCurve};
use minhom::homotopy::{sample_frame, Homotopy};
use minhom::oracle::winding_area;
use minhom::pipeline::{run_pipeline, RunConfig};
use minhom::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidCurve = 2,
    Domain = 3,
    Config = 4,
    Precondition = 5,
    IndeterminateWinding = 6,
    DegenerateCurve = 7,
    MeshQuality = 8,
    Solver = 9,
    DescentFailure = 10,
    NonConvergence = 11,
    DiscontinuousParam = 12,
    Parse = 13,
    Output = 14,
    Panic = 15,
}

impl From<&Error> for MhStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::InvalidCurve { .. } => MhStatus::InvalidCurve,
            Error::Domain(_) => MhStatus::Domain,
            Error::Config(_) => MhStatus::Config,
            Error::Precondition(_) => MhStatus::Precondition,
            Error::IndeterminateWinding { .. } => MhStatus::IndeterminateWinding,
            Error::DegenerateCurve(_) => MhStatus::DegenerateCurve,
            Error::MeshQuality(_) => MhStatus::MeshQuality,
            Error::Solver(_) => MhStatus::Solver,
            Error::DescentFailure(_) => MhStatus::DescentFailure,
            Error::NonConvergence { .. } => MhStatus::NonConvergence,
            Error::DiscontinuousParam { .. } => MhStatus::DiscontinuousParam,
            Error::Parse(_) => MhStatus::Parse,
            Error::Output(_) => MhStatus::Output,
            Error::SweepAborted { .. } => unreachable!("root looks through sweep aborts"),
        }
    }
}

/// Opaque closed planar curve.
pub struct MhCurve {
    inner: ClosedCurve,
}

/// Opaque solve result.
pub struct MhSolution {
    area0: f64,
    planarity: f64,
    swept: f64,
    passed: bool,
    homotopy: Homotopy,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| {
        let mut v = msg.into_bytes();
        v.retain(|&b| b != 0);
        *e.borrow_mut() = v;
    });
}

fn guard(f: impl FnOnce() -> Result<(), MhStatus>) -> MhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MhStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            MhStatus::Panic
        }
    }
}

fn fail(e: Error) -> MhStatus {
    let s = MhStatus::from(&e);
    set_error(format!("{}: {e}", e.root().kind()));
    s
}

fn null(what: &str) -> MhStatus {
    set_error(format!("null pointer: {what}"));
    MhStatus::NullPointer
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mh_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build a curve from `n` interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must be valid for `2 * n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn mh_curve_from_points(xy: *const f64, n: usize, out: *mut *mut MhCurve) -> MhStatus {
    guard(|| {
        if xy.is_null() {
            return Err(null("xy"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let raw = std::slice::from_raw_parts(xy, 2 * n);
        let points = raw.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let inner = ClosedCurve::new(points).map_err(fail)?;
        *out = Box::into_raw(Box::new(MhCurve { inner }));
        Ok(())
    })
}

/// Release a curve. Null is ignored.
///
/// # Safety
/// `curve` must come from [`mh_curve_from_points`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn mh_curve_free(curve: *mut MhCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Winding number of `curve` around `(x, y)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mh_winding_number(curve: *const MhCurve, x: f64, y: f64, out: *mut i64) -> MhStatus {
    guard(|| {
        let c = curve.as_ref().ok_or_else(|| null("curve"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = winding_number(&c.inner, [x, y]).map_err(fail)?;
        Ok(())
    })
}

/// Raster estimate of the integral of `|w|` with its error bound.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mh_winding_area(
    curve: *const MhCurve,
    resolution: usize,
    value: *mut f64,
    error: *mut f64,
) -> MhStatus {
    guard(|| {
        let c = curve.as_ref().ok_or_else(|| null("curve"))?;
        if value.is_null() || error.is_null() {
            return Err(null("value/error"));
        }
        let est = winding_area(&c.inner, resolution).map_err(fail)?;
        *value = est.value;
        *error = est.error;
        Ok(())
    })
}

/// Run the full pipeline. `config_json` may be null for defaults.
///
/// # Safety
/// `curve` and `out` must be valid; `config_json` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mh_solve(
    curve: *const MhCurve,
    config_json: *const c_char,
    out: *mut *mut MhSolution,
) -> MhStatus {
    guard(|| {
        let c = curve.as_ref().ok_or_else(|| null("curve"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            let s = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|e| fail(Error::Config(format!("config is not UTF-8: {e}"))))?;
            RunConfig::from_json_str(s).map_err(fail)?
        };
        let o = run_pipeline(&c.inner, &cfg).map_err(fail)?;
        *out = Box::into_raw(Box::new(MhSolution {
            area0: o.limit.area0,
            planarity: o.limit.planarity_defect,
            swept: o.swept.total,
            passed: o.verdict.passed,
            homotopy: o.homotopy,
        }));
        Ok(())
    })
}

/// Release a solution. Null is ignored.
///
/// # Safety
/// `sol` must come from [`mh_solve`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_free(sol: *mut MhSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Extrapolated limit area. NaN for a null handle.
///
/// # Safety
/// `sol` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_area0(sol: *const MhSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.area0)
}

/// Planarity defect of the last solve. NaN for a null handle.
///
/// # Safety
/// `sol` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_planarity(sol: *const MhSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.planarity)
}

/// Area swept by the homotopy. NaN for a null handle.
///
/// # Safety
/// `sol` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_swept_area(sol: *const MhSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.swept)
}

/// 1 if every verdict check passed, 0 otherwise or for a null handle.
///
/// # Safety
/// `sol` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_passed(sol: *const MhSolution) -> i32 {
    sol.as_ref().map_or(0, |s| s.passed as i32)
}

/// Sample the homotopy at time `t` into `out_xy`, which holds `2 * n`
/// doubles as interleaved `x, y`.
///
/// # Safety
/// `sol` must be valid and `out_xy` valid for `2 * n` writes.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_frame(sol: *const MhSolution, t: f64, n: usize, out_xy: *mut f64) -> MhStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out_xy.is_null() {
            return Err(null("out_xy"));
        }
        let f = sample_frame(&s.homotopy, t, n).map_err(fail)?;
        let dst = std::slice::from_raw_parts_mut(out_xy, 2 * n);
        for (d, p) in dst.chunks_exact_mut(2).zip(&f.points) {
            d.copy_from_slice(p);
        }
        Ok(())
    })
}

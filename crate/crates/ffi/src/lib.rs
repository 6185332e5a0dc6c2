//! C ABI over `cavity_bistability`.
//!
//! Every fallible function returns a [`CbStatus`]; on failure the message is
//! available from [`cb_last_error_message`] on the same thread. Objects are
//! opaque handles created by `cb_*_new`-style functions and released with the
//! matching `cb_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cavity_bistability::analysis::{fit_model, FitBounds, FitOptions};
use cavity_bistability::dynamics::{
    CavitySystem, ChirpSpec, Drive, IntegrationOptions, NormalizedState, SaturationReading,
    Trajectory,
};
use cavity_bistability::params::{ModelParams, PhysicalParams, ShiftSign};
use cavity_bistability::steady::{
    bistable_region, hysteresis_scan, steady_roots, ScanDirection, ScanTrace, TracePoint,
};
use cavity_bistability::Error;

pub const CB_SHIFT_FIGURE_CONVENTION: i32 = 0;
pub const CB_SHIFT_AS_WRITTEN: i32 = 1;
pub const CB_SCAN_INCREASING: i32 = 0;
pub const CB_SCAN_DECREASING: i32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Laboratory parameters; angular frequencies in rad/s, SI units otherwise.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CbPhysicalParams {
    pub kappa: f64,
    pub gamma: f64,
    pub g0: f64,
    pub delta_ca: f64,
    pub n_atoms: f64,
    pub i_sat: f64,
    pub enhancement_g: f64,
    pub pump_power: f64,
    pub waist: f64,
    pub intensity_calibration: f64,
}

impl From<&PhysicalParams> for CbPhysicalParams {
    fn from(p: &PhysicalParams) -> Self {
        CbPhysicalParams {
            kappa: p.kappa,
            gamma: p.gamma,
            g0: p.g0,
            delta_ca: p.delta_ca,
            n_atoms: p.n_atoms,
            i_sat: p.i_sat,
            enhancement_g: p.enhancement_g,
            pump_power: p.pump_power,
            waist: p.waist,
            intensity_calibration: p.intensity_calibration,
        }
    }
}

impl From<&CbPhysicalParams> for PhysicalParams {
    fn from(p: &CbPhysicalParams) -> Self {
        PhysicalParams {
            kappa: p.kappa,
            gamma: p.gamma,
            g0: p.g0,
            delta_ca: p.delta_ca,
            n_atoms: p.n_atoms,
            i_sat: p.i_sat,
            mirror_t: None,
            mirror_r: None,
            enhancement_g: p.enhancement_g,
            pump_power: p.pump_power,
            waist: p.waist,
            intensity_calibration: p.intensity_calibration,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CbFitResult {
    pub a_est: f64,
    pub s_est: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Dimensionless model plus the rates used for stability.
pub struct CbModel {
    model: ModelParams,
    rates: PhysicalParams,
}

pub struct CbScanTrace(ScanTrace);

pub struct CbTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: CbStatus,
    message: String,
}

impl Failure {
    fn new(status: CbStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Failure::new(CbStatus::NullPointer, format!("`{name}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numerical() {
            CbStatus::Numerical
        } else {
            CbStatus::InvalidArgument
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CbStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(_) => {
            set_last_error("internal panic");
            CbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn shift_sign(code: i32) -> Result<ShiftSign, Failure> {
    match code {
        CB_SHIFT_FIGURE_CONVENTION => Ok(ShiftSign::FigureConvention),
        CB_SHIFT_AS_WRITTEN => Ok(ShiftSign::AsWritten),
        other => Err(Failure::new(
            CbStatus::InvalidArgument,
            format!("unknown shift sign {other}"),
        )),
    }
}

fn need_capacity(needed: usize, capacity: usize) -> Result<(), Failure> {
    if needed > capacity {
        Err(Failure::new(
            CbStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {needed} required"),
        ))
    } else {
        Ok(())
    }
}

/// Message of the most recent failure on this thread; empty if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default laboratory parameter set.
#[no_mangle]
pub extern "C" fn cb_physical_default() -> CbPhysicalParams {
    CbPhysicalParams::from(&PhysicalParams::default())
}

/// Model with explicit A and S; stability uses the default rates.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_model_new(
    a: f64,
    s: f64,
    shift: i32,
    out: *mut *mut CbModel,
) -> CbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = ModelParams::new(a, s, shift_sign(shift)?)?;
        *out = Box::into_raw(Box::new(CbModel {
            model,
            rates: PhysicalParams::default(),
        }));
        Ok(())
    })
}

/// Model with A and S derived from laboratory parameters.
///
/// # Safety
/// `params` must point to a valid struct and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_model_from_physical(
    params: *const CbPhysicalParams,
    shift: i32,
    out: *mut *mut CbModel,
) -> CbStatus {
    guard(|| {
        let rates = PhysicalParams::from(deref(params, "params")?);
        let out = out_ref(out, "out")?;
        let model = ModelParams::from_physical(&rates, shift_sign(shift)?)?;
        *out = Box::into_raw(Box::new(CbModel { model, rates }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from `cb_model_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_model_free(model: *mut CbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `a` and `s` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_model_params(
    model: *const CbModel,
    a: *mut f64,
    s: *mut f64,
) -> CbStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        *out_ref(a, "a")? = m.a;
        *out_ref(s, "s")? = m.s;
        Ok(())
    })
}

/// Steady intensities at one detuning (ascending) with stability flags.
///
/// Writes up to `capacity` values; `count` receives the number of roots (1 or 3).
///
/// # Safety
/// `intensities` and `stable` must hold `capacity` elements; `count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_steady_roots(
    model: *const CbModel,
    detuning: f64,
    intensities: *mut f64,
    stable: *mut bool,
    capacity: usize,
    count: *mut usize,
) -> CbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let count = out_ref(count, "count")?;
        let solution = steady_roots(detuning, &m.model, &m.rates)?;
        *count = solution.roots.len();
        need_capacity(solution.roots.len(), capacity)?;
        let values = slice_mut(intensities, capacity, "intensities")?;
        let flags = slice_mut(stable, capacity, "stable")?;
        for (k, root) in solution.roots.iter().enumerate() {
            values[k] = root.intensity;
            flags[k] = root.stable;
        }
        Ok(())
    })
}

/// Bistable interval inside [`search_lo`, `search_hi`]; `found` is false when there is none.
///
/// # Safety
/// `lower`, `upper` and `found` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_bistable_region(
    model: *const CbModel,
    search_lo: f64,
    search_hi: f64,
    lower: *mut f64,
    upper: *mut f64,
    found: *mut bool,
) -> CbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let (lower, upper, found) = (
            out_ref(lower, "lower")?,
            out_ref(upper, "upper")?,
            out_ref(found, "found")?,
        );
        match bistable_region(&m.model, (search_lo, search_hi))? {
            Some(r) => {
                *lower = r.lower;
                *upper = r.upper;
                *found = true;
            }
            None => {
                *lower = f64::NAN;
                *upper = f64::NAN;
                *found = false;
            }
        }
        Ok(())
    })
}

/// Hysteresis scan over `grid`, which must be ordered in `direction`.
///
/// # Safety
/// `grid` must hold `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_scan(
    model: *const CbModel,
    grid: *const f64,
    len: usize,
    direction: i32,
    out: *mut *mut CbScanTrace,
) -> CbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let grid = slice(grid, len, "grid")?;
        let out = out_ref(out, "out")?;
        let direction = match direction {
            CB_SCAN_INCREASING => ScanDirection::Increasing,
            CB_SCAN_DECREASING => ScanDirection::Decreasing,
            other => {
                return Err(Failure::new(
                    CbStatus::InvalidArgument,
                    format!("unknown direction {other}"),
                ))
            }
        };
        let trace = hysteresis_scan(grid, direction, &m.model, &m.rates)?;
        *out = Box::into_raw(Box::new(CbScanTrace(trace)));
        Ok(())
    })
}

/// Wraps measured samples; the direction follows from the detuning order.
///
/// # Safety
/// `detunings` and `intensities` must hold `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_scan_from_samples(
    detunings: *const f64,
    intensities: *const f64,
    len: usize,
    out: *mut *mut CbScanTrace,
) -> CbStatus {
    guard(|| {
        let d = slice(detunings, len, "detunings")?;
        let i = slice(intensities, len, "intensities")?;
        let out = out_ref(out, "out")?;
        if len < 2 {
            return Err(Failure::new(
                CbStatus::InvalidArgument,
                "need at least two samples",
            ));
        }
        let direction = if d[1] > d[0] {
            ScanDirection::Increasing
        } else {
            ScanDirection::Decreasing
        };
        let samples = d
            .iter()
            .zip(i)
            .map(|(&detuning, &intensity)| TracePoint {
                detuning,
                intensity,
            })
            .collect();
        *out = Box::into_raw(Box::new(CbScanTrace(ScanTrace { direction, samples })));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cb_scan_len(trace: *const CbScanTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// Copies the samples in scan order.
///
/// # Safety
/// `detunings` and `intensities` must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn cb_scan_copy(
    trace: *const CbScanTrace,
    detunings: *mut f64,
    intensities: *mut f64,
    capacity: usize,
) -> CbStatus {
    guard(|| {
        let t = &deref(trace, "trace")?.0;
        need_capacity(t.len(), capacity)?;
        let d = slice_mut(detunings, capacity, "detunings")?;
        let i = slice_mut(intensities, capacity, "intensities")?;
        for (k, s) in t.samples.iter().enumerate() {
            d[k] = s.detuning;
            i[k] = s.intensity;
        }
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_scan_free(trace: *mut CbScanTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Fits A and S to an increasing and a decreasing trace on one grid.
///
/// Bounds are `[a_lo, a_hi] x [s_lo, s_hi]`; stability uses the default rates.
///
/// # Safety
/// Both traces must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_fit(
    increasing: *const CbScanTrace,
    decreasing: *const CbScanTrace,
    a_lo: f64,
    a_hi: f64,
    s_lo: f64,
    s_hi: f64,
    shift: i32,
    out: *mut CbFitResult,
) -> CbStatus {
    guard(|| {
        let up = &deref(increasing, "increasing")?.0;
        let down = &deref(decreasing, "decreasing")?.0;
        let out = out_ref(out, "out")?;
        let options = FitOptions {
            bounds: FitBounds {
                a: (a_lo, a_hi),
                s: (s_lo, s_hi),
            },
            shift_sign: shift_sign(shift)?,
            ..FitOptions::default()
        };
        let fit = fit_model(up, down, &options)?;
        *out = CbFitResult {
            a_est: fit.a_est,
            s_est: fit.s_est,
            residual_rms: fit.residual_rms,
            converged: fit.converged,
            iterations: fit.iterations,
        };
        Ok(())
    })
}

/// Integrates a linear detuning chirp from the dark cavity.
///
/// `fixed_step` selects the deterministic fixed-step integrator.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cb_integrate_chirp(
    model: *const CbModel,
    start: f64,
    end: f64,
    duration_s: f64,
    fixed_step: bool,
    out: *mut *mut CbTrajectory,
) -> CbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let out = out_ref(out, "out")?;
        let chirp = ChirpSpec::new(start, end, duration_s)?;
        let system = CavitySystem::new(m.model, &m.rates, SaturationReading::Detuned)?;
        let options = if fixed_step {
            IntegrationOptions::fixed_step()
        } else {
            IntegrationOptions::default()
        };
        let trajectory = system.integrate(NormalizedState::DARK, &Drive::Chirp(chirp), &options)?;
        *out = Box::into_raw(Box::new(CbTrajectory(trajectory)));
        Ok(())
    })
}

/// Number of output samples; 0 for a null handle.
///
/// # Safety
/// `trajectory` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cb_trajectory_len(trajectory: *const CbTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.0.len())
}

/// Copies time (s), detuning, |e|² and population fraction per sample.
///
/// # Safety
/// All four buffers must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn cb_trajectory_copy(
    trajectory: *const CbTrajectory,
    times: *mut f64,
    detunings: *mut f64,
    intensities: *mut f64,
    pop_fractions: *mut f64,
    capacity: usize,
) -> CbStatus {
    guard(|| {
        let t = &deref(trajectory, "trajectory")?.0;
        need_capacity(t.len(), capacity)?;
        let times = slice_mut(times, capacity, "times")?;
        let detunings = slice_mut(detunings, capacity, "detunings")?;
        let intensities = slice_mut(intensities, capacity, "intensities")?;
        let pops = slice_mut(pop_fractions, capacity, "pop_fractions")?;
        for (k, state) in t.states.iter().enumerate() {
            times[k] = t.times[k];
            detunings[k] = t.detunings[k];
            intensities[k] = state.intensity();
            pops[k] = state.pop_fraction;
        }
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_trajectory_free(trajectory: *mut CbTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Null-terminated crate version.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn failures_set_the_message() {
        let status = guard(|| Err(Failure::new(CbStatus::InvalidArgument, "bad\0input")));
        assert_eq!(status, CbStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(cb_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "bad input");
    }

    #[test]
    fn panics_are_contained() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, CbStatus::Panic);
    }

    #[test]
    fn error_kinds_map_to_status() {
        assert_eq!(
            Failure::from(Error::EigenSolver).status,
            CbStatus::Numerical
        );
        assert_eq!(
            Failure::from(Error::InvalidInput("x".into())).status,
            CbStatus::InvalidArgument
        );
    }

    #[test]
    fn physical_round_trip() {
        let p = PhysicalParams::default();
        assert_eq!(PhysicalParams::from(&CbPhysicalParams::from(&p)), p);
    }
}

//! C interface to the quench simulator.
//!
//! A `DqptSimulation` owns one coupling table and, after a run, the exact
//! trace of return probabilities and observables. Every entry point returns a
//! `DqptStatus`; on failure `dqpt_last_error_message` describes the problem.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dqpt::dqpt::{
    crossing_time, fit_critical_time, rate_functions, CriticalTimeEstimate, LogProbabilitySeries, RateTrace,
};
use dqpt::engine::{evolve_trace_with, initial_state, uniform_grid, Direction, Method, PropagationPlan};
use dqpt::entanglement::{half_chain_entropy, squeezing_exact};
use dqpt::model::CouplingMatrix;
use dqpt::observables::{magnetization_from_x_weights, x_weights, ReturnProbabilities};
use dqpt::sampler::{derive_seeds, estimate_return_probabilities, parse_basis, sample_basis};
use dqpt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ResourceLimit = 3,
    Numerical = 4,
    NoCrossing = 5,
    NotRun = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

pub const DQPT_METHOD_KRYLOV: u32 = 0;
pub const DQPT_METHOD_DENSE: u32 = 1;

pub const DQPT_COLUMN_TAU: u32 = 0;
pub const DQPT_COLUMN_P_RIGHT: u32 = 1;
pub const DQPT_COLUMN_P_LEFT: u32 = 2;
pub const DQPT_COLUMN_LAMBDA_TOTAL: u32 = 3;
pub const DQPT_COLUMN_LAMBDA_MIN: u32 = 4;
pub const DQPT_COLUMN_M_X: u32 = 5;
/// NaN unless the run requested entanglement observables.
pub const DQPT_COLUMN_ENTROPY: u32 = 6;
/// NaN unless requested, and where the mean spin vanishes.
pub const DQPT_COLUMN_XI_SQUARED: u32 = 7;
/// Shot estimates; NaN unless the run sampled.
pub const DQPT_COLUMN_P_RIGHT_SAMPLED: u32 = 8;
pub const DQPT_COLUMN_P_LEFT_SAMPLED: u32 = 9;

pub const DQPT_ESTIMATE_CROSSING: u32 = 0;
pub const DQPT_ESTIMATE_LINEAR_FIT: u32 = 1;
/// Linear fit on the sampled probabilities with their binomial errors.
pub const DQPT_ESTIMATE_SAMPLED_FIT: u32 = 2;

/// Time grid and propagation settings for `dqpt_simulation_run`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqptRunOptions {
    /// Final `τ = |B| t`.
    pub time_max: f64,
    /// Grid points including `τ = 0`.
    pub n_points: u32,
    pub method: u32,
    pub krylov_dim: u32,
    pub tolerance: f64,
    /// Shots per grid point; 0 skips sampling.
    pub shots: u64,
    pub seed: u64,
    /// Nonzero to fill the entropy and squeezing columns (even `n_spins` only).
    pub entanglement: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DqptEstimate {
    pub tau_crit: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Shot estimates `(value, σ)` of `P_⇒` and `P_⇐`.
type Sampled = (Vec<(f64, f64)>, Vec<(f64, f64)>);

struct Trace {
    rates: RateTrace,
    m_x: Vec<f64>,
    entropy: Vec<f64>,
    xi_squared: Vec<f64>,
    sampled: Option<Sampled>,
}

/// Opaque simulation handle.
pub struct DqptSimulation {
    couplings: CouplingMatrix,
    trace: Option<Trace>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> DqptStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::DimensionMismatch { .. }
        | Error::UnknownAxis(_)
        | Error::WrongBasis => DqptStatus::InvalidArgument,
        Error::ResourceLimit { .. } => DqptStatus::ResourceLimit,
        Error::NoCrossing => DqptStatus::NoCrossing,
        _ => DqptStatus::Numerical,
    }
}

fn fail(status: DqptStatus, message: impl Into<String>) -> DqptStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> Result<(), DqptStatus>) -> DqptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DqptStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(DqptStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: Result<T, Error>) -> Result<T, DqptStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// Message for the most recent failure on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn dqpt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dqpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dqpt_default_run_options() -> DqptRunOptions {
    DqptRunOptions {
        time_max: 3.0,
        n_points: 200,
        method: DQPT_METHOD_KRYLOV,
        krylov_dim: 30,
        tolerance: 1e-10,
        shots: 0,
        seed: 0,
        entanglement: 0,
    }
}

/// Power-law couplings `J_ij ∝ |i-j|^-α` with Kac-normalized mean `j_over_b`
/// and unit field. On success `*out` owns a handle for `dqpt_simulation_free`.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn dqpt_simulation_new(
    n_spins: u32,
    alpha: f64,
    j_over_b: f64,
    out: *mut *mut DqptSimulation,
) -> DqptStatus {
    if out.is_null() {
        return fail(DqptStatus::NullPointer, "out is null");
    }
    guard(|| {
        let couplings = lift(CouplingMatrix::power_law(n_spins as usize, alpha, j_over_b, 1.0))?;
        let sim = Box::new(DqptSimulation { couplings, trace: None });
        // SAFETY: checked non-null above; the caller guarantees validity.
        unsafe { *out = Box::into_raw(sim) };
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from `dqpt_simulation_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dqpt_simulation_free(sim: *mut DqptSimulation) {
    if !sim.is_null() {
        // SAFETY: ownership returns from the caller, per the contract above.
        drop(unsafe { Box::from_raw(sim) });
    }
}

fn method_of(code: u32) -> Result<Method, DqptStatus> {
    match code {
        DQPT_METHOD_KRYLOV => Ok(Method::Krylov),
        DQPT_METHOD_DENSE => Ok(Method::DenseEigen),
        other => Err(fail(DqptStatus::InvalidArgument, format!("unknown method {other}"))),
    }
}

fn run(sim: &mut DqptSimulation, options: &DqptRunOptions) -> Result<(), DqptStatus> {
    if options.n_points < 2 || !(options.time_max > 0.0 && options.time_max.is_finite()) {
        return Err(fail(
            DqptStatus::InvalidArgument,
            "need n_points >= 2 and a finite time_max > 0",
        ));
    }
    let n = sim.couplings.n_spins();
    let grid = uniform_grid(options.time_max, options.n_points as usize);
    let plan = PropagationPlan {
        method: method_of(options.method)?,
        krylov_dim: options.krylov_dim as usize,
        step_tolerance: options.tolerance,
        time_grid: grid.clone(),
    };
    let psi0 = lift(initial_state(n, Direction::Right))?;
    let basis = lift(parse_basis("x", n))?;
    let seeds = derive_seeds(options.seed, grid.len());
    let (mut right, mut left, mut m_x, mut entropy, mut xi) = (vec![], vec![], vec![], vec![], vec![]);
    let (mut s_right, mut s_left) = (vec![], vec![]);
    let mut step = 0;
    lift(evolve_trace_with(&psi0, &sim.couplings, &plan, |_, state| {
        let w = x_weights(state);
        let p = ReturnProbabilities::from_x_weights(&w);
        right.push(p.right);
        left.push(p.left);
        m_x.push(magnetization_from_x_weights(&w, n));
        if options.entanglement != 0 {
            entropy.push(half_chain_entropy(state)?);
            xi.push(match squeezing_exact(state) {
                Ok(r) => r.xi_squared,
                Err(Error::UndefinedDirection { .. }) => f64::NAN,
                Err(e) => return Err(e),
            });
        } else {
            entropy.push(f64::NAN);
            xi.push(f64::NAN);
        }
        if options.shots > 0 {
            let (r, l) = estimate_return_probabilities(&sample_basis(state, &basis, options.shots, seeds[step])?)?;
            s_right.push((r.value, r.sigma));
            s_left.push((l.value, l.sigma));
        }
        step += 1;
        Ok(())
    }))?;
    let rates = lift(rate_functions(&grid, &right, &left, n))?;
    sim.trace = Some(Trace {
        rates,
        m_x,
        entropy,
        xi_squared: xi,
        sampled: (options.shots > 0).then_some((s_right, s_left)),
    });
    Ok(())
}

/// Evolves `|⇒⟩` over the option's grid and stores the trace, replacing any
/// earlier one. `options` may be null for the defaults.
///
/// # Safety
/// `sim` must be a live handle; `options` null or valid for reads.
#[no_mangle]
pub unsafe extern "C" fn dqpt_simulation_run(sim: *mut DqptSimulation, options: *const DqptRunOptions) -> DqptStatus {
    // SAFETY: the caller guarantees the pointers are null or valid.
    let (Some(sim), options) = (unsafe { sim.as_mut() }, unsafe { options.as_ref() }) else {
        return fail(DqptStatus::NullPointer, "sim is null");
    };
    let options = options.copied().unwrap_or_else(|| dqpt_default_run_options());
    guard(|| run(sim, &options))
}

fn trace_of<'a>(sim: *const DqptSimulation) -> Result<&'a Trace, DqptStatus> {
    // SAFETY: callers pass a live handle; the borrow ends before the call returns.
    let sim = unsafe { sim.as_ref() }.ok_or_else(|| fail(DqptStatus::NullPointer, "sim is null"))?;
    sim.trace
        .as_ref()
        .ok_or_else(|| fail(DqptStatus::NotRun, "no trace; call dqpt_simulation_run first"))
}

/// Number of grid points of the stored trace, 0 before the first run.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqpt_simulation_len(sim: *const DqptSimulation) -> usize {
    // SAFETY: see above.
    unsafe { sim.as_ref() }
        .and_then(|s| s.trace.as_ref())
        .map_or(0, |t| t.rates.len())
}

/// Copies one column of the trace into `buffer`, which must hold at least
/// `dqpt_simulation_len` values.
///
/// # Safety
/// `sim` must be a live handle and `buffer` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn dqpt_simulation_copy_column(
    sim: *const DqptSimulation,
    column: u32,
    buffer: *mut f64,
    capacity: usize,
) -> DqptStatus {
    guard(|| {
        let t = trace_of(sim)?;
        if buffer.is_null() {
            return Err(fail(DqptStatus::NullPointer, "buffer is null"));
        }
        let sampled = |pick: fn(&Sampled) -> &Vec<(f64, f64)>| {
            t.sampled.as_ref().map_or_else(
                || vec![f64::NAN; t.rates.len()],
                |s| pick(s).iter().map(|p| p.0).collect(),
            )
        };
        let values: Vec<f64> = match column {
            DQPT_COLUMN_TAU => t.rates.tau.clone(),
            DQPT_COLUMN_P_RIGHT => t.rates.p_right.clone(),
            DQPT_COLUMN_P_LEFT => t.rates.p_left.clone(),
            DQPT_COLUMN_LAMBDA_TOTAL => t.rates.lambda_total.clone(),
            DQPT_COLUMN_LAMBDA_MIN => t.rates.lambda_min.clone(),
            DQPT_COLUMN_M_X => t.m_x.clone(),
            DQPT_COLUMN_ENTROPY => t.entropy.clone(),
            DQPT_COLUMN_XI_SQUARED => t.xi_squared.clone(),
            DQPT_COLUMN_P_RIGHT_SAMPLED => sampled(|s| &s.0),
            DQPT_COLUMN_P_LEFT_SAMPLED => sampled(|s| &s.1),
            other => return Err(fail(DqptStatus::InvalidArgument, format!("unknown column {other}"))),
        };
        if capacity < values.len() {
            return Err(fail(
                DqptStatus::BufferTooSmall,
                format!("need {} values, buffer holds {capacity}", values.len()),
            ));
        }
        // SAFETY: non-null and valid for `capacity >= values.len()` writes.
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len()) };
        Ok(())
    })
}

fn to_c(e: CriticalTimeEstimate) -> DqptEstimate {
    DqptEstimate {
        tau_crit: e.tau_crit,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
    }
}

/// First critical time of the stored trace.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dqpt_simulation_critical_time(
    sim: *const DqptSimulation,
    estimator: u32,
    out: *mut DqptEstimate,
) -> DqptStatus {
    guard(|| {
        let t = trace_of(sim)?;
        if out.is_null() {
            return Err(fail(DqptStatus::NullPointer, "out is null"));
        }
        let est = match estimator {
            DQPT_ESTIMATE_CROSSING => lift(crossing_time(&t.rates))?,
            DQPT_ESTIMATE_LINEAR_FIT => lift(fit_critical_time(&LogProbabilitySeries::from_rate_trace(&t.rates)))?,
            DQPT_ESTIMATE_SAMPLED_FIT => {
                let (r, l) = t
                    .sampled
                    .as_ref()
                    .ok_or_else(|| fail(DqptStatus::NotRun, "the run did not sample; set shots > 0"))?;
                let series = lift(LogProbabilitySeries::from_sampled(&t.rates.tau, r, l))?;
                lift(fit_critical_time(&series))?
            }
            other => return Err(fail(DqptStatus::InvalidArgument, format!("unknown estimator {other}"))),
        };
        // SAFETY: checked non-null; the caller guarantees validity.
        unsafe { *out = to_c(est) };
        Ok(())
    })
}

use std::f64::consts::FRAC_PI_4;
use std::ffi::CStr;
use std::ptr;

use dqpt_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dqpt_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn new_sim(n: u32, alpha: f64, j: f64) -> *mut DqptSimulation {
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { dqpt_simulation_new(n, alpha, j, &mut sim) }, DqptStatus::Ok);
    assert!(!sim.is_null());
    sim
}

fn column(sim: *const DqptSimulation, col: u32) -> Vec<f64> {
    let len = unsafe { dqpt_simulation_len(sim) };
    let mut buf = vec![0.0; len];
    assert_eq!(
        unsafe { dqpt_simulation_copy_column(sim, col, buf.as_mut_ptr(), len) },
        DqptStatus::Ok
    );
    buf
}

#[test]
fn free_chain_trace_and_crossing() {
    let sim = new_sim(4, 0.0, 0.0);
    assert_eq!(unsafe { dqpt_simulation_len(sim) }, 0);
    assert_eq!(unsafe { dqpt_simulation_run(sim, ptr::null()) }, DqptStatus::Ok);
    assert_eq!(unsafe { dqpt_simulation_len(sim) }, 200);
    let tau = column(sim, DQPT_COLUMN_TAU);
    let p = column(sim, DQPT_COLUMN_P_RIGHT);
    let m = column(sim, DQPT_COLUMN_M_X);
    for k in 0..tau.len() {
        assert!((p[k] - tau[k].cos().powi(8)).abs() < 1e-10);
        assert!((m[k] - (2.0 * tau[k]).cos()).abs() < 1e-10);
    }
    assert!(column(sim, DQPT_COLUMN_ENTROPY).iter().all(|v| v.is_nan()));

    let mut est = DqptEstimate::default();
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, DQPT_ESTIMATE_CROSSING, &mut est) },
        DqptStatus::Ok
    );
    assert!((est.tau_crit - FRAC_PI_4).abs() <= tau[1]);
    assert!(est.ci_low <= est.tau_crit && est.tau_crit <= est.ci_high);
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, DQPT_ESTIMATE_LINEAR_FIT, &mut est) },
        DqptStatus::Ok
    );
    assert!((est.tau_crit - FRAC_PI_4).abs() < 1e-3);
    assert_eq!(last_error(), "");
    unsafe { dqpt_simulation_free(sim) };
}

#[test]
fn options_select_observables_and_sampling() {
    let sim = new_sim(6, 1.08, 0.4);
    let mut options = dqpt_default_run_options();
    options.time_max = 1.5;
    options.n_points = 41;
    options.shots = 2000;
    options.seed = 3;
    options.entanglement = 1;
    assert_eq!(unsafe { dqpt_simulation_run(sim, &options) }, DqptStatus::Ok);
    let s = column(sim, DQPT_COLUMN_ENTROPY);
    assert!(s[0].abs() < 1e-10 && s[40] > 0.0);
    let xi = column(sim, DQPT_COLUMN_XI_SQUARED);
    assert!((xi[0] - 1.0).abs() < 1e-10);
    let exact = column(sim, DQPT_COLUMN_P_RIGHT);
    let sampled = column(sim, DQPT_COLUMN_P_RIGHT_SAMPLED);
    for (e, s) in exact.iter().zip(&sampled) {
        assert!((e - s).abs() < 5.0 * (e * (1.0 - e) / 2000.0).sqrt() + 1e-12);
    }
    let mut est = DqptEstimate::default();
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, DQPT_ESTIMATE_SAMPLED_FIT, &mut est) },
        DqptStatus::Ok
    );
    assert!(est.ci_high > est.ci_low);

    let dense = new_sim(6, 1.08, 0.4);
    options.method = DQPT_METHOD_DENSE;
    options.shots = 0;
    assert_eq!(unsafe { dqpt_simulation_run(dense, &options) }, DqptStatus::Ok);
    for (a, b) in column(dense, DQPT_COLUMN_P_LEFT)
        .iter()
        .zip(column(sim, DQPT_COLUMN_P_LEFT))
    {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(dense, DQPT_ESTIMATE_SAMPLED_FIT, &mut est) },
        DqptStatus::NotRun
    );
    unsafe {
        dqpt_simulation_free(sim);
        dqpt_simulation_free(dense);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { dqpt_simulation_new(4, 3.5, 0.1, &mut sim) },
        DqptStatus::InvalidArgument
    );
    assert!(sim.is_null());
    assert!(last_error().contains("alpha"));
    assert_eq!(
        unsafe { dqpt_simulation_new(4, 0.0, 0.1, ptr::null_mut()) },
        DqptStatus::NullPointer
    );
    assert_eq!(
        unsafe { dqpt_simulation_run(ptr::null_mut(), ptr::null()) },
        DqptStatus::NullPointer
    );
    assert_eq!(unsafe { dqpt_simulation_len(ptr::null()) }, 0);
    unsafe { dqpt_simulation_free(ptr::null_mut()) };

    let sim = new_sim(4, 0.0, 0.2);
    let mut est = DqptEstimate::default();
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, DQPT_ESTIMATE_CROSSING, &mut est) },
        DqptStatus::NotRun
    );
    let mut options = dqpt_default_run_options();
    options.n_points = 1;
    assert_eq!(
        unsafe { dqpt_simulation_run(sim, &options) },
        DqptStatus::InvalidArgument
    );
    options = dqpt_default_run_options();
    options.method = 9;
    assert_eq!(
        unsafe { dqpt_simulation_run(sim, &options) },
        DqptStatus::InvalidArgument
    );
    options.method = DQPT_METHOD_KRYLOV;
    options.time_max = 0.5;
    assert_eq!(unsafe { dqpt_simulation_run(sim, &options) }, DqptStatus::Ok);
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, DQPT_ESTIMATE_CROSSING, &mut est) },
        DqptStatus::NoCrossing
    );
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, 7, &mut est) },
        DqptStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { dqpt_simulation_critical_time(sim, 0, ptr::null_mut()) },
        DqptStatus::NullPointer
    );

    let mut small = [0.0; 3];
    let status = unsafe { dqpt_simulation_copy_column(sim, DQPT_COLUMN_TAU, small.as_mut_ptr(), 3) };
    assert_eq!(status, DqptStatus::BufferTooSmall);
    assert!(last_error().contains("200"));
    let status = unsafe { dqpt_simulation_copy_column(sim, 99, small.as_mut_ptr(), 3) };
    assert_eq!(status, DqptStatus::InvalidArgument);

    let odd = new_sim(5, 0.0, 0.2);
    let mut options = dqpt_default_run_options();
    options.entanglement = 1;
    assert_eq!(
        unsafe { dqpt_simulation_run(odd, &options) },
        DqptStatus::InvalidArgument
    );
    unsafe {
        dqpt_simulation_free(sim);
        dqpt_simulation_free(odd);
    }
}

#[test]
fn resource_limits_are_distinguished() {
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { dqpt_simulation_new(14, 0.0, 0.1, &mut sim) }, DqptStatus::Ok);
    let mut options = dqpt_default_run_options();
    options.method = DQPT_METHOD_DENSE;
    assert_eq!(unsafe { dqpt_simulation_run(sim, &options) }, DqptStatus::ResourceLimit);
    unsafe { dqpt_simulation_free(sim) };
}

#[test]
fn errors_are_thread_local() {
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { dqpt_simulation_new(0, 0.0, 0.1, &mut sim) },
        DqptStatus::InvalidArgument
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(dqpt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

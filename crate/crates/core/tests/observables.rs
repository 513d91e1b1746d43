mod common;

use std::f64::consts::PI;

use dqpt::engine::*;
use dqpt::model::CouplingMatrix;
use dqpt::observables::*;
use dqpt::perturbation::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn evolved(c: &CouplingMatrix, tau: f64) -> StateVector {
    let psi0 = initial_state(c.n_spins(), Direction::Right).unwrap();
    evolve(&psi0, c, tau, &PropagationPlan::default()).unwrap()
}

#[test]
fn magnetization_trace_matches_dense_oracle() {
    let c = CouplingMatrix::power_law(6, 0.0, 0.5, 1.0).unwrap();
    let h = common::kron_hamiltonian(&c);
    let mx: common::CMatrix = (0..6)
        .map(|i| common::site_operator(6, &[(i, 'x')]))
        .fold(common::CMatrix::zeros(64, 64), |acc, op| acc + op)
        * Complex64::new(1.0 / 6.0, 0.0);
    let psi0 = initial_state(6, Direction::Right).unwrap();
    let plan = PropagationPlan::with_grid(uniform_grid(2.0, 21));
    for (tau, state) in evolve_trace(&psi0, &c, &plan).unwrap() {
        let u = common::expm(&(&h * Complex64::new(0.0, -tau)));
        let reference =
            StateVector::from_amplitudes(6, (u * common::to_column(&psi0)).iter().copied().collect()).unwrap();
        let expected = common::expectation(&mx, &reference).re;
        assert!((magnetization_x(&state) - expected).abs() < 1e-10, "tau {tau}");
    }
}

#[test]
fn site_expectations_match_kronecker_operators() {
    for seed in 0..4 {
        let n = 4;
        let psi = common::random_state(n, seed);
        for axis in Axis::ALL {
            let values = site_expectations(&psi, axis);
            for (site, v) in values.iter().enumerate() {
                let op = common::site_operator(n, &[(site, axis.label())]);
                assert!((v - common::expectation(&op, &psi).re).abs() < 1e-12);
                assert!(v.abs() <= 1.0 + 1e-12);
            }
        }
        let mean_x = site_expectations(&psi, Axis::X).iter().sum::<f64>() / n as f64;
        assert!((mean_x - magnetization_x(&psi)).abs() < 1e-12);
    }
}

#[test]
fn free_precession_observables() {
    for n in [1, 3, 7] {
        let c = CouplingMatrix::power_law(n, 0.0, 0.0, 1.0).unwrap();
        for tau in [0.0, 0.3, 0.9, 2.2] {
            let psi = evolved(&c, tau);
            assert!((magnetization_x(&psi) - (2.0 * tau).cos()).abs() < 1e-12);
            assert!(site_expectations(&psi, Axis::Z).iter().all(|v| v.abs() < 1e-12));
            let p = return_probabilities(&psi);
            assert!((p.right - tau.cos().powi(2 * n as i32)).abs() < 1e-12);
            assert!((p.left - tau.sin().powi(2 * n as i32)).abs() < 1e-12);
        }
    }
    let c = CouplingMatrix::power_law(1, 0.0, 0.0, 1.0).unwrap();
    let psi0 = initial_state(1, Direction::Right).unwrap();
    let g = loschmidt_amplitude(&psi0, &evolved(&c, 0.7)).unwrap();
    assert!((g - Complex64::new(0.7f64.cos(), 0.0)).norm() < 1e-12);
}

#[test]
fn crossing_is_delayed_by_interactions() {
    let c = CouplingMatrix::power_law(8, 0.0, 0.42, 1.0).unwrap();
    let psi0 = initial_state(8, Direction::Right).unwrap();
    let plan = PropagationPlan::with_grid(uniform_grid(1.2, 481));
    let trace = evolve_trace(&psi0, &c, &plan).unwrap();
    let diff: Vec<f64> = trace
        .iter()
        .map(|(_, s)| {
            let p = return_probabilities(s);
            p.right - p.left
        })
        .collect();
    let first = diff.iter().position(|d| *d < 0.0).unwrap();
    assert!(trace[first - 1].0 > PI / 4.0);
}

#[test]
fn loschmidt_amplitude_and_completeness() {
    let c = common::random_couplings(4, 11);
    let psi0 = initial_state(4, Direction::Right).unwrap();
    for tau in [0.0, 0.4, 1.3] {
        let psi = evolved(&c, tau);
        let g = loschmidt_amplitude(&psi0, &psi).unwrap();
        let w = x_weights(&psi);
        assert!(g.norm() <= 1.0 + 1e-12);
        assert!((g.norm_sqr() - w[0]).abs() < 1e-12);
        assert!((g.norm_sqr() + w[1..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let short = initial_state(3, Direction::Right).unwrap();
    assert!(loschmidt_amplitude(&short, &psi0).is_err());
}

#[test]
fn return_probability_sum_is_below_one_except_single_spin() {
    for n in 1..=5 {
        let c = CouplingMatrix::power_law(n, 0.7, 0.3, 1.0).unwrap();
        let p = return_probabilities(&evolved(&c, 0.6));
        if n == 1 {
            assert!((p.total() - 1.0).abs() < 1e-12);
        } else {
            assert!(p.total() < 1.0);
        }
    }
}

#[test]
fn global_flip_swaps_branches() {
    let c = CouplingMatrix::power_law(5, 1.5, 0.4, 1.0).unwrap();
    let psi = evolved(&c, 0.9);
    let flipped = psi.z_parity_flipped();
    let (a, b) = (return_probabilities(&psi), return_probabilities(&flipped));
    assert!((a.right - b.left).abs() < 1e-12 && (a.left - b.right).abs() < 1e-12);
    assert!((magnetization_x(&psi) + magnetization_x(&flipped)).abs() < 1e-12);
}

#[test]
fn mirrored_hamiltonian_gives_identical_real_observables() {
    let c = CouplingMatrix::power_law(6, 1.08, 0.5, 1.0).unwrap();
    let m = c.negated();
    for tau in [0.3, 0.8, 1.7] {
        let (a, b) = (evolved(&c, tau), evolved(&m, tau));
        let (pa, pb) = (return_probabilities(&a), return_probabilities(&b));
        assert!((pa.right - pb.right).abs() < 1e-10);
        assert!((pa.left - pb.left).abs() < 1e-10);
        assert!((magnetization_x(&a) - magnetization_x(&b)).abs() < 1e-10);
        let (sa, sb) = (site_expectations(&a, Axis::Z), site_expectations(&b, Axis::Z));
        assert!(sa.iter().zip(&sb).all(|(x, y)| (x - y).abs() < 1e-10));
    }
}

#[test]
fn collective_spin_of_product_state() {
    // every spin along (sin θ cos φ, sin θ sin φ, cos θ)
    let (theta, phi): (f64, f64) = (1.1, 0.4);
    let n = 5;
    let single = [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ];
    let amps = (0..1usize << n)
        .map(|idx| (0..n).map(|s| single[idx >> s & 1]).product())
        .collect();
    let psi = StateVector::normalized(n, amps).unwrap();
    let spin = collective_covariance(&psi);
    let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    for (m, d) in spin.mean.iter().zip(dir) {
        assert!((m - 0.5 * n as f64 * d).abs() < 1e-12);
    }
    assert!(spin.variance_along(dir).abs() < 1e-12);
    let perp = [-phi.sin(), phi.cos(), 0.0];
    assert!((spin.variance_along(perp) - n as f64 / 4.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn covariance_is_symmetric_psd(seed in 0u64..10_000, n in 1usize..6) {
        let spin = collective_covariance(&common::random_state(n, seed));
        let m = nalgebra::Matrix3::from_fn(|i, j| spin.covariance[i][j]);
        prop_assert!((m - m.transpose()).amax() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(m);
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
    }

    #[test]
    fn magnetization_is_bounded(seed in 0u64..10_000, n in 1usize..7) {
        let m = magnetization_x(&common::random_state(n, seed));
        prop_assert!(m.abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn closed_form_matches_exact_at_zero_coupling() {
    let c = CouplingMatrix::power_law(4, 0.0, 0.0, 1.0).unwrap();
    for tau in [0.2, 0.7, 1.9] {
        let psi = evolved(&c, tau);
        let spins = perturbative_spins(&c, tau);
        let (x, y, z) = (
            site_expectations(&psi, Axis::X),
            site_expectations(&psi, Axis::Y),
            site_expectations(&psi, Axis::Z),
        );
        for i in 0..4 {
            assert!((spins[i].x - x[i]).abs() < 1e-12);
            // the closed forms precess in the opposite sense
            assert!((spins[i].y + y[i]).abs() < 1e-12);
            assert!((spins[i].z - z[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn closed_form_magnetization_at_weak_coupling() {
    let c = CouplingMatrix::power_law(6, 0.0, 0.05, 1.0).unwrap();
    let psi0 = initial_state(6, Direction::Right).unwrap();
    let plan = PropagationPlan::with_grid(uniform_grid(1.0, 51));
    let worst = evolve_trace(&psi0, &c, &plan)
        .unwrap()
        .iter()
        .map(|(tau, s)| (magnetization_x(s) - perturbative_magnetization(&c, *tau)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst}");
}

#[test]
fn transverse_component_to_leading_order() {
    let j = 0.02;
    let c = CouplingMatrix::power_law(5, 1.0, j, 1.0).unwrap();
    for tau in [0.3, 0.6, 1.0] {
        let z = site_expectations(&evolved(&c, tau), Axis::Z);
        for (i, s) in perturbative_spins(&c, tau).iter().enumerate() {
            let leading: f64 = c.row(i).iter().sum::<f64>() * (2.0 * tau).sin().powi(2) / 2.0;
            assert!((s.z - leading).abs() < 1e-15);
            assert!((z[i] - leading).abs() < 10.0 * j * j, "site {i} tau {tau}");
        }
    }
}

#[test]
fn closed_form_zero_tracks_predicted_time() {
    for j in [0.05, 0.1] {
        let c = CouplingMatrix::power_law(8, 0.0, j, 1.0).unwrap();
        let (mut lo, mut hi) = (0.7, 0.9);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if perturbative_magnetization(&c, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - predicted_tau_x(&c)).abs() < 2.0 * j.powi(4), "J {j}");
    }
}

#[test]
fn exact_zero_shift_at_weak_coupling() {
    // Exact evolution shifts the zero by (C1 + C2)π/32 at second order.
    let j = 0.02;
    let c = CouplingMatrix::power_law(8, 0.0, j, 1.0).unwrap();
    let psi0 = initial_state(8, Direction::Right).unwrap();
    let plan = PropagationPlan::with_grid((0..=200).map(|k| 0.78 + 0.0001 * k as f64).collect());
    let trace = evolve_trace(&psi0, &c, &plan).unwrap();
    let m: Vec<f64> = trace.iter().map(|(_, s)| magnetization_x(s)).collect();
    let zero = dqpt::dqpt::first_sign_change(&plan.time_grid, &m).unwrap();
    let k = interaction_constants(&c);
    let second_order = PI / 4.0 + (k.c1_mean + k.c2_mean) * PI / 32.0;
    assert!(((zero - PI / 4.0) / (second_order - PI / 4.0) - 1.0).abs() < 0.03);
}

#[test]
fn finite_size_correction_of_second_constant() {
    // For α ≤ ½ the C2 part of the shift falls off as 1/N.
    for alpha in [0.0, 0.5] {
        let c2: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| interaction_constants(&CouplingMatrix::power_law(n, alpha, 0.1, 1.0).unwrap()).c2_mean)
            .collect();
        let ratios: Vec<f64> = c2.windows(2).map(|w| w[0] / w[1]).collect();
        for r in &ratios {
            assert!((1.5..=2.1).contains(r), "alpha {alpha}: {ratios:?}");
        }
        assert!((ratios[2] - 2.0).abs() < (ratios[0] - 2.0).abs() + 1e-12);
    }
}

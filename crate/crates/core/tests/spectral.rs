mod common;

use dqpt::engine::*;
use dqpt::model::{classical_x_spectrum, CouplingMatrix};
use dqpt::observables::*;
use dqpt::spectral::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn evolved(n: usize, alpha: f64, j: f64, tau: f64) -> (CouplingMatrix, StateVector) {
    let c = CouplingMatrix::power_law(n, alpha, j, 1.0).unwrap();
    let psi0 = initial_state(n, Direction::Right).unwrap();
    let psi = evolve(&psi0, &c, tau, &PropagationPlan::default()).unwrap();
    (c, psi)
}

/// `-Σ J_ij σ^x_i σ^x_j` from Kronecker products.
fn kron_interaction(c: &CouplingMatrix) -> common::CMatrix {
    let n = c.n_spins();
    let mut h = common::CMatrix::zeros(1 << n, 1 << n);
    for (i, j, jij) in c.pairs() {
        h -= common::site_operator(n, &[(i, 'x'), (j, 'x')]) * Complex64::new(jij, 0.0);
    }
    h
}

#[test]
fn ground_level_weight_is_the_return_probability() {
    let (c, psi) = evolved(8, 0.0, 0.42, 0.7);
    let spec = classical_x_spectrum(&c).unwrap();
    let w = spectral_weights(&psi, &spec).unwrap();
    let p = return_probabilities(&psi);
    let ground: f64 = w
        .iter()
        .zip(&spec.energies)
        .filter(|(_, e)| e.abs() < 1e-12)
        .map(|(w, _)| w)
        .sum();
    assert!((ground - p.total()).abs() < 1e-12);
    assert!((w[0] - p.right).abs() < 1e-12);
    assert!((w[(1 << 8) - 1] - p.left).abs() < 1e-12);
}

#[test]
fn mean_energy_density_matches_dense_expectation() {
    for seed in 0..4 {
        let c = common::random_couplings(6, seed);
        let psi = common::random_state(6, 100 + seed);
        let spec = classical_x_spectrum(&c).unwrap();
        let w = spectral_weights(&psi, &spec).unwrap();
        let oracle = (common::expectation(&kron_interaction(&c), &psi).re - spec.ground_energy) / 6.0;
        let eps = mean_energy_density(&w, &spec);
        assert!((eps - oracle).abs() < 1e-10, "{eps} {oracle}");
        assert!(eps >= -1e-12 && eps <= spec.bandwidth / 6.0 + 1e-12);
    }
}

#[test]
fn discrete_magnetization_matches_direct_expectation() {
    let (c, psi) = evolved(7, 1.08, 0.3, 1.3);
    let spec = classical_x_spectrum(&c).unwrap();
    let w = spectral_weights(&psi, &spec).unwrap();
    assert!((discrete_magnetization(&w, &spec) - magnetization_x(&psi)).abs() < 1e-12);
}

#[test]
fn global_flip_reverses_energy_resolved_magnetization() {
    let (c, psi) = evolved(6, 0.5, 0.5, 0.9);
    let spec = classical_x_spectrum(&c).unwrap();
    let eps = default_epsilon_grid(&spec, 60);
    let mu = default_mu(&spec).unwrap();
    let w = spectral_weights(&psi, &spec).unwrap();
    let wf = spectral_weights(&psi.z_parity_flipped(), &spec).unwrap();
    let g = energy_resolved_map(&[(0.9, w), (0.9, wf)], &spec, &eps, mu).unwrap();
    for k in 0..eps.len() {
        assert!((g.weight[0][k] - g.weight[1][k]).abs() < 1e-10);
        if let (Some(a), Some(b)) = (g.magnetization[0][k], g.magnetization[1][k]) {
            assert!((a + b).abs() < 1e-9, "{a} {b}");
        }
    }
}

#[test]
fn broadened_weight_and_magnetization_integrate_to_discrete_values() {
    let (c, psi) = evolved(8, 0.0, 0.5, 1.1);
    let spec = classical_x_spectrum(&c).unwrap();
    let mu = default_mu(&spec).unwrap();
    let top = spec.bandwidth / 8.0;
    let bins = 20_001;
    let eps: Vec<f64> = (0..bins)
        .map(|k| -100.0 * mu + (top + 200.0 * mu) * k as f64 / (bins - 1) as f64)
        .collect();
    let step = eps[1] - eps[0];
    let w = spectral_weights(&psi, &spec).unwrap();
    let g = energy_resolved_map(&[(1.1, w.clone())], &spec, &eps, mu).unwrap();
    let mass: f64 = g.weight[0].iter().sum::<f64>() * step;
    assert!((0.99..=1.0 + 1e-6).contains(&mass), "{mass}");
    let moment: f64 = g.weight[0]
        .iter()
        .zip(&g.magnetization[0])
        .map(|(p, m)| p * m.unwrap_or(0.0))
        .sum::<f64>()
        * step;
    assert!((moment - discrete_magnetization(&w, &spec)).abs() < 1e-2);
}

#[test]
fn sum_rules_hold_along_a_trace() {
    let n = 6;
    let c = CouplingMatrix::power_law(n, 0.0, 0.5, 1.0).unwrap();
    let spec = classical_x_spectrum(&c).unwrap();
    let psi0 = initial_state(n, Direction::Right).unwrap();
    let trace = evolve_trace(&psi0, &c, &PropagationPlan::with_grid(uniform_grid(2.0, 21))).unwrap();
    for (_, s) in &trace {
        let w = spectral_weights(s, &spec).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(w.iter().all(|p| *p >= 0.0));
        let m = discrete_magnetization(&w, &spec);
        assert!(m.abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn undefined_magnetization_where_weight_vanishes() {
    let c = CouplingMatrix::power_law(4, 0.0, 0.5, 1.0).unwrap();
    let spec = classical_x_spectrum(&c).unwrap();
    let psi0 = initial_state(4, Direction::Right).unwrap();
    let w = spectral_weights(&psi0, &spec).unwrap();
    let eps = default_epsilon_grid(&spec, 11);
    let g = energy_resolved_map(&[(0.0, w)], &spec, &eps, 1e-15).unwrap();
    assert_eq!(g.magnetization[0][0], Some(1.0));
    assert!(g.magnetization[0][5].is_none());
}

#[test]
fn rejects_bad_inputs() {
    let c = CouplingMatrix::power_law(4, 0.0, 0.0, 1.0).unwrap();
    let spec = classical_x_spectrum(&c).unwrap();
    assert!(default_mu(&spec).is_err());
    assert!(energy_resolved_map(&[(0.0, vec![1.0; 16])], &spec, &[0.0], 0.0).is_err());
    assert!(energy_resolved_map(&[(0.0, vec![1.0; 8])], &spec, &[0.0], 0.1).is_err());
    let other = initial_state(3, Direction::Right).unwrap();
    assert!(spectral_weights(&other, &spec).is_err());
}

proptest! {
    #[test]
    fn weights_are_a_probability_distribution(seed in 0u64..1000, n in 1usize..8) {
        let c = common::random_couplings(n, seed);
        let spec = classical_x_spectrum(&c).unwrap();
        let psi = common::random_state(n, seed ^ 0x5eed);
        let w = spectral_weights(&psi, &spec).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let eps = mean_energy_density(&w, &spec);
        prop_assert!(eps >= -1e-12 && eps <= spec.bandwidth / n as f64 + 1e-12);
    }

    #[test]
    fn broadened_magnetization_is_bounded(seed in 0u64..1000) {
        let c = common::random_couplings(5, seed);
        let spec = classical_x_spectrum(&c).unwrap();
        let psi = common::random_state(5, seed + 7);
        let w = spectral_weights(&psi, &spec).unwrap();
        let eps = default_epsilon_grid(&spec, 40);
        let g = energy_resolved_map(&[(0.0, w)], &spec, &eps, default_mu(&spec).unwrap()).unwrap();
        for m in g.magnetization[0].iter().flatten() {
            prop_assert!(m.abs() <= 1.0 + 1e-12);
        }
        prop_assert!(g.weight[0].iter().all(|p| *p >= 0.0));
    }
}

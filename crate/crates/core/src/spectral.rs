//! Decomposition of a state over the x-product basis, which diagonalizes both
//! `H₀` and `M_x`, and the Lorentzian-broadened energy-resolved magnetization.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::StateVector;
use crate::error::{invalid, Error, Result};
use crate::model::XSpectrum;
use crate::observables::x_weights;

/// `P(ε, τ)` below this leaves `M(ε, τ)` undefined.
pub const UNDEFINED_WEIGHT_FLOOR: f64 = 1e-12;
pub const DEFAULT_EPSILON_BINS: usize = 200;

/// `p_ν = |⟨ν|ψ⟩|²`.
pub fn spectral_weights(state: &StateVector, spectrum: &XSpectrum) -> Result<Vec<f64>> {
    if state.dimension() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.len(),
            found: state.dimension(),
        });
    }
    Ok(x_weights(state))
}

/// `ε̄ = N⁻¹ Σ_ν p_ν E_ν`.
pub fn mean_energy_density(weights: &[f64], spectrum: &XSpectrum) -> f64 {
    let total: f64 = weights.iter().zip(&spectrum.energies).map(|(p, e)| p * e).sum();
    total / spectrum.n_spins() as f64
}

/// `Σ_ν p_ν M_ν`.
pub fn discrete_magnetization(weights: &[f64], spectrum: &XSpectrum) -> f64 {
    weights.iter().zip(&spectrum.magnetizations).map(|(p, m)| p * m).sum()
}

/// Half-width `W/(50N)`: one fiftieth of the span of the energy-density axis.
pub fn default_mu(spectrum: &XSpectrum) -> Result<f64> {
    if !(spectrum.bandwidth > 0.0) {
        return Err(invalid("bandwidth", "spectrum has zero width; pass an explicit mu"));
    }
    Ok(spectrum.bandwidth / (50.0 * spectrum.n_spins() as f64))
}

/// `bins` uniform points over `[0, W/N]`.
pub fn default_epsilon_grid(spectrum: &XSpectrum, bins: usize) -> Vec<f64> {
    let top = spectrum.bandwidth / spectrum.n_spins() as f64;
    match bins {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..bins).map(|k| top * k as f64 / (bins - 1) as f64).collect(),
    }
}

/// `δ_μ(x) = μ / (π(μ² + x²))`.
pub fn lorentzian(x: f64, mu: f64) -> f64 {
    mu / (PI * (mu * mu + x * x))
}

/// `P(ε, τ)` and `M(ε, τ)` on an `(ε, τ)` lattice; rows are indexed by τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub tau: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub weight: Vec<Vec<f64>>,
    /// `None` where `P(ε, τ)` is below the floor.
    pub magnetization: Vec<Vec<Option<f64>>>,
    pub mean_energy_density: Vec<f64>,
    pub mu: f64,
}

/// Degenerate levels merged into `(ε_ν, Σ p, Σ p M)` before broadening.
#[derive(Debug, Clone)]
pub struct SpectralAccumulator {
    epsilon: Vec<f64>,
    mu: f64,
    level_of: Vec<usize>,
    level_energy: Vec<f64>,
    n_spins: usize,
    energies: Vec<f64>,
}

impl SpectralAccumulator {
    pub fn new(spectrum: &XSpectrum, epsilon: Vec<f64>, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(invalid("mu", format!("{mu} must be positive")));
        }
        let n = spectrum.n_spins() as f64;
        let tol = 1e-12 * (1.0 + spectrum.bandwidth);
        let mut order: Vec<usize> = (0..spectrum.len()).collect();
        order.sort_by(|&a, &b| spectrum.energies[a].total_cmp(&spectrum.energies[b]));
        let mut level_of = vec![0; spectrum.len()];
        let mut level_energy: Vec<f64> = Vec::new();
        for idx in order {
            let e = spectrum.energies[idx];
            match level_energy.last() {
                Some(&last) if e - last * n <= tol => {}
                _ => level_energy.push(e / n),
            }
            level_of[idx] = level_energy.len() - 1;
        }
        Ok(Self {
            epsilon,
            mu,
            level_of,
            level_energy,
            n_spins: spectrum.n_spins(),
            energies: spectrum.energies.clone(),
        })
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    /// One τ column: `(P(ε), M(ε), ε̄)`.
    pub fn column(&self, weights: &[f64], magnetizations: &[f64]) -> (Vec<f64>, Vec<Option<f64>>, f64) {
        let levels = self.level_energy.len();
        let mut p = vec![0.0; levels];
        let mut pm = vec![0.0; levels];
        for ((w, m), &l) in weights.iter().zip(magnetizations).zip(&self.level_of) {
            p[l] += w;
            pm[l] += w * m;
        }
        let mut weight = Vec::with_capacity(self.epsilon.len());
        let mut magnet = Vec::with_capacity(self.epsilon.len());
        for &eps in &self.epsilon {
            let (mut sp, mut spm) = (0.0, 0.0);
            for l in 0..levels {
                let d = lorentzian(eps - self.level_energy[l], self.mu);
                sp += p[l] * d;
                spm += pm[l] * d;
            }
            weight.push(sp);
            magnet.push((sp >= UNDEFINED_WEIGHT_FLOOR).then(|| spm / sp));
        }
        let mean = weights.iter().zip(&self.energies).map(|(w, e)| w * e).sum::<f64>() / self.n_spins as f64;
        (weight, magnet, mean)
    }
}

/// Broadened map for a trace of weight vectors `(τ, p_ν)`.
pub fn energy_resolved_map(
    trace: &[(f64, Vec<f64>)],
    spectrum: &XSpectrum,
    epsilon: &[f64],
    mu: f64,
) -> Result<SpectralGrid> {
    let acc = SpectralAccumulator::new(spectrum, epsilon.to_vec(), mu)?;
    for (_, w) in trace {
        if w.len() != spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.len(),
                found: w.len(),
            });
        }
    }
    let columns: Vec<_> = trace
        .par_iter()
        .map(|(_, w)| acc.column(w, &spectrum.magnetizations))
        .collect();
    let mut grid = SpectralGrid {
        tau: trace.iter().map(|(t, _)| *t).collect(),
        epsilon: epsilon.to_vec(),
        weight: Vec::with_capacity(trace.len()),
        magnetization: Vec::with_capacity(trace.len()),
        mean_energy_density: Vec::with_capacity(trace.len()),
        mu,
    };
    for (w, m, e) in columns {
        grid.weight.push(w);
        grid.magnetization.push(m);
        grid.mean_energy_density.push(e);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{initial_state, Direction};
    use crate::model::{classical_x_spectrum, CouplingMatrix};

    #[test]
    fn initial_state_weights() {
        let c = CouplingMatrix::power_law(5, 0.5, 0.3, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        let w = spectral_weights(&initial_state(5, Direction::Right).unwrap(), &s).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14);
        assert!(w[1..].iter().all(|v| v.abs() < 1e-14));
        assert!(mean_energy_density(&w, &s).abs() < 1e-14);
    }

    #[test]
    fn single_weight_map_is_fully_polarized() {
        let c = CouplingMatrix::power_law(4, 0.0, 0.5, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        let mut w = vec![0.0; 16];
        w[0] = 1.0;
        let eps = default_epsilon_grid(&s, 50);
        let grid = energy_resolved_map(&[(0.0, w)], &s, &eps, default_mu(&s).unwrap()).unwrap();
        for m in grid.magnetization[0].iter().flatten() {
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_levels_are_merged() {
        let c = CouplingMatrix::power_law(6, 0.0, 0.5, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        let acc = SpectralAccumulator::new(&s, vec![0.0], 0.1).unwrap();
        // α = 0: energy depends only on the number of flipped spins, k ↔ N-k
        assert_eq!(acc.level_energy.len(), 4);
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let c = CouplingMatrix::power_law(3, 0.0, 0.5, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        assert!(energy_resolved_map(&[], &s, &[0.0], 0.0).is_err());
        let free = classical_x_spectrum(&CouplingMatrix::power_law(3, 0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(default_mu(&free).is_err());
    }

    #[test]
    fn lorentzian_mass_within_ten_widths() {
        // ∫_{-10μ}^{10μ} δ_μ = (2/π) arctan 10
        let mu = 0.01;
        let steps = 200_000;
        let h = 20.0 * mu / steps as f64;
        let mass: f64 = (0..steps)
            .map(|k| lorentzian(-10.0 * mu + (k as f64 + 0.5) * h, mu) * h)
            .sum();
        assert!((mass - 2.0 / PI * 10f64.atan()).abs() < 1e-9);
    }
}

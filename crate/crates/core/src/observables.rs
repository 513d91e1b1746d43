//! Expectation values extracted from a state vector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{fwht, StateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

impl TryFrom<char> for Axis {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            'x' | 'X' => Ok(Axis::X),
            'y' | 'Y' => Ok(Axis::Y),
            'z' | 'Z' => Ok(Axis::Z),
            other => Err(Error::UnknownAxis(other)),
        }
    }
}

/// `|⟨ν|ψ⟩|²` over the x-product basis.
pub fn x_weights(state: &StateVector) -> Vec<f64> {
    fwht(state).amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// `P_⇒` and `P_⇐`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnProbabilities {
    pub right: f64,
    pub left: f64,
}

impl ReturnProbabilities {
    pub fn from_x_weights(weights: &[f64]) -> Self {
        Self {
            right: weights[0],
            left: weights[weights.len() - 1],
        }
    }

    pub fn total(&self) -> f64 {
        self.right + self.left
    }
}

pub fn return_probabilities(state: &StateVector) -> ReturnProbabilities {
    ReturnProbabilities::from_x_weights(&x_weights(state))
}

/// `N⁻¹ Σ_ν w_ν (N - 2·popcount ν)` from x-basis weights.
pub fn magnetization_from_x_weights(weights: &[f64], n_spins: usize) -> f64 {
    let n = n_spins as f64;
    weights
        .iter()
        .enumerate()
        .map(|(config, w)| w * (n - 2.0 * config.count_ones() as f64))
        .sum::<f64>()
        / n
}

/// `M_x = N⁻¹ Σ_i ⟨σ_i^x⟩`.
pub fn magnetization_x(state: &StateVector) -> f64 {
    magnetization_from_x_weights(&x_weights(state), state.n_spins())
}

/// `⟨σ_i^β⟩` for every site.
pub fn site_expectations(state: &StateVector, axis: Axis) -> Vec<f64> {
    let n = state.n_spins();
    match axis {
        Axis::X => {
            let weights = x_weights(state);
            diagonal_site_means(&weights, n)
        }
        Axis::Z => {
            let weights: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
            diagonal_site_means(&weights, n)
        }
        Axis::Y => (0..n)
            .map(|site| {
                let flipped = apply_pauli(state.amplitudes(), site, Axis::Y);
                dot(state.amplitudes(), &flipped).re
            })
            .collect(),
    }
}

fn diagonal_site_means(weights: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (config, &w) in weights.iter().enumerate() {
        for (site, value) in out.iter_mut().enumerate() {
            if config >> site & 1 == 0 {
                *value += w;
            } else {
                *value -= w;
            }
        }
    }
    out
}

/// `G = ⟨ψ₀|ψ_t⟩`.
pub fn loschmidt_amplitude(psi0: &StateVector, psi_t: &StateVector) -> Result<Complex64> {
    psi0.inner(psi_t)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `σ_site^β |ψ⟩` in the z basis (bit 0 = z-up).
pub(crate) fn apply_pauli(amps: &[Complex64], site: usize, axis: Axis) -> Vec<Complex64> {
    let bit = 1usize << site;
    let i = Complex64::new(0.0, 1.0);
    (0..amps.len())
        .map(|idx| {
            let up = idx & bit == 0;
            match axis {
                Axis::X => amps[idx ^ bit],
                Axis::Y if up => -i * amps[idx ^ bit],
                Axis::Y => i * amps[idx ^ bit],
                Axis::Z if up => amps[idx],
                Axis::Z => -amps[idx],
            }
        })
        .collect()
}

/// `S_β|ψ⟩` with `S_β = ½ Σ_i σ_i^β`.
fn apply_collective(amps: &[Complex64], n_spins: usize, axis: Axis) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for site in 0..n_spins {
        for (o, v) in out.iter_mut().zip(apply_pauli(amps, site, axis)) {
            *o += v * 0.5;
        }
    }
    out
}

/// Mean and symmetrized covariance of the spin-½ collective operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveSpin {
    pub n_spins: usize,
    /// `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩`.
    pub mean: [f64; 3],
    /// `½⟨{S_β, S_γ}⟩ - ⟨S_β⟩⟨S_γ⟩`.
    pub covariance: [[f64; 3]; 3],
}

impl CollectiveSpin {
    pub fn mean_length(&self) -> f64 {
        self.mean.iter().map(|m| m * m).sum::<f64>().sqrt()
    }

    /// Variance of `n⃗·S⃗` for a unit vector `n⃗`.
    pub fn variance_along(&self, direction: [f64; 3]) -> f64 {
        let mut v = 0.0;
        for b in 0..3 {
            for g in 0..3 {
                v += direction[b] * self.covariance[b][g] * direction[g];
            }
        }
        v
    }
}

pub fn collective_covariance(state: &StateVector) -> CollectiveSpin {
    let n = state.n_spins();
    let amps = state.amplitudes();
    let images: Vec<Vec<Complex64>> = Axis::ALL.iter().map(|&axis| apply_collective(amps, n, axis)).collect();
    let mut mean = [0.0; 3];
    for b in 0..3 {
        mean[b] = dot(amps, &images[b]).re;
    }
    let mut covariance = [[0.0; 3]; 3];
    for b in 0..3 {
        for g in b..3 {
            // Re⟨S_β ψ|S_γ ψ⟩ = ½⟨{S_β, S_γ}⟩ for Hermitian S.
            let value = dot(&images[b], &images[g]).re - mean[b] * mean[g];
            covariance[b][g] = value;
            covariance[g][b] = value;
        }
    }
    CollectiveSpin {
        n_spins: n,
        mean,
        covariance,
    }
}

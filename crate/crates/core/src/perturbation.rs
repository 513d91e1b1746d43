//! Second-order closed forms for weak interactions, `J ≪ B`.
//!
//! Spin components are returned in the rotating-frame convention of the
//! expansion, where free precession gives `⟨σ^y⟩ = +sin 2τ`. The engine's
//! Hamiltonian precesses the other way, so its `⟨σ^y⟩` is the negative of the
//! value returned here; `⟨σ^x⟩` and `⟨σ^z⟩` coincide.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::model::CouplingMatrix;

/// `C_i^(1) = ½(Σ_j J_ij/B)²` and `C_i^(2) = ½ Σ_j (J_ij/B)²` with site means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionConstants {
    pub c1_per_site: Vec<f64>,
    pub c2_per_site: Vec<f64>,
    pub c1_mean: f64,
    pub c2_mean: f64,
}

pub fn interaction_constants(couplings: &CouplingMatrix) -> InteractionConstants {
    let n = couplings.n_spins();
    let b = couplings.field();
    let (c1_per_site, c2_per_site): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let row = couplings.row(i);
            let linear: f64 = row.iter().map(|j| j / b).sum();
            let squares: f64 = row.iter().map(|j| (j / b).powi(2)).sum();
            (0.5 * linear * linear, 0.5 * squares)
        })
        .unzip();
    let c1_mean = c1_per_site.iter().sum::<f64>() / n as f64;
    let c2_mean = c2_per_site.iter().sum::<f64>() / n as f64;
    InteractionConstants {
        c1_per_site,
        c2_per_site,
        c1_mean,
        c2_mean,
    }
}

/// Per-site components at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinComponents {
    pub parallel: f64,
    pub perpendicular: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// `⟨σ_i^x⟩, ⟨σ_i^y⟩, ⟨σ_i^z⟩` per site at `τ = Bt`, plus the rotating-frame
/// parallel and perpendicular components.
pub fn perturbative_spins(couplings: &CouplingMatrix, tau: f64) -> Vec<SpinComponents> {
    let constants = interaction_constants(couplings);
    let b = couplings.field();
    let (s2, c2) = (2.0 * tau).sin_cos();
    let s4 = (4.0 * tau).sin();
    let c4 = (4.0 * tau).cos();
    let s8 = (8.0 * tau).sin();

    (0..couplings.n_spins())
        .map(|i| {
            let c1 = constants.c1_per_site[i];
            let c2nd = constants.c2_per_site[i];
            let parallel = 1.0 - c1 * s2.powi(4) / 4.0 - c2nd * (4.0 * tau - s4) / 16.0;
            let perpendicular =
                -c1 * (8.0 * tau - s8) / 64.0 + c2nd * (4.0 * tau * (1.0 + 2.0 * c4) - s4 * (2.0 + c4)) / 16.0;
            let z: f64 = couplings.row(i).iter().map(|j| j * s2 * s2 / (2.0 * b)).sum();
            SpinComponents {
                parallel,
                perpendicular,
                x: c2 * parallel - s2 * perpendicular,
                y: s2 * parallel + c2 * perpendicular,
                z,
            }
        })
        .collect()
}

/// `N⁻¹ Σ_i ⟨σ_i^x⟩` from the closed forms.
pub fn perturbative_magnetization(couplings: &CouplingMatrix, tau: f64) -> f64 {
    let spins = perturbative_spins(couplings, tau);
    spins.iter().map(|s| s.x).sum::<f64>() / spins.len() as f64
}

/// `τ_x = π/4 + (C^(1)/2 + C^(2))·π/32`.
pub fn predicted_tau_x(couplings: &CouplingMatrix) -> f64 {
    let c = interaction_constants(couplings);
    FRAC_PI_4 + (c.c1_mean / 2.0 + c.c2_mean) * PI / 32.0
}

/// Coefficient `D_x` of `τ_x - π/4 = D_x (J/B)²` for this coupling shape.
pub fn predicted_coefficient(couplings: &CouplingMatrix) -> f64 {
    let jb = couplings.kac_mean() / couplings.field();
    if jb == 0.0 {
        return 0.0;
    }
    (predicted_tau_x(couplings) - FRAC_PI_4) / (jb * jb)
}

/// Everything the oracle predicts for one coupling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPrediction {
    pub constants: InteractionConstants,
    pub tau_x: f64,
    pub tau: Vec<f64>,
    /// `spins[t][i]`.
    pub spins: Vec<Vec<SpinComponents>>,
}

impl PerturbationPrediction {
    pub fn new(couplings: &CouplingMatrix, tau_grid: &[f64]) -> Self {
        Self {
            constants: interaction_constants(couplings),
            tau_x: predicted_tau_x(couplings),
            tau: tau_grid.to_vec(),
            spins: tau_grid.iter().map(|&t| perturbative_spins(couplings, t)).collect(),
        }
    }

    pub fn magnetization(&self) -> Vec<f64> {
        self.spins
            .iter()
            .map(|s| s.iter().map(|c| c.x).sum::<f64>() / s.len() as f64)
            .collect()
    }
}

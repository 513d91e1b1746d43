use num_complex::Complex64;
use rayon::prelude::*;

use super::fwht::fwht_in_place;
use super::{vec_ops, StateVector};
use crate::error::{Error, Result};
use crate::model::{raw_x_energies, CouplingMatrix};

/// Matrix-free `H = W·D_x·W + D_z`, with `W` the normalized Walsh–Hadamard
/// transform, `D_x` the unshifted classical x energies and
/// `D_z[n] = -B Σ_i z_i(n)`.
///
/// Each application costs two transforms, `O(N·2^N)`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n_spins: usize,
    x_diagonal: Vec<f64>,
    z_diagonal: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(couplings: &CouplingMatrix) -> Self {
        let n = couplings.n_spins();
        let field = couplings.field();
        let z_diagonal = (0..couplings.dimension())
            .map(|idx: usize| -field * (n as f64 - 2.0 * idx.count_ones() as f64))
            .collect();
        Self {
            n_spins: n,
            x_diagonal: raw_x_energies(couplings),
            z_diagonal,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dimension(&self) -> usize {
        self.z_diagonal.len()
    }

    /// Largest absolute diagonal entry in each basis; their sum bounds `‖H‖₂`.
    pub fn norm_bound(&self) -> f64 {
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        max_abs(&self.x_diagonal) + max_abs(&self.z_diagonal)
    }

    /// `output = H·input`. `scratch` is resized as needed.
    pub fn apply_into(&self, input: &[Complex64], output: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(input.len(), self.dimension());
        scratch.clear();
        scratch.extend_from_slice(input);
        fwht_in_place(scratch);
        vec_ops::scale_by_diagonal(scratch, &self.x_diagonal);
        fwht_in_place(scratch);

        let combine = |((out, s), (x, d)): ((&mut Complex64, &Complex64), (&Complex64, &f64))| {
            *out = *s + *x * *d;
        };
        if input.len() >= vec_ops::PARALLEL_LEN {
            output
                .par_iter_mut()
                .zip(scratch.par_iter())
                .zip(input.par_iter().zip(self.z_diagonal.par_iter()))
                .for_each(combine);
        } else {
            output
                .iter_mut()
                .zip(scratch.iter())
                .zip(input.iter().zip(self.z_diagonal.iter()))
                .for_each(combine);
        }
    }

    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut output = vec![Complex64::new(0.0, 0.0); input.len()];
        let mut scratch = Vec::with_capacity(input.len());
        self.apply_into(input, &mut output, &mut scratch);
        output
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let h_psi = self.apply(state.amplitudes());
        vec_ops::dot(state.amplitudes(), &h_psi).re
    }
}

/// `H|ψ⟩` for the chain described by `couplings`. The result is a plain
/// amplitude vector: it is not normalized.
pub fn apply_hamiltonian(couplings: &CouplingMatrix, state: &StateVector) -> Result<Vec<Complex64>> {
    if couplings.n_spins() != state.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: couplings.n_spins(),
            found: state.n_spins(),
        });
    }
    Ok(Hamiltonian::new(couplings).apply(state.amplitudes()))
}

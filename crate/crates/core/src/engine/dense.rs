use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CouplingMatrix;

/// Largest chain accepted by the dense eigen-decomposition path.
pub const DENSE_MAX_SPINS: usize = 12;

/// Explicit z-basis matrix of `H`, assembled element by element:
/// `σ_i^x σ_j^x` flips bits `i` and `j`, `σ_i^z` is diagonal.
pub fn dense_hamiltonian(couplings: &CouplingMatrix) -> DMatrix<f64> {
    let n = couplings.n_spins();
    let dim = couplings.dimension();
    let field = couplings.field();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for idx in 0..dim {
        let magnet = n as f64 - 2.0 * idx.count_ones() as f64;
        h[(idx, idx)] = -field * magnet;
        for (i, j, c) in couplings.pairs() {
            let flipped = idx ^ (1 << i) ^ (1 << j);
            h[(flipped, idx)] -= c;
        }
    }
    h
}

/// Full eigen-decomposition of `H`; used as the reference propagator.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl DensePropagator {
    pub fn new(couplings: &CouplingMatrix) -> Result<Self> {
        if couplings.n_spins() > DENSE_MAX_SPINS {
            return Err(Error::ResourceLimit {
                what: "dense eigen-decomposition N",
                requested: couplings.n_spins(),
                cap: DENSE_MAX_SPINS,
            });
        }
        let eig = SymmetricEigen::new(dense_hamiltonian(couplings));
        Ok(Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `e^{-iHt}` applied to `state` in place.
    pub fn propagate(&self, state: &mut [Complex64], t: f64) {
        let dim = self.energies.len();
        let mut projected = vec![Complex64::new(0.0, 0.0); dim];
        for (l, p) in projected.iter_mut().enumerate() {
            let column = self.vectors.column(l);
            let overlap: Complex64 = column.iter().zip(state.iter()).map(|(q, a)| a * q).sum();
            *p = overlap * Complex64::from_polar(1.0, -self.energies[l] * t);
        }
        for (idx, amp) in state.iter_mut().enumerate() {
            *amp = (0..dim).map(|l| projected[l] * self.vectors[(idx, l)]).sum();
        }
    }
}

//! Reference implementations shared by the integration tests. Everything here is
//! deliberately independent of the library's FWHT and Krylov code paths.
#![allow(dead_code)]

use dqpt::engine::StateVector;
use dqpt::model::CouplingMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrices in the basis (|0⟩ = z-up, |1⟩ = z-down).
pub fn pauli(axis: char) -> CMatrix {
    match axis {
        'x' => CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        'y' => CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        'z' => CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        _ => CMatrix::identity(2, 2),
    }
}

/// `⊗` over sites with site 0 as the least-significant bit, i.e. the
/// rightmost Kronecker factor.
pub fn site_operator(n: usize, ops: &[(usize, char)]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for site in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, a)| pauli(*a))
            .unwrap_or_else(|| CMatrix::identity(2, 2));
        out = out.kronecker(&factor);
    }
    out
}

/// `H = -Σ_{i<j} J_ij σ^x_i σ^x_j - B Σ_i σ^z_i` from Kronecker products.
pub fn kron_hamiltonian(couplings: &CouplingMatrix) -> CMatrix {
    let n = couplings.n_spins();
    let dim = 1 << n;
    let mut h = CMatrix::zeros(dim, dim);
    for (i, j, jij) in couplings.pairs() {
        h -= site_operator(n, &[(i, 'x'), (j, 'x')]) * c(jij, 0.0);
    }
    for i in 0..n {
        h -= site_operator(n, &[(i, 'z')]) * c(couplings.field(), 0.0);
    }
    h
}

/// Scaling-and-squaring Taylor exponential.
pub fn expm(a: &CMatrix) -> CMatrix {
    let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a * c(scale, 0.0);
    let dim = a.nrows();
    let mut term = CMatrix::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn to_column(state: &StateVector) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(state.dimension(), 1, state.amplitudes())
}

pub fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1 << n)
        .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    StateVector::normalized(n, amps).unwrap()
}

/// Random symmetric non-negative coupling table with unit field.
pub fn random_couplings(n: usize, seed: u64) -> CouplingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random::<f64>() * 0.5;
            table[i * n + j] = v;
            table[j * n + i] = v;
        }
    }
    CouplingMatrix::from_table(n, table, 1.0).unwrap()
}

/// `⟨ψ|O|ψ⟩` for a dense operator.
pub fn expectation(op: &CMatrix, state: &StateVector) -> Complex64 {
    let v = to_column(state);
    (v.adjoint() * op * &v)[(0, 0)]
}

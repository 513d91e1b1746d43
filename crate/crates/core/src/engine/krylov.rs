//! Lanczos propagation of `e^{-iHt}|ψ⟩` with adaptive sub-stepping.
//!
//! `H` is real symmetric in the z basis, so the short three-term recurrence
//! produces a real tridiagonal `T_k`. The step is accepted once the a-posteriori
//! estimate `‖ψ‖·β_k·|[e^{-iT_k dt} e₁]_k|` drops below `tolerance·|B|·dt`.
//! The Krylov basis does not depend on `dt`, so a failed step only shrinks `dt`
//! and re-evaluates the small exponential.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::hamiltonian::Hamiltonian;
use super::vec_ops;
use crate::error::{Error, Result};

/// Above this many bytes of stored basis the propagator regenerates the
/// Lanczos vectors in a second pass instead of keeping them.
const STORED_BASIS_BYTES: usize = 256 << 20;
const MAX_SUBSTEPS: usize = 1_000_000;

/// Eigen-decomposition of a small tridiagonal matrix, reused for several `dt`.
struct Tridiagonal {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Tridiagonal {
    fn new(alphas: &[f64], betas: &[f64]) -> Self {
        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `e^{-iT dt} e₁`.
    fn propagate_first(&self, dt: f64) -> Vec<Complex64> {
        let k = self.values.len();
        let phases: Vec<Complex64> = self
            .values
            .iter()
            .enumerate()
            .map(|(l, &lambda)| Complex64::from_polar(self.vectors[(0, l)], -lambda * dt))
            .collect();
        (0..k)
            .map(|i| (0..k).map(|l| phases[l] * self.vectors[(i, l)]).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct KrylovPropagator<'h> {
    hamiltonian: &'h Hamiltonian,
    krylov_dim: usize,
    tolerance: f64,
    time_unit: f64,
}

impl<'h> KrylovPropagator<'h> {
    /// `time_unit` is `|B|`; the tolerance is per unit of `τ = |B|t`.
    pub fn new(hamiltonian: &'h Hamiltonian, krylov_dim: usize, tolerance: f64, time_unit: f64) -> Self {
        Self {
            hamiltonian,
            krylov_dim: krylov_dim.max(2),
            tolerance,
            time_unit,
        }
    }

    fn stores_basis(&self) -> bool {
        self.hamiltonian.dimension() * self.krylov_dim * std::mem::size_of::<Complex64>() <= STORED_BASIS_BYTES
    }

    /// Runs the Lanczos recurrence from `start / beta0`.
    ///
    /// `on_vector(j, v_j)` sees every basis vector; `stop(alphas, betas)` is asked
    /// after each new `(α_j, β_j)`. Returns the recurrence coefficients and
    /// whether the space became invariant.
    fn lanczos(
        &self,
        start: &[Complex64],
        beta0: f64,
        limit: usize,
        mut on_vector: impl FnMut(usize, &[Complex64]),
        mut stop: impl FnMut(&[f64], &[f64]) -> bool,
    ) -> (Vec<f64>, Vec<f64>, bool) {
        let dim = start.len();
        let breakdown = 1e-13 * self.hamiltonian.norm_bound().max(1.0);
        let mut previous = vec![Complex64::new(0.0, 0.0); dim];
        let mut current: Vec<Complex64> = start.iter().map(|a| a / beta0).collect();
        let mut next = vec![Complex64::new(0.0, 0.0); dim];
        let mut scratch = Vec::with_capacity(dim);
        let mut alphas = Vec::with_capacity(limit);
        let mut betas: Vec<f64> = Vec::with_capacity(limit);

        for j in 0..limit {
            on_vector(j, &current);
            self.hamiltonian.apply_into(&current, &mut next, &mut scratch);
            if let Some(&beta_prev) = betas.last() {
                vec_ops::axpy(-beta_prev, &previous, &mut next);
            }
            let alpha = vec_ops::dot(&current, &next).re;
            vec_ops::axpy(-alpha, &current, &mut next);
            let beta = vec_ops::norm(&next);
            alphas.push(alpha);
            betas.push(beta);
            if beta < breakdown {
                return (alphas, betas, true);
            }
            if stop(&alphas, &betas) || j + 1 == limit {
                break;
            }
            vec_ops::scale_into(1.0 / beta, &next, &mut previous);
            std::mem::swap(&mut previous, &mut current);
        }
        (alphas, betas, false)
    }

    fn error_estimate(&self, tri: &Tridiagonal, beta0: f64, beta_last: f64, dt: f64) -> (Vec<Complex64>, f64) {
        let coef = tri.propagate_first(dt);
        let err = beta0 * beta_last * coef.last().map_or(0.0, |c| c.norm());
        (coef, err)
    }

    /// Propagates `state` in place by physical time `t ≥ 0`.
    pub fn propagate(&self, state: &mut [Complex64], t: f64) -> Result<()> {
        if t <= 0.0 {
            return Ok(());
        }
        let stores = self.stores_basis();
        let mut remaining = t;
        let mut dt = t;
        let mut basis: Vec<Vec<Complex64>> = Vec::new();

        for _ in 0..MAX_SUBSTEPS {
            dt = dt.min(remaining);
            let beta0 = vec_ops::norm(state);
            basis.clear();
            let tol = self.tolerance * self.time_unit;

            let mut accepted_early: Option<usize> = None;
            let (alphas, betas, invariant) = self.lanczos(
                state,
                beta0,
                self.krylov_dim,
                |_, v| {
                    if stores {
                        basis.push(v.to_vec());
                    }
                },
                |a, b| {
                    if a.len() < 2 {
                        return false;
                    }
                    let tri = Tridiagonal::new(a, &b[..a.len() - 1]);
                    let (_, err) = self.error_estimate(&tri, beta0, *b.last().unwrap(), dt);
                    if err <= tol * dt {
                        accepted_early = Some(a.len());
                        true
                    } else {
                        false
                    }
                },
            );
            let k = alphas.len();
            let tri = Tridiagonal::new(&alphas, &betas[..k - 1]);

            let coef = if invariant {
                dt = remaining;
                tri.propagate_first(dt)
            } else if accepted_early.is_some() {
                tri.propagate_first(dt)
            } else {
                let beta_last = betas[k - 1];
                let (mut coef, mut err) = self.error_estimate(&tri, beta0, beta_last, dt);
                while err > tol * dt {
                    // local error of a degree-k Krylov step scales like dt^k
                    let shrink = (0.9 * (tol * dt / err).powf(1.0 / k as f64)).clamp(0.05, 0.5);
                    dt *= shrink;
                    if dt < t * 1e-12 {
                        return Err(Error::KrylovNotConverged {
                            tau: (t - remaining) * self.time_unit,
                            residual: err,
                        });
                    }
                    (coef, err) = self.error_estimate(&tri, beta0, beta_last, dt);
                }
                coef
            };

            let mut updated = vec![Complex64::new(0.0, 0.0); state.len()];
            if stores {
                for (c, v) in coef.iter().zip(&basis) {
                    vec_ops::caxpy(*c * beta0, v, &mut updated);
                }
            } else {
                self.lanczos(
                    state,
                    beta0,
                    k,
                    |j, v| vec_ops::caxpy(coef[j] * beta0, v, &mut updated),
                    |_, _| false,
                );
            }
            state.copy_from_slice(&updated);

            remaining -= dt;
            if remaining <= t * 1e-14 {
                return Ok(());
            }
            if accepted_early.is_some() || invariant {
                dt *= 2.0;
            }
        }
        Err(Error::KrylovNotConverged {
            tau: (t - remaining) * self.time_unit,
            residual: f64::NAN,
        })
    }
}

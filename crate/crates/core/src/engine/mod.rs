//! Many-body states and their time evolution under `H = H₀ + H₁`.

mod dense;
mod fwht;
mod hamiltonian;
mod krylov;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use dense::{dense_hamiltonian, DensePropagator, DENSE_MAX_SPINS};
pub use fwht::fwht_in_place;
pub use hamiltonian::{apply_hamiltonian, Hamiltonian};
pub use krylov::KrylovPropagator;

use crate::error::{invalid, Error, Result};
use crate::model::CouplingMatrix;

/// One of the two polarized ground states of `H₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `|⇒⟩`: every spin in the `σ^x = +1` eigenstate.
    Right,
    /// `|⇐⟩`: every spin in the `σ^x = -1` eigenstate.
    Left,
}

/// Complex amplitudes over the z-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes; the length must be `2^n_spins` and the norm one to `1e-10`.
    pub fn from_amplitudes(n_spins: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_spins {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_spins,
                found: amplitudes.len(),
            });
        }
        let norm_sqr = vec_ops::norm_sqr(&amplitudes);
        if (norm_sqr - 1.0).abs() > 1e-10 {
            return Err(invalid("amplitudes", format!("squared norm {norm_sqr} is not 1")));
        }
        Ok(Self { n_spins, amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(n_spins: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vec_ops::norm(&amplitudes);
        if norm == 0.0 {
            return Err(invalid("amplitudes", "zero vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(n_spins, amplitudes)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        vec_ops::norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_spins != other.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                found: other.n_spins,
            });
        }
        Ok(vec_ops::dot(&self.amplitudes, &other.amplitudes))
    }

    /// `(⊗_i σ_i^z)|ψ⟩`, which exchanges `|⇒⟩` and `|⇐⟩`.
    pub fn z_parity_flipped(&self) -> StateVector {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(idx, &a)| if idx.count_ones() % 2 == 0 { a } else { -a })
            .collect();
        StateVector {
            n_spins: self.n_spins,
            amplitudes,
        }
    }
}

/// `|⇒⟩` or `|⇐⟩` on `n_spins` sites.
pub fn initial_state(n_spins: usize, direction: Direction) -> Result<StateVector> {
    if n_spins == 0 {
        return Err(invalid("n_spins", "must be at least 1"));
    }
    if n_spins > 30 {
        return Err(Error::ResourceLimit {
            what: "state size N",
            requested: n_spins,
            cap: 30,
        });
    }
    let amp = (0.5f64).powf(n_spins as f64 / 2.0);
    let amplitudes = (0..1usize << n_spins)
        .map(|idx| match direction {
            Direction::Right => Complex64::new(amp, 0.0),
            Direction::Left if idx.count_ones() % 2 == 1 => Complex64::new(-amp, 0.0),
            Direction::Left => Complex64::new(amp, 0.0),
        })
        .collect();
    Ok(StateVector { n_spins, amplitudes })
}

/// x-basis amplitudes of `state` (normalized FWHT).
pub fn fwht(state: &StateVector) -> StateVector {
    let mut amplitudes = state.amplitudes.clone();
    fwht_in_place(&mut amplitudes);
    StateVector {
        n_spins: state.n_spins,
        amplitudes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DenseEigen,
    Krylov,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" | "dense-eigen" => Ok(Method::DenseEigen),
            "krylov" => Ok(Method::Krylov),
            other => Err(invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::DenseEigen => "dense-eigen",
            Method::Krylov => "krylov",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPlan {
    pub method: Method,
    pub krylov_dim: usize,
    /// Local error budget per unit of `τ`.
    pub step_tolerance: f64,
    pub time_grid: Vec<f64>,
}

impl Default for PropagationPlan {
    fn default() -> Self {
        Self {
            method: Method::Krylov,
            krylov_dim: 30,
            step_tolerance: 1e-10,
            time_grid: uniform_grid(3.0, 200),
        }
    }
}

/// `points` uniformly spaced values over `[0, time_max]`.
pub fn uniform_grid(time_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| time_max * k as f64 / (points - 1) as f64).collect(),
    }
}

impl PropagationPlan {
    pub fn with_grid(time_grid: Vec<f64>) -> Self {
        Self {
            time_grid,
            ..Self::default()
        }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self, n_spins: usize) -> Result<()> {
        if self.method == Method::DenseEigen && n_spins > DENSE_MAX_SPINS {
            return Err(Error::ResourceLimit {
                what: "dense eigen-decomposition N",
                requested: n_spins,
                cap: DENSE_MAX_SPINS,
            });
        }
        if self.method == Method::Krylov {
            if !(self.step_tolerance > 0.0) {
                return Err(invalid("step_tolerance", "must be > 0"));
            }
            if self.krylov_dim < 2 {
                return Err(invalid("krylov_dim", "must be at least 2"));
            }
        }
        if let Some(&first) = self.time_grid.first() {
            if !(first >= 0.0) {
                return Err(invalid("time_grid", "must start at tau >= 0"));
            }
        }
        if self.time_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("time_grid", "must be strictly increasing"));
        }
        Ok(())
    }
}

/// A propagator bound to one Hamiltonian, reusable across many steps.
pub enum Propagator {
    Dense(DensePropagator),
    Krylov {
        hamiltonian: Hamiltonian,
        krylov_dim: usize,
        tolerance: f64,
    },
}

impl Propagator {
    pub fn new(couplings: &CouplingMatrix, plan: &PropagationPlan) -> Result<Self> {
        plan.validate(couplings.n_spins())?;
        Ok(match plan.method {
            Method::DenseEigen => Propagator::Dense(DensePropagator::new(couplings)?),
            Method::Krylov => Propagator::Krylov {
                hamiltonian: Hamiltonian::new(couplings),
                krylov_dim: plan.krylov_dim,
                tolerance: plan.step_tolerance,
            },
        })
    }

    /// Advances `amplitudes` by `dtau` in units of `τ = |B|t`.
    fn advance(&self, amplitudes: &mut [Complex64], dtau: f64, time_unit: f64) -> Result<()> {
        let t = dtau / time_unit;
        match self {
            Propagator::Dense(dense) => {
                dense.propagate(amplitudes, t);
                Ok(())
            }
            Propagator::Krylov {
                hamiltonian,
                krylov_dim,
                tolerance,
            } => KrylovPropagator::new(hamiltonian, *krylov_dim, *tolerance, time_unit).propagate(amplitudes, t),
        }
    }
}

fn check_dims(state: &StateVector, couplings: &CouplingMatrix) -> Result<()> {
    if state.n_spins() != couplings.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: couplings.n_spins(),
            found: state.n_spins(),
        });
    }
    Ok(())
}

/// `e^{-iHt}|ψ⟩` with `t = τ/|B|`.
pub fn evolve(
    state: &StateVector,
    couplings: &CouplingMatrix,
    tau: f64,
    plan: &PropagationPlan,
) -> Result<StateVector> {
    check_dims(state, couplings)?;
    if !(tau >= 0.0) {
        return Err(invalid("tau", format!("{tau} must be >= 0")));
    }
    let propagator = Propagator::new(couplings, plan)?;
    let mut amplitudes = state.amplitudes.clone();
    propagator.advance(&mut amplitudes, tau, couplings.field().abs())?;
    Ok(StateVector {
        n_spins: state.n_spins,
        amplitudes,
    })
}

/// Streams the state at every grid point to `visit`, stepping incrementally.
pub fn evolve_trace_with<F>(
    state: &StateVector,
    couplings: &CouplingMatrix,
    plan: &PropagationPlan,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(f64, &StateVector) -> Result<()>,
{
    check_dims(state, couplings)?;
    if plan.time_grid.is_empty() {
        return Err(invalid("time_grid", "must not be empty"));
    }
    let propagator = Propagator::new(couplings, plan)?;
    let time_unit = couplings.field().abs();
    let mut current = state.clone();
    let mut now = 0.0;
    for &tau in &plan.time_grid {
        propagator.advance(&mut current.amplitudes, tau - now, time_unit)?;
        now = tau;
        visit(tau, &current)?;
    }
    Ok(())
}

pub fn evolve_trace(
    state: &StateVector,
    couplings: &CouplingMatrix,
    plan: &PropagationPlan,
) -> Result<Vec<(f64, StateVector)>> {
    let mut out = Vec::with_capacity(plan.time_grid.len());
    evolve_trace_with(state, couplings, plan, |tau, s| {
        out.push((tau, s.clone()));
        Ok(())
    })?;
    Ok(out)
}

/// Deterministic vector kernels: reductions split into fixed blocks and
/// combine partial sums in index order, so results do not depend on scheduling.
pub(crate) mod vec_ops {
    use num_complex::Complex64;
    use rayon::prelude::*;

    pub const PARALLEL_LEN: usize = 1 << 14;
    const BLOCK: usize = 1 << 12;

    pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let partial =
            |(x, y): (&[Complex64], &[Complex64])| -> Complex64 { x.iter().zip(y).map(|(p, q)| p.conj() * q).sum() };
        if a.len() >= PARALLEL_LEN {
            let parts: Vec<Complex64> = a.par_chunks(BLOCK).zip(b.par_chunks(BLOCK)).map(partial).collect();
            parts.into_iter().sum()
        } else {
            partial((a, b))
        }
    }

    pub fn norm_sqr(a: &[Complex64]) -> f64 {
        let partial = |x: &[Complex64]| -> f64 { x.iter().map(|p| p.norm_sqr()).sum() };
        if a.len() >= PARALLEL_LEN {
            let parts: Vec<f64> = a.par_chunks(BLOCK).map(partial).collect();
            parts.into_iter().sum()
        } else {
            partial(a)
        }
    }

    pub fn norm(a: &[Complex64]) -> f64 {
        norm_sqr(a).sqrt()
    }

    /// `y += alpha·x` for real `alpha`.
    pub fn axpy(alpha: f64, x: &[Complex64], y: &mut [Complex64]) {
        if x.len() >= PARALLEL_LEN {
            y.par_iter_mut().zip(x.par_iter()).for_each(|(b, a)| *b += a * alpha);
        } else {
            y.iter_mut().zip(x).for_each(|(b, a)| *b += a * alpha);
        }
    }

    /// `y += alpha·x` for complex `alpha`.
    pub fn caxpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        if x.len() >= PARALLEL_LEN {
            y.par_iter_mut().zip(x.par_iter()).for_each(|(b, a)| *b += a * alpha);
        } else {
            y.iter_mut().zip(x).for_each(|(b, a)| *b += a * alpha);
        }
    }

    /// `out = alpha·x`.
    pub fn scale_into(alpha: f64, x: &[Complex64], out: &mut [Complex64]) {
        if x.len() >= PARALLEL_LEN {
            out.par_iter_mut().zip(x.par_iter()).for_each(|(o, a)| *o = a * alpha);
        } else {
            out.iter_mut().zip(x).for_each(|(o, a)| *o = a * alpha);
        }
    }

    pub fn scale_by_diagonal(x: &mut [Complex64], diagonal: &[f64]) {
        if x.len() >= PARALLEL_LEN {
            x.par_iter_mut().zip(diagonal.par_iter()).for_each(|(a, d)| *a *= *d);
        } else {
            x.iter_mut().zip(diagonal).for_each(|(a, d)| *a *= *d);
        }
    }
}

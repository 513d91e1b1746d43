//! Bipartite entanglement entropy and Kitagawa–Ueda spin squeezing.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::StateVector;
use crate::error::{invalid, Error, Result};
use crate::observables::{collective_covariance, CollectiveSpin};

/// Largest subsystem accepted by [`reduced_density_matrix`].
pub const MAX_SUBSET: usize = 12;
/// Mean spin lengths at or below `DIRECTION_THRESHOLD·N` have no direction.
pub const DIRECTION_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    pub subset: Vec<usize>,
    /// Row and column index bit `k` encodes `subset[k]`.
    pub matrix: DMatrix<Complex64>,
}

/// `Tr_B |ψ⟩⟨ψ|` for `A = subset`.
pub fn reduced_density_matrix(state: &StateVector, subset: &[usize]) -> Result<ReducedDensityMatrix> {
    let n = state.n_spins();
    if subset.len() > MAX_SUBSET {
        return Err(Error::ResourceLimit {
            what: "reduced density matrix subset size",
            requested: subset.len(),
            cap: MAX_SUBSET,
        });
    }
    let mut mask = 0usize;
    for &site in subset {
        if site >= n {
            return Err(invalid("subset", format!("site {site} is outside a chain of {n}")));
        }
        if mask >> site & 1 == 1 {
            return Err(invalid("subset", format!("site {site} appears twice")));
        }
        mask |= 1 << site;
    }
    let rest: Vec<usize> = (0..n).filter(|s| mask >> s & 1 == 0).collect();
    let (dim_a, dim_b) = (1usize << subset.len(), 1usize << rest.len());

    let mut psi = DMatrix::<Complex64>::zeros(dim_a, dim_b);
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let a = subset
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &s)| acc | (idx >> s & 1) << k);
        let b = rest
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &s)| acc | (idx >> s & 1) << k);
        psi[(a, b)] = *amp;
    }
    Ok(ReducedDensityMatrix {
        subset: subset.to_vec(),
        matrix: &psi * psi.adjoint(),
    })
}

/// Sites `0..N/2`; odd chains have no half.
pub fn half_chain(n_spins: usize) -> Result<Vec<usize>> {
    if n_spins % 2 == 1 || n_spins == 0 {
        return Err(invalid(
            "n_spins",
            format!("half-chain split needs an even chain, got {n_spins}"),
        ));
    }
    Ok((0..n_spins / 2).collect())
}

/// Eigenvalues of a Hermitian density matrix.
pub fn density_spectrum(rho: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let deviation = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if deviation > 1e-10 {
        return Err(Error::NonHermitian { deviation });
    }
    let hermitian = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(SymmetricEigen::new(hermitian).eigenvalues.iter().copied().collect())
}

/// `-Σ λ log λ`, natural log, `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    Ok(density_spectrum(rho)?
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum())
}

pub fn half_chain_entropy(state: &StateVector) -> Result<f64> {
    let rho = reduced_density_matrix(state, &half_chain(state.n_spins())?)?;
    von_neumann_entropy(&rho.matrix)
}

/// `a + b(1 + sin(2φ - c))` as used for perpendicular-variance scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Sinusoid {
    pub fn eval(&self, phi: f64) -> f64 {
        self.a + self.b * (1.0 + (2.0 * phi - self.c).sin())
    }

    /// Angle in `[0, π)` of the minimum.
    pub fn argmin(&self) -> f64 {
        (0.5 * (self.c - FRAC_PI_2)).rem_euclid(PI)
    }

    /// From `p0 + p1 cos 2φ + p2 sin 2φ`.
    fn from_fourier(p0: f64, p1: f64, p2: f64) -> Self {
        let b = p1.hypot(p2);
        Self {
            a: p0 - b,
            b,
            c: (-p1).atan2(p2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanFitDiagnostics {
    pub a_sigma: f64,
    pub xi_squared_sigma: f64,
    /// The modulation is not resolved; `c` and the optimal angle are arbitrary.
    pub degenerate: bool,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingResult {
    pub xi_squared: f64,
    /// `n⃗₀`; unknown when the result comes from a variance scan alone.
    pub mean_spin_direction: Option<[f64; 3]>,
    /// `φ*` measured from `e⃗₁` towards `e⃗₂`.
    pub optimal_angle: f64,
    pub sinusoid: Sinusoid,
    pub fit: Option<ScanFitDiagnostics>,
}

/// Unit `n⃗₀` and the perpendicular frame `e⃗₁ ∝ ẑ × n⃗₀` (or `x̂ × n⃗₀` when
/// `n⃗₀ ∥ ẑ`), `e⃗₂ = n⃗₀ × e⃗₁`.
pub fn perpendicular_frame(spin: &CollectiveSpin) -> Result<[[f64; 3]; 3]> {
    let length = spin.mean_length();
    if length <= DIRECTION_THRESHOLD * spin.n_spins as f64 {
        return Err(Error::UndefinedDirection { length });
    }
    let n0 = Vector3::from(spin.mean) / length;
    let mut e1 = Vector3::z().cross(&n0);
    if e1.norm() < 1e-6 {
        e1 = Vector3::x().cross(&n0);
    }
    let e1 = e1.normalize();
    let e2 = n0.cross(&e1);
    Ok([n0.into(), e1.into(), e2.into()])
}

fn direction(frame: &[[f64; 3]; 3], phi: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    [0, 1, 2].map(|k| c * frame[1][k] + s * frame[2][k])
}

/// Perpendicular variance of the spin-½ collective spin as an exact sinusoid.
pub fn perpendicular_sinusoid(spin: &CollectiveSpin) -> Result<Sinusoid> {
    let frame = perpendicular_frame(spin)?;
    let cov = Matrix3::from_fn(|i, j| spin.covariance[i][j]);
    let e1 = Vector3::from(frame[1]);
    let e2 = Vector3::from(frame[2]);
    let a11 = e1.dot(&(cov * e1));
    let a22 = e2.dot(&(cov * e2));
    let a12 = e1.dot(&(cov * e2));
    Ok(Sinusoid::from_fourier(0.5 * (a11 + a22), 0.5 * (a11 - a22), a12))
}

/// `ξ² = 4 min_φ Var(n⃗_⊥(φ)·S⃗) / N`.
pub fn squeezing_exact(state: &StateVector) -> Result<SqueezingResult> {
    let spin = collective_covariance(state);
    let frame = perpendicular_frame(&spin)?;
    let sinusoid = perpendicular_sinusoid(&spin)?;
    Ok(SqueezingResult {
        xi_squared: 4.0 * sinusoid.a / spin.n_spins as f64,
        mean_spin_direction: Some(frame[0]),
        optimal_angle: sinusoid.argmin(),
        sinusoid,
        fit: None,
    })
}

/// Unit vector `n⃗_⊥(φ)` in the frame of `state`'s mean spin.
pub fn scan_direction(state: &StateVector, phi: f64) -> Result<[f64; 3]> {
    Ok(direction(&perpendicular_frame(&collective_covariance(state))?, phi))
}

/// `(φ, Var(n⃗_⊥(φ)·S⃗))` for each angle.
pub fn variance_scan(state: &StateVector, angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    let spin = collective_covariance(state);
    let frame = perpendicular_frame(&spin)?;
    Ok(angles
        .iter()
        .map(|&phi| (phi, spin.variance_along(direction(&frame, phi))))
        .collect())
}

/// Weighted least-squares fit of `a + b(1 + sin(2φ - c))` to `(φ, variance, σ)`
/// samples. Nonpositive `σ` anywhere switches to unit weights with the
/// residual scale as error.
pub fn fit_variance_scan(samples: &[(f64, f64, f64)], n_spins: usize) -> Result<SqueezingResult> {
    let m = samples.len();
    if m < 5 {
        return Err(Error::InsufficientPoints {
            what: "variance scan",
            needed: 5,
            found: m,
        });
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.0), hi.max(s.0))
    });
    // an evenly spaced grid over one period stops one step short of π
    let coverage = (hi - lo) * m as f64 / (m - 1) as f64;
    if coverage < PI * (1.0 - 1e-9) {
        return Err(invalid("angles", "scan must span a full period of π"));
    }
    if n_spins == 0 {
        return Err(invalid("n_spins", "must be at least 1"));
    }

    let known = samples.iter().all(|s| s.2 > 0.0);
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for &(phi, v, s) in samples {
        let w = if known { 1.0 / (s * s) } else { 1.0 };
        let row = Vector3::new(1.0, (2.0 * phi).cos(), (2.0 * phi).sin());
        normal += w * row * row.transpose();
        rhs += w * v * row;
    }
    let inverse = normal
        .try_inverse()
        .ok_or(invalid("angles", "scan angles do not resolve a sinusoid"))?;
    let p = inverse * rhs;
    let chi2: f64 = samples
        .iter()
        .map(|&(phi, v, s)| {
            let w = if known { 1.0 / (s * s) } else { 1.0 };
            let r = v - p[0] - p[1] * (2.0 * phi).cos() - p[2] * (2.0 * phi).sin();
            w * r * r
        })
        .sum();
    let cov = if known {
        inverse
    } else {
        inverse * (chi2 / (m - 3) as f64)
    };

    let sinusoid = Sinusoid::from_fourier(p[0], p[1], p[2]);
    let r = sinusoid.b;
    let r_var = if r > 0.0 {
        (p[1] * p[1] * cov[(1, 1)] + p[2] * p[2] * cov[(2, 2)] + 2.0 * p[1] * p[2] * cov[(1, 2)]) / (r * r)
    } else {
        0.0
    };
    let degenerate = r <= 1e-12 * p[0].abs().max(1e-300) || r * r <= 4.0 * r_var;
    let grad = if r > 0.0 {
        Vector3::new(1.0, -p[1] / r, -p[2] / r)
    } else {
        Vector3::new(1.0, 0.0, 0.0)
    };
    let a_sigma = (grad.dot(&(cov * grad))).max(0.0).sqrt();
    let n = n_spins as f64;
    Ok(SqueezingResult {
        xi_squared: 4.0 * sinusoid.a / n,
        mean_spin_direction: None,
        optimal_angle: sinusoid.argmin(),
        sinusoid,
        fit: Some(ScanFitDiagnostics {
            a_sigma,
            xi_squared_sigma: 4.0 * a_sigma / n,
            degenerate,
            points: m,
        }),
    })
}

//! Long-range transverse-field Ising chain.
//!
//! The Hamiltonian is `H = -Σ_{i<j} J_ij σ_i^x σ_j^x - B Σ_i σ_i^z` with power-law
//! couplings `J_ij ∝ |i-j|^-α` on an open chain. Couplings are Kac-normalized so
//! that the mean coupling `Σ_{i<j} J_ij / (N-1)` equals the requested `J`.
//!
//! Basis indices encode site `i` in bit `i` (site 0 is the least-significant bit).
//! In the x-product basis bit value 0 means `s_i = +1`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Largest chain for which the `2^N` classical tables are built by default.
pub const DEFAULT_SPECTRUM_CAP: usize = 24;

/// Symmetric coupling table plus the transverse field.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n_spins: usize,
    /// Row-major `N × N`, zero diagonal, in the same energy units as `field`.
    couplings: Vec<f64>,
    field: f64,
    alpha: f64,
    j_over_b: f64,
}

impl CouplingMatrix {
    /// Kac-normalized power-law couplings on an open chain.
    pub fn power_law(n_spins: usize, alpha: f64, j_over_b: f64, field: f64) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins", "must be at least 1"));
        }
        if !(0.0..3.0).contains(&alpha) {
            return Err(invalid("alpha", format!("{alpha} is outside [0, 3)")));
        }
        if !(j_over_b >= 0.0) || !j_over_b.is_finite() {
            return Err(invalid("j_over_b", format!("{j_over_b} must be finite and >= 0")));
        }
        if !(field > 0.0) || !field.is_finite() {
            return Err(invalid("field", format!("{field} must be finite and > 0")));
        }

        let n = n_spins;
        let profile = |d: usize| (d as f64).powf(-alpha);
        // Σ_{i<j} |i-j|^-α grouped by distance: N-d pairs at distance d.
        let pair_sum: f64 = (1..n).map(|d| (n - d) as f64 * profile(d)).sum();
        let scale = if n > 1 {
            j_over_b * field * (n - 1) as f64 / pair_sum
        } else {
            0.0
        };

        let mut couplings = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    couplings[i * n + j] = scale * profile(i.abs_diff(j));
                }
            }
        }
        Ok(Self {
            n_spins,
            couplings,
            field,
            alpha,
            j_over_b,
        })
    }

    /// Arbitrary symmetric coupling table. `alpha` is recorded as NaN and
    /// `j_over_b` is recomputed from the Kac mean.
    pub fn from_table(n_spins: usize, couplings: Vec<f64>, field: f64) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins", "must be at least 1"));
        }
        if couplings.len() != n_spins * n_spins {
            return Err(Error::DimensionMismatch {
                expected: n_spins * n_spins,
                found: couplings.len(),
            });
        }
        if field == 0.0 || !field.is_finite() {
            return Err(invalid("field", "must be finite and nonzero"));
        }
        let n = n_spins;
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(invalid("couplings", format!("diagonal entry {i} is nonzero")));
            }
            for j in (i + 1)..n {
                if couplings[i * n + j] != couplings[j * n + i] {
                    return Err(invalid("couplings", format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        let mut matrix = Self {
            n_spins,
            couplings,
            field,
            alpha: f64::NAN,
            j_over_b: 0.0,
        };
        matrix.j_over_b = matrix.kac_mean() / field;
        Ok(matrix)
    }

    /// The mirrored Hamiltonian `-H`: every coupling and the field change sign.
    pub fn negated(&self) -> Self {
        Self {
            n_spins: self.n_spins,
            couplings: self.couplings.iter().map(|c| -c).collect(),
            field: -self.field,
            alpha: self.alpha,
            j_over_b: self.j_over_b,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn j_over_b(&self) -> f64 {
        self.j_over_b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n_spins + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n_spins..(i + 1) * self.n_spins]
    }

    /// Iterator over `(i, j, J_ij)` for `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_spins;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.get(i, j))))
    }

    /// `Σ_{i<j} J_ij / (N-1)`; zero for a single spin.
    pub fn kac_mean(&self) -> f64 {
        if self.n_spins < 2 {
            return 0.0;
        }
        self.pairs().map(|(_, _, c)| c).sum::<f64>() / (self.n_spins - 1) as f64
    }

    /// `Σ_{i<j} J_ij`, the negative of the polarized-state energy of `H₀`.
    pub fn total_coupling(&self) -> f64 {
        self.pairs().map(|(_, _, c)| c).sum()
    }

    /// Dimension of the many-body Hilbert space.
    pub fn dimension(&self) -> usize {
        1usize << self.n_spins
    }
}

/// Unshifted classical energies `-Σ_{i<j} J_ij s_i s_j` for every x configuration.
pub(crate) fn raw_x_energies(couplings: &CouplingMatrix) -> Vec<f64> {
    let pairs: Vec<(u32, u32, f64)> = couplings.pairs().map(|(i, j, c)| (i as u32, j as u32, c)).collect();
    (0..couplings.dimension())
        .into_par_iter()
        .with_min_len(1 << 10)
        .map(|config| {
            let mut energy = 0.0;
            for &(i, j, c) in &pairs {
                let aligned = ((config >> i) ^ (config >> j)) & 1 == 0;
                energy += if aligned { -c } else { c };
            }
            energy
        })
        .collect()
}

/// Classical spectrum of `H₀` in the x-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct XSpectrum {
    n_spins: usize,
    /// `E_ν` with the ground energy shifted to exactly zero.
    pub energies: Vec<f64>,
    /// `M_ν = N⁻¹ Σ_i s_i(ν)`.
    pub magnetizations: Vec<f64>,
    /// Many-body bandwidth `W = max E_ν`.
    pub bandwidth: f64,
    /// Raw (unshifted) ground energy.
    pub ground_energy: f64,
}

impl XSpectrum {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

pub fn classical_x_spectrum(couplings: &CouplingMatrix) -> Result<XSpectrum> {
    classical_x_spectrum_with_cap(couplings, DEFAULT_SPECTRUM_CAP)
}

pub fn classical_x_spectrum_with_cap(couplings: &CouplingMatrix, cap: usize) -> Result<XSpectrum> {
    let n = couplings.n_spins();
    if n > cap {
        return Err(Error::ResourceLimit {
            what: "spectrum size N",
            requested: n,
            cap,
        });
    }
    let mut energies = raw_x_energies(couplings);
    let ground_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut bandwidth: f64 = 0.0;
    for e in &mut energies {
        *e -= ground_energy;
        bandwidth = bandwidth.max(*e);
    }
    let magnetizations = (0..couplings.dimension())
        .map(|config: usize| (n as f64 - 2.0 * config.count_ones() as f64) / n as f64)
        .collect();
    Ok(XSpectrum {
        n_spins: n,
        energies,
        magnetizations,
        bandwidth,
        ground_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_range_four_spins() {
        let c = CouplingMatrix::power_law(4, 0.0, 1.0, 1.0).unwrap();
        for (_, _, value) in c.pairs() {
            assert!((value - 0.5).abs() < 1e-15);
        }
        assert!((c.kac_mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_spin_has_no_couplings() {
        let c = CouplingMatrix::power_law(1, 1.0, 0.7, 1.0).unwrap();
        assert_eq!(c.pairs().count(), 0);
        assert_eq!(c.kac_mean(), 0.0);
    }

    #[test]
    fn nearest_neighbour_mask_gives_uniform_bonds() {
        // Mask a long-range table to |i-j| = 1 and renormalize; every bond equals J.
        let n = 7;
        let j = 0.3;
        let base = CouplingMatrix::power_law(n, 1.0, j, 1.0).unwrap();
        let mut table = vec![0.0; n * n];
        for i in 0..n - 1 {
            table[i * n + i + 1] = base.get(i, i + 1);
            table[(i + 1) * n + i] = base.get(i, i + 1);
        }
        let masked = CouplingMatrix::from_table(n, table, 1.0).unwrap();
        let rescale = j / masked.kac_mean();
        for i in 0..n - 1 {
            assert!((masked.get(i, i + 1) * rescale - j).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_out_of_range_alpha_and_empty_chain() {
        assert!(CouplingMatrix::power_law(4, -0.1, 1.0, 1.0).is_err());
        assert!(CouplingMatrix::power_law(4, 3.0, 1.0, 1.0).is_err());
        assert!(CouplingMatrix::power_law(0, 1.0, 1.0, 1.0).is_err());
        assert!(CouplingMatrix::power_law(4, 1.0, -1.0, 1.0).is_err());
        assert!(CouplingMatrix::power_law(4, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn kac_invariant_on_grid() {
        for n in 2..=12 {
            for &alpha in &[0.0, 0.5, 1.08, 2.0, 2.9] {
                let c = CouplingMatrix::power_law(n, alpha, 0.42, 1.7).unwrap();
                let rel = (c.kac_mean() - 0.42 * 1.7).abs() / (0.42 * 1.7);
                assert!(rel < 1e-12, "n={n} alpha={alpha} rel={rel}");
                for i in 0..n {
                    assert_eq!(c.get(i, i), 0.0);
                    for j in 0..n {
                        assert_eq!(c.get(i, j), c.get(j, i));
                        assert!(c.get(i, j) >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn two_spin_spectrum_by_hand() {
        let j = 0.8;
        let c = CouplingMatrix::power_law(2, 0.0, j, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        // configurations 0 = ++, 1 = -+ (site 0 down), 2 = +-, 3 = --
        let expected = [0.0, 2.0 * j, 2.0 * j, 0.0];
        for (e, x) in s.energies.iter().zip(expected) {
            assert!((e - x).abs() < 1e-15);
        }
        assert_eq!(s.magnetizations, vec![1.0, 0.0, 0.0, -1.0]);
        assert!((s.ground_energy + j).abs() < 1e-15);
        assert!((s.bandwidth - 2.0 * j).abs() < 1e-15);
    }

    #[test]
    fn infinite_range_degeneracies_are_binomial() {
        let n = 8;
        let c = CouplingMatrix::power_law(n, 0.0, 0.5, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        // brute-force oracle: group by number of flipped spins
        let j0 = c.get(0, 1);
        for config in 0..(1usize << n) {
            let total: i64 = (0..n).map(|i| if config >> i & 1 == 0 { 1 } else { -1 }).sum();
            let raw = -j0 * ((total * total) as f64 - n as f64) / 2.0;
            assert!((s.energies[config] - (raw - s.ground_energy)).abs() < 1e-12);
        }
        let mut levels: Vec<(f64, usize)> = Vec::new();
        for &e in &s.energies {
            match levels.iter_mut().find(|(v, _)| (v - e).abs() < 1e-9) {
                Some(level) => level.1 += 1,
                None => levels.push((e, 1)),
            }
        }
        levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // |Σs| = 8, 6, 4, 2, 0 → 2, 16, 56, 112, 70
        let counts: Vec<usize> = levels.iter().map(|l| l.1).collect();
        assert_eq!(counts, vec![2, 16, 56, 112, 70]);
    }

    #[test]
    fn spectrum_cap_is_enforced() {
        let c = CouplingMatrix::power_law(6, 0.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            classical_x_spectrum_with_cap(&c, 5),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn global_flip_symmetry_and_two_ground_states() {
        let c = CouplingMatrix::power_law(9, 1.08, 0.42, 1.0).unwrap();
        let s = classical_x_spectrum(&c).unwrap();
        let mask = s.len() - 1;
        for config in 0..s.len() {
            assert_eq!(s.energies[config], s.energies[config ^ mask]);
            assert_eq!(s.magnetizations[config], -s.magnetizations[config ^ mask]);
        }
        let zeros: Vec<usize> = (0..s.len()).filter(|&k| s.energies[k] == 0.0).collect();
        assert_eq!(zeros, vec![0, mask]);
        assert_eq!(s.magnetizations[0], 1.0);
    }
}

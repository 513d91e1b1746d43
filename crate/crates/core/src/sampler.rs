//! Finite-shot projective measurements of a state vector.
//!
//! Outcome strings list sites in chain order, site 0 first; `0` is the `+1`
//! eigenvalue of the measured operator and `1` the `-1` eigenvalue.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::StateVector;
use crate::error::{invalid, Error, Result};
use crate::observables::Axis;

/// Name of the generator recorded alongside every sample set.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha, seed_from_u64)";

type Gate = [[Complex64; 2]; 2];

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unitary whose rows are `⟨+n|` and `⟨-n|`, so the measured eigenbasis maps
/// onto the z basis.
fn direction_gate(n: [f64; 3]) -> Gate {
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    let (s, co) = (0.5 * theta).sin_cos();
    let e = Complex64::from_polar(1.0, -phi);
    [[c(co, 0.0), e * s], [c(s, 0.0), -e * co]]
}

fn axis_gate(axis: Axis) -> Gate {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        Axis::X => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        Axis::Y => [[c(h, 0.0), c(0.0, -h)], [c(h, 0.0), c(0.0, h)]],
        Axis::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
    }
}

fn apply_gate(amps: &mut [Complex64], site: usize, gate: &Gate) {
    let bit = 1usize << site;
    for idx in 0..amps.len() {
        if idx & bit == 0 {
            let (a0, a1) = (amps[idx], amps[idx | bit]);
            amps[idx] = gate[0][0] * a0 + gate[0][1] * a1;
            amps[idx | bit] = gate[1][0] * a0 + gate[1][1] * a1;
        }
    }
}

/// Draws `shots` outcome indices from `|amps|²`.
fn draw(amps: &[Complex64], shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut cdf = Vec::with_capacity(amps.len());
    let mut acc = 0.0;
    for a in amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&v| v <= u).min(amps.len() - 1);
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
}

fn outcome_string(idx: usize, n: usize) -> String {
    (0..n).map(|s| if idx >> s & 1 == 0 { '0' } else { '1' }).collect()
}

fn outcome_index(bits: &str) -> Result<usize> {
    bits.chars().enumerate().try_fold(0usize, |acc, (s, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << s),
        other => Err(invalid("outcome", format!("unexpected character `{other}`"))),
    })
}

/// Counts of a product-basis measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// One axis label per site, site 0 first.
    pub basis: String,
    pub shots: u64,
    pub seed: u64,
    pub rng: String,
    pub counts: BTreeMap<String, u64>,
}

impl MeasurementRecord {
    pub fn n_spins(&self) -> usize {
        self.basis.len()
    }

    fn indexed_counts(&self) -> Result<Vec<(usize, u64)>> {
        self.counts.iter().map(|(k, &v)| Ok((outcome_index(k)?, v))).collect()
    }

    fn require_all_x(&self) -> Result<()> {
        if self.basis.chars().all(|c| c == 'x') {
            Ok(())
        } else {
            Err(Error::WrongBasis)
        }
    }
}

/// Parses a basis string such as `"xxyz"`; a single letter applies to every site.
pub fn parse_basis(basis: &str, n_spins: usize) -> Result<Vec<Axis>> {
    let axes = basis.chars().map(Axis::try_from).collect::<Result<Vec<_>>>()?;
    match axes.len() {
        1 => Ok(vec![axes[0]; n_spins]),
        len if len == n_spins => Ok(axes),
        len => Err(Error::DimensionMismatch {
            expected: n_spins,
            found: len,
        }),
    }
}

/// Measures every site along its axis, `shots` times.
pub fn sample_basis(state: &StateVector, basis: &[Axis], shots: u64, seed: u64) -> Result<MeasurementRecord> {
    let n = state.n_spins();
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let mut amps = state.amplitudes().to_vec();
    for (site, &axis) in basis.iter().enumerate() {
        if axis != Axis::Z {
            apply_gate(&mut amps, site, &axis_gate(axis));
        }
    }
    let counts = draw(&amps, shots, seed)
        .into_iter()
        .map(|(idx, k)| (outcome_string(idx, n), k))
        .collect();
    Ok(MeasurementRecord {
        basis: basis.iter().map(|a| a.label()).collect(),
        shots,
        seed,
        rng: RNG_NAME.to_string(),
        counts,
    })
}

/// A value with its 1σ standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    fn binomial(hits: u64, shots: u64) -> Self {
        let p = hits as f64 / shots as f64;
        Self {
            value: p,
            sigma: (p * (1.0 - p) / shots as f64).sqrt(),
        }
    }
}

/// Fractions of all-`+1` and all-`-1` outcomes with binomial errors.
pub fn estimate_return_probabilities(record: &MeasurementRecord) -> Result<(Estimate, Estimate)> {
    record.require_all_x()?;
    let n = record.n_spins();
    let all_down = (1usize << n) - 1;
    let (mut right, mut left) = (0, 0);
    for (idx, k) in record.indexed_counts()? {
        if idx == 0 {
            right += k;
        }
        if idx == all_down {
            left += k;
        }
    }
    Ok((
        Estimate::binomial(right, record.shots),
        Estimate::binomial(left, record.shots),
    ))
}

/// Shot-averaged `N⁻¹ Σ_i s_i`; the error is the per-shot standard deviation
/// over `√shots`, which keeps inter-site correlations.
pub fn estimate_magnetization(record: &MeasurementRecord) -> Result<Estimate> {
    record.require_all_x()?;
    let n = record.n_spins() as f64;
    let shots = record.shots as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (idx, k) in record.indexed_counts()? {
        let m = (n - 2.0 * idx.count_ones() as f64) / n;
        s1 += k as f64 * m;
        s2 += k as f64 * m * m;
    }
    let mean = s1 / shots;
    let variance = if record.shots > 1 {
        ((s2 - shots * mean * mean) / (shots - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean,
        sigma: (variance / shots).sqrt(),
    })
}

/// Histogram of `n⃗·S⃗ = ½ Σ_i s_i` over shots, keyed by the number of `-1`
/// outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub direction: [f64; 3],
    pub n_spins: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<usize, u64>,
}

/// Rotates every spin so that `direction` maps to z and samples the collective
/// projection.
pub fn sample_projection(state: &StateVector, direction: [f64; 3], shots: u64, seed: u64) -> Result<ProjectionRecord> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(invalid("direction", "must be nonzero"));
    }
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let unit = direction.map(|v| v / norm);
    let gate = direction_gate(unit);
    let mut amps = state.amplitudes().to_vec();
    for site in 0..state.n_spins() {
        apply_gate(&mut amps, site, &gate);
    }
    let mut counts = BTreeMap::new();
    for (idx, k) in draw(&amps, shots, seed) {
        *counts.entry(idx.count_ones() as usize).or_insert(0) += k;
    }
    Ok(ProjectionRecord {
        direction: unit,
        n_spins: state.n_spins(),
        shots,
        seed,
        counts,
    })
}

/// Unbiased sample variance of the projection and its large-sample error
/// `sqrt((m₄ - s⁴(n-3)/(n-1))/n)`.
pub fn projection_variance(record: &ProjectionRecord) -> Estimate {
    let n = record.n_spins as f64;
    let shots = record.shots as f64;
    let values = || {
        record
            .counts
            .iter()
            .map(move |(&down, &k)| (0.5 * (n - 2.0 * down as f64), k as f64))
    };
    let mean = values().map(|(v, k)| v * k).sum::<f64>() / shots;
    if record.shots < 2 {
        return Estimate {
            value: 0.0,
            sigma: f64::INFINITY,
        };
    }
    let m2 = values().map(|(v, k)| k * (v - mean).powi(2)).sum::<f64>() / shots;
    let m4 = values().map(|(v, k)| k * (v - mean).powi(4)).sum::<f64>() / shots;
    let s2 = m2 * shots / (shots - 1.0);
    let var_s2 = ((m4 - s2 * s2 * (shots - 3.0) / (shots - 1.0)) / shots).max(0.0);
    Estimate {
        value: s2,
        sigma: var_s2.sqrt(),
    }
}

/// Independent per-task seeds derived from one master seed.
pub fn derive_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random()).collect()
}

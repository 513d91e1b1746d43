//! Rate functions, crossing detection and critical-time estimation.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Probabilities below this are floored before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-300;
/// Minimum number of points in a fit window.
pub const MIN_FIT_POINTS: usize = 4;

/// Return probabilities and the rate functions derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    pub n_spins: usize,
    pub tau: Vec<f64>,
    pub p_right: Vec<f64>,
    pub p_left: Vec<f64>,
    /// `-N⁻¹ log P_⇒`.
    pub lambda_right: Vec<f64>,
    /// `-N⁻¹ log P_⇐`.
    pub lambda_left: Vec<f64>,
    /// `-N⁻¹ log(P_⇒ + P_⇐)`.
    pub lambda_total: Vec<f64>,
    /// `min(λ_⇒, λ_⇐)`.
    pub lambda_min: Vec<f64>,
    pub floored_right: Vec<bool>,
    pub floored_left: Vec<bool>,
}

fn floored_log(p: f64) -> (f64, bool) {
    if p < PROBABILITY_FLOOR {
        (PROBABILITY_FLOOR.ln(), true)
    } else {
        (p.ln(), false)
    }
}

pub fn rate_functions(tau: &[f64], p_right: &[f64], p_left: &[f64], n_spins: usize) -> Result<RateTrace> {
    if n_spins == 0 {
        return Err(invalid("n_spins", "must be at least 1"));
    }
    for series in [p_right, p_left] {
        if series.len() != tau.len() {
            return Err(Error::DimensionMismatch {
                expected: tau.len(),
                found: series.len(),
            });
        }
        if let Some(bad) = series.iter().find(|p| !(**p >= 0.0 && **p <= 1.0 + 1e-9)) {
            return Err(invalid("probability", format!("{bad} is outside [0, 1]")));
        }
    }
    if tau.is_empty() || p_right.iter().zip(p_left).all(|(r, l)| r + l == 0.0) {
        return Err(Error::NoRateDefined);
    }

    let n = n_spins as f64;
    let mut trace = RateTrace {
        n_spins,
        tau: tau.to_vec(),
        p_right: p_right.to_vec(),
        p_left: p_left.to_vec(),
        lambda_right: Vec::with_capacity(tau.len()),
        lambda_left: Vec::with_capacity(tau.len()),
        lambda_total: Vec::with_capacity(tau.len()),
        lambda_min: Vec::with_capacity(tau.len()),
        floored_right: Vec::with_capacity(tau.len()),
        floored_left: Vec::with_capacity(tau.len()),
    };
    for (&r, &l) in p_right.iter().zip(p_left) {
        let (log_r, floor_r) = floored_log(r);
        let (log_l, floor_l) = floored_log(l);
        let (log_total, _) = floored_log(r + l);
        let lr = -log_r / n;
        let ll = -log_l / n;
        trace.lambda_right.push(lr);
        trace.lambda_left.push(ll);
        trace.lambda_total.push(-log_total / n);
        trace.lambda_min.push(lr.min(ll));
        trace.floored_right.push(floor_r);
        trace.floored_left.push(floor_l);
    }
    Ok(trace)
}

impl RateTrace {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// `λ_⇐ - λ_⇒`, positive while `P_⇒` dominates.
    fn dominance(&self) -> Vec<f64> {
        self.lambda_left
            .iter()
            .zip(&self.lambda_right)
            .map(|(l, r)| l - r)
            .collect()
    }

    /// `P_⇒ / (P_⇒ + P_⇐)`.
    pub fn right_fraction(&self) -> Vec<f64> {
        self.p_right
            .iter()
            .zip(&self.p_left)
            .map(|(r, l)| if r + l > 0.0 { r / (r + l) } else { 0.5 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Crossing,
    LinearFit,
}

/// Weighted straight line `y = intercept + slope·(τ - center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub center: f64,
    pub intercept: f64,
    pub slope: f64,
    pub intercept_variance: f64,
    pub slope_variance: f64,
    /// `sqrt(χ²/(n-2))`, with unit weights when no uncertainties are given.
    pub rms: f64,
    pub points: usize,
    pub tau_start: f64,
    pub tau_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub right: LineFit,
    pub left: LineFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalTimeEstimate {
    pub tau_crit: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: EstimateMethod,
    pub diagnostics: Option<FitDiagnostics>,
}

impl CriticalTimeEstimate {
    /// Half-width of the 1σ interval.
    pub fn sigma(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Locates sign changes of `values` by linear interpolation. A value that is
/// exactly zero counts as a crossing only if the sign differs on both sides.
fn sign_changes(tau: &[f64], values: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for k in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[k], values[k + 1]);
        if a == 0.0 || a.is_nan() || b.is_nan() {
            continue;
        }
        if b == 0.0 {
            let next = values[k + 1..].iter().find(|v| **v != 0.0);
            if next.is_some_and(|v| v.signum() != a.signum()) {
                out.push((k, k + 1, tau[k + 1]));
            }
        } else if a.signum() != b.signum() {
            let t = tau[k] + a / (a - b) * (tau[k + 1] - tau[k]);
            out.push((k, k + 1, t));
        }
    }
    out
}

/// First zero of a sampled function, linearly interpolated.
pub fn first_sign_change(tau: &[f64], values: &[f64]) -> Result<f64> {
    sign_changes(tau, values).first().map(|c| c.2).ok_or(Error::NoCrossing)
}

/// Every crossing of `P_⇒` and `P_⇐` in the trace, in time order.
pub fn all_crossings(trace: &RateTrace) -> Vec<CriticalTimeEstimate> {
    // The log ratio is close to linear between grid points, unlike P_⇒ - P_⇐.
    sign_changes(&trace.tau, &trace.dominance())
        .into_iter()
        .map(|(a, b, t)| CriticalTimeEstimate {
            tau_crit: t,
            ci_low: trace.tau[a],
            ci_high: trace.tau[b],
            method: EstimateMethod::Crossing,
            diagnostics: None,
        })
        .collect()
}

/// First crossing of `P_⇒` and `P_⇐`; the interval is the bracketing grid cell.
pub fn crossing_time(trace: &RateTrace) -> Result<CriticalTimeEstimate> {
    all_crossings(trace).into_iter().next().ok_or(Error::NoCrossing)
}

/// `log P_⇒`, `log P_⇐` with optional 1σ uncertainties, as fed to the line fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbabilitySeries {
    pub tau: Vec<f64>,
    pub log_right: Vec<f64>,
    pub log_left: Vec<f64>,
    pub sigma_right: Option<Vec<f64>>,
    pub sigma_left: Option<Vec<f64>>,
    pub excluded_right: Vec<bool>,
    pub excluded_left: Vec<bool>,
}

impl LogProbabilitySeries {
    /// Noiseless series; floored points are excluded.
    pub fn from_rate_trace(trace: &RateTrace) -> Self {
        let n = trace.n_spins as f64;
        Self {
            tau: trace.tau.clone(),
            log_right: trace.lambda_right.iter().map(|l| -l * n).collect(),
            log_left: trace.lambda_left.iter().map(|l| -l * n).collect(),
            sigma_right: None,
            sigma_left: None,
            excluded_right: trace.floored_right.clone(),
            excluded_left: trace.floored_left.clone(),
        }
    }

    /// Sampled `(p̂, σ)` pairs. `σ_log = σ/p̂`; points with `p̂ ∈ {0, 1}` are excluded.
    pub fn from_sampled(tau: &[f64], right: &[(f64, f64)], left: &[(f64, f64)]) -> Result<Self> {
        for series in [right, left] {
            if series.len() != tau.len() {
                return Err(Error::DimensionMismatch {
                    expected: tau.len(),
                    found: series.len(),
                });
            }
        }
        let convert = |series: &[(f64, f64)]| {
            let mut logs = Vec::with_capacity(series.len());
            let mut sigmas = Vec::with_capacity(series.len());
            let mut excluded = Vec::with_capacity(series.len());
            for &(p, s) in series {
                let bad = !(p > 0.0) || !(s > 0.0);
                logs.push(if bad { f64::NAN } else { p.ln() });
                sigmas.push(if bad { f64::NAN } else { s / p });
                excluded.push(bad);
            }
            (logs, sigmas, excluded)
        };
        let (log_right, sigma_right, excluded_right) = convert(right);
        let (log_left, sigma_left, excluded_left) = convert(left);
        Ok(Self {
            tau: tau.to_vec(),
            log_right,
            log_left,
            sigma_right: Some(sigma_right),
            sigma_left: Some(sigma_left),
            excluded_right,
            excluded_left,
        })
    }
}

fn fit_line(tau: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Option<LineFit> {
    let n = tau.len();
    if n < 3 {
        return None;
    }
    let weights: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; n],
    };
    let sw: f64 = weights.iter().sum();
    let center = weights.iter().zip(tau).map(|(w, x)| w * x).sum::<f64>() / sw;
    let intercept = weights.iter().zip(y).map(|(w, v)| w * v).sum::<f64>() / sw;
    let sxx: f64 = weights.iter().zip(tau).map(|(w, x)| w * (x - center).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = weights
        .iter()
        .zip(tau.iter().zip(y))
        .map(|(w, (x, v))| w * (x - center) * v)
        .sum::<f64>()
        / sxx;
    let chi2: f64 = weights
        .iter()
        .zip(tau.iter().zip(y))
        .map(|(w, (x, v))| w * (v - intercept - slope * (x - center)).powi(2))
        .sum();
    let dof = (n - 2) as f64;
    let (intercept_variance, slope_variance) = match sigma {
        Some(_) => (1.0 / sw, 1.0 / sxx),
        None => {
            let s2 = chi2 / dof;
            (s2 / sw, s2 / sxx)
        }
    };
    Some(LineFit {
        center,
        intercept,
        slope,
        intercept_variance,
        slope_variance,
        rms: (chi2 / dof).sqrt(),
        points: n,
        tau_start: tau[0].min(tau[n - 1]),
        tau_end: tau[0].max(tau[n - 1]),
    })
}

/// Grows windows outward from the crossing over `candidates` (nearest first)
/// and keeps the one with the smallest rms; ties go to the larger window.
fn best_window(series_tau: &[f64], y: &[f64], sigma: Option<&[f64]>, candidates: &[usize]) -> Result<LineFit> {
    if candidates.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            what: "fit window",
            needed: MIN_FIT_POINTS,
            found: candidates.len(),
        });
    }
    let mut best: Option<LineFit> = None;
    for len in MIN_FIT_POINTS..=candidates.len() {
        let mut idx: Vec<usize> = candidates[..len].to_vec();
        idx.sort_unstable();
        let t: Vec<f64> = idx.iter().map(|&k| series_tau[k]).collect();
        let v: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
        let s: Option<Vec<f64>> = sigma.map(|s| idx.iter().map(|&k| s[k]).collect());
        if let Some(fit) = fit_line(&t, &v, s.as_deref()) {
            if best.as_ref().is_none_or(|b| fit.rms <= b.rms) {
                best = Some(fit);
            }
        }
    }
    best.ok_or(Error::DegenerateIntersection)
}

/// Critical time from the intersection of straight-line fits to `log P_⇒`
/// (before the first crossing) and `log P_⇐` (after it).
pub fn fit_critical_time(series: &LogProbabilitySeries) -> Result<CriticalTimeEstimate> {
    let len = series.tau.len();
    for v in [&series.log_right, &series.log_left] {
        if v.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: v.len(),
            });
        }
    }
    let both: Vec<usize> = (0..len)
        .filter(|&k| !series.excluded_right[k] && !series.excluded_left[k])
        .collect();
    let diff: Vec<f64> = both.iter().map(|&k| series.log_right[k] - series.log_left[k]).collect();
    let taus: Vec<f64> = both.iter().map(|&k| series.tau[k]).collect();
    let changes = sign_changes(&taus, &diff);
    let &(a, b, _) = changes.first().ok_or(Error::NoCrossing)?;
    let (before, after) = (both[a], both[b]);
    let previous = changes.iter().rev().find(|c| c.1 <= a).map(|c| both[c.1]);
    let next = changes.get(1).map(|c| both[c.0]);

    let right_candidates: Vec<usize> = (previous.unwrap_or(0)..=before)
        .rev()
        .filter(|&k| !series.excluded_right[k])
        .collect();
    let left_candidates: Vec<usize> = (after..=next.unwrap_or(len - 1))
        .filter(|&k| !series.excluded_left[k])
        .collect();

    let right = best_window(
        &series.tau,
        &series.log_right,
        series.sigma_right.as_deref(),
        &right_candidates,
    )?;
    let left = best_window(
        &series.tau,
        &series.log_left,
        series.sigma_left.as_deref(),
        &left_candidates,
    )?;

    let denom = right.slope - left.slope;
    if denom.abs() <= 1e-12 * (right.slope.abs() + left.slope.abs()) || denom == 0.0 {
        return Err(Error::DegenerateIntersection);
    }
    let numer = left.intercept - right.intercept - left.slope * left.center + right.slope * right.center;
    let tau_crit = numer / denom;
    // ∂τ/∂(a_r, b_r, a_l, b_l) for independent line fits
    let grad = [
        -1.0 / denom,
        (right.center - tau_crit) / denom,
        1.0 / denom,
        (tau_crit - left.center) / denom,
    ];
    let variance = grad[0].powi(2) * right.intercept_variance
        + grad[1].powi(2) * right.slope_variance
        + grad[2].powi(2) * left.intercept_variance
        + grad[3].powi(2) * left.slope_variance;
    // Without measurement errors the residuals are pure model error, so the
    // curvature left out of each line is added as an extrapolation bias.
    let mut bias = 0.0;
    if series.sigma_right.is_none() && series.sigma_left.is_none() {
        let offset = |y: &[f64], fit: &LineFit, candidates: &[usize]| {
            curvature_offset(&series.tau, y, fit, &candidates[..fit.points], tau_crit)
        };
        let dr = offset(&series.log_right, &right, &right_candidates);
        let dl = offset(&series.log_left, &left, &left_candidates);
        bias = (dl - dr) / denom;
    }
    let sigma = (variance + bias * bias).sqrt();
    Ok(CriticalTimeEstimate {
        tau_crit,
        ci_low: tau_crit - sigma,
        ci_high: tau_crit + sigma,
        method: EstimateMethod::LinearFit,
        diagnostics: Some(FitDiagnostics { right, left }),
    })
}

/// Difference between a quadratic and the straight line fitted to the same
/// window, evaluated at `at`.
fn curvature_offset(tau: &[f64], y: &[f64], fit: &LineFit, window: &[usize], at: f64) -> f64 {
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for &k in window {
        let x = tau[k] - fit.center;
        let row = Vector3::new(1.0, x, x * x);
        normal += row * row.transpose();
        rhs += y[k] * row;
    }
    let Some(q) = normal.try_inverse().map(|inv| inv * rhs) else {
        return 0.0;
    };
    let x = at - fit.center;
    q[0] + q[1] * x + q[2] * x * x - (fit.intercept + fit.slope * x)
}

/// Least-squares slope `D` of `τ_crit - π/4` against `(J/B)²` through the origin.
pub fn quadratic_coefficient(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            what: "quadratic coefficient",
            needed: 3,
            found: points.len(),
        });
    }
    if let Some((jb, _)) = points.iter().find(|(jb, _)| !(*jb >= 0.0 && *jb <= 0.4)) {
        return Err(invalid(
            "j_over_b",
            format!("{jb} is outside the weak-coupling range [0, 0.4]"),
        ));
    }
    let sxx: f64 = points.iter().map(|(jb, _)| jb.powi(4)).sum();
    if sxx == 0.0 {
        return Err(invalid("j_over_b", "all couplings are zero"));
    }
    let sxy: f64 = points.iter().map(|(jb, t)| jb * jb * (t - FRAC_PI_4)).sum();
    Ok(sxy / sxx)
}

/// Modulus rate `-N⁻¹ log|G(τ)|`.
pub fn loschmidt_rate(amplitudes: &[Complex64], n_spins: usize) -> Vec<f64> {
    let floor = PROBABILITY_FLOOR.sqrt();
    amplitudes
        .iter()
        .map(|g| -g.norm().max(floor).ln() / n_spins as f64)
        .collect()
}

/// Largest `|d(P_⇒/P)/dτ|` over the monotone stretch of `P_⇒/P` that contains
/// the crossing.
pub fn dominance_slope(trace: &RateTrace, crossing: &CriticalTimeEstimate) -> f64 {
    let fraction = trace.right_fraction();
    let len = fraction.len();
    if len < 2 {
        return 0.0;
    }
    let k = trace
        .tau
        .windows(2)
        .position(|w| w[0] <= crossing.tau_crit && crossing.tau_crit <= w[1])
        .unwrap_or(0);
    let step = |i: usize| (fraction[i + 1] - fraction[i]) / (trace.tau[i + 1] - trace.tau[i]);
    let direction = step(k).signum();
    let mut lo = k;
    while lo > 0 && step(lo - 1).signum() == direction {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 2 < len && step(hi + 1).signum() == direction {
        hi += 1;
    }
    (lo..=hi).map(|i| step(i).abs()).fold(0.0, f64::max)
}

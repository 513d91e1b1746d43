//! One simulation: evolve, collect per-time observables, analyse, emit.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{Output, RunConfig};
use super::output::{metadata_json, pretty, write_file, write_table, Cell, Format, Table};
use super::CliError;
use crate::dqpt::{
    all_crossings, dominance_slope, first_sign_change, fit_critical_time, rate_functions, LogProbabilitySeries,
};
use crate::engine::{evolve_trace_with, initial_state, uniform_grid, Direction, PropagationPlan};
use crate::entanglement::half_chain_entropy;
use crate::entanglement::squeezing_exact;
use crate::model::{classical_x_spectrum, CouplingMatrix, XSpectrum, DEFAULT_SPECTRUM_CAP};
use crate::observables::{magnetization_from_x_weights, x_weights, ReturnProbabilities};
use crate::perturbation::{perturbative_magnetization, predicted_coefficient, predicted_tau_x};
use crate::sampler::{derive_seeds, estimate_magnetization, estimate_return_probabilities, parse_basis, sample_basis};
use crate::spectral::{default_epsilon_grid, default_mu, SpectralAccumulator};
use crate::Error;

/// Tables and summary of a finished run, not yet written anywhere.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: RunConfig,
    pub tables: Vec<(&'static str, Table)>,
    pub summary: Value,
}

fn stage<T>(name: &'static str, r: Result<T, Error>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Numerical { stage: name, source })
}

fn estimate_json<T: serde::Serialize>(r: Result<T, Error>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("plain data serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Critical-time analysis of a return-probability trace. Re-running it on the
/// columns of an emitted trace reproduces the run summary exactly.
pub fn analyze_trace(
    n_spins: usize,
    tau: &[f64],
    p_right: &[f64],
    p_left: &[f64],
    m_x: Option<&[f64]>,
    every_crossing: bool,
) -> Result<Value, CliError> {
    let rates = stage("rate", rate_functions(tau, p_right, p_left, n_spins))?;
    let crossings = all_crossings(&rates);
    let first = crossings.first().copied();
    let fit = fit_critical_time(&LogProbabilitySeries::from_rate_trace(&rates));
    let mut out = json!({
        "tau_crit": {
            "crossing": estimate_json(first.ok_or(Error::NoCrossing)),
            "linear_fit": estimate_json(fit),
        },
        "crossing_slope": first.map(|c| dominance_slope(&rates, &c)),
    });
    if every_crossing {
        out["crossings"] = serde_json::to_value(&crossings).expect("plain data serializes");
    }
    if let Some(m) = m_x {
        out["magnetization_zero"] = first_sign_change(tau, m).ok().into();
    }
    Ok(out)
}

fn spectrum_for(config: &RunConfig, couplings: &CouplingMatrix) -> Result<Option<XSpectrum>, CliError> {
    if config.n_spins > DEFAULT_SPECTRUM_CAP {
        return Ok(None);
    }
    stage("spectrum", classical_x_spectrum(couplings)).map(Some)
}

pub fn simulate(config: &RunConfig, every_crossing: bool) -> Result<Simulation, CliError> {
    let wants = |o| config.outputs.contains(&o);
    let n = config.n_spins;
    let couplings = stage(
        "model",
        CouplingMatrix::power_law(n, config.alpha, config.j_over_b, 1.0),
    )?;
    let spectrum = spectrum_for(config, &couplings)?;
    let grid = uniform_grid(config.time_max, config.n_steps);
    let plan = PropagationPlan {
        method: config.method,
        krylov_dim: config.krylov_dim,
        step_tolerance: config.tolerance,
        time_grid: grid.clone(),
    };
    let accumulator = match (&spectrum, wants(Output::Spectral)) {
        (Some(spec), true) => {
            let mu = stage("spectral", default_mu(spec))?;
            Some(stage(
                "spectral",
                SpectralAccumulator::new(spec, default_epsilon_grid(spec, config.epsilon_bins), mu),
            )?)
        }
        _ => None,
    };
    let seeds = derive_seeds(config.seed, grid.len());
    let basis = stage("sampling", parse_basis("x", n))?;

    let (mut p_right, mut p_left, mut m_x, mut eps_bar) = (vec![], vec![], vec![], vec![]);
    let (mut entropy, mut xi_squared) = (vec![], vec![]);
    let mut spectral = Table::new(&["tau", "epsilon", "weight", "magnetization"]);
    let mut samples = Table::new(&[
        "tau",
        "p_right",
        "p_right_sigma",
        "p_left",
        "p_left_sigma",
        "m_x",
        "m_x_sigma",
    ]);
    let (mut sampled_right, mut sampled_left) = (vec![], vec![]);
    let mut failure: Option<CliError> = None;
    let mut step = 0usize;

    let psi0 = stage("evolution", initial_state(n, Direction::Right))?;
    let evolution = evolve_trace_with(&psi0, &couplings, &plan, |tau, state| {
        let w = x_weights(state);
        let p = ReturnProbabilities::from_x_weights(&w);
        p_right.push(p.right);
        p_left.push(p.left);
        m_x.push(magnetization_from_x_weights(&w, n));
        eps_bar.push(
            spectrum
                .as_ref()
                .map(|s| w.iter().zip(&s.energies).map(|(a, e)| a * e).sum::<f64>() / n as f64),
        );
        if let Some(acc) = &accumulator {
            let spec = spectrum.as_ref().expect("accumulator implies spectrum");
            let (weight, magnet, _) = acc.column(&w, &spec.magnetizations);
            for ((eps, pw), m) in acc.epsilon().iter().zip(weight).zip(magnet) {
                spectral.push(vec![tau.into(), (*eps).into(), pw.into(), m.into()]);
            }
        }
        let mut record = |r: Result<(), CliError>| {
            if let Err(e) = r {
                failure.get_or_insert(e);
            }
        };
        if wants(Output::Entanglement) {
            record(stage("entanglement", half_chain_entropy(state)).map(|s| entropy.push(s)));
        }
        if wants(Output::Squeezing) {
            let xi = match squeezing_exact(state) {
                Ok(r) => Ok(Some(r.xi_squared)),
                Err(Error::UndefinedDirection { .. }) => Ok(None),
                Err(e) => Err(e),
            };
            record(stage("squeezing", xi).map(|x| xi_squared.push(x)));
        }
        if config.shots > 0 {
            let sampled = stage("sampling", sample_basis(state, &basis, config.shots, seeds[step])).and_then(|rec| {
                let (r, l) = stage("sampling", estimate_return_probabilities(&rec))?;
                let m = stage("sampling", estimate_magnetization(&rec))?;
                Ok((r, l, m))
            });
            record(sampled.map(|(r, l, m)| {
                samples.push(vec![
                    tau.into(),
                    r.value.into(),
                    r.sigma.into(),
                    l.value.into(),
                    l.sigma.into(),
                    m.value.into(),
                    m.sigma.into(),
                ]);
                sampled_right.push((r.value, r.sigma));
                sampled_left.push((l.value, l.sigma));
            }));
        }
        step += 1;
        Ok(())
    });
    stage("evolution", evolution)?;
    if let Some(e) = failure {
        return Err(e);
    }

    let rates = stage("rate", rate_functions(&grid, &p_right, &p_left, n))?;
    let mut results = analyze_trace(n, &grid, &p_right, &p_left, Some(&m_x), every_crossing)?;

    let mut trace = Table::new(&["tau", "p_right", "p_left", "lambda", "lambda_min", "m_x", "epsilon_bar"]);
    let mut extra = Vec::new();
    if wants(Output::Entanglement) {
        extra.push("entropy");
    }
    if wants(Output::Squeezing) {
        extra.push("xi_squared");
    }
    if wants(Output::Perturbation) {
        extra.push("m_x_perturbative");
    }
    trace.columns.extend(extra.iter().map(|s| s.to_string()));
    for k in 0..grid.len() {
        let mut row: Vec<Cell> = vec![
            grid[k].into(),
            p_right[k].into(),
            p_left[k].into(),
            rates.lambda_total[k].into(),
            rates.lambda_min[k].into(),
            m_x[k].into(),
            eps_bar[k].into(),
        ];
        if wants(Output::Entanglement) {
            row.push(entropy[k].into());
        }
        if wants(Output::Squeezing) {
            row.push(xi_squared[k].into());
        }
        if wants(Output::Perturbation) {
            row.push(perturbative_magnetization(&couplings, grid[k]).into());
        }
        trace.push(row);
    }

    let mut rate = Table::new(&[
        "tau",
        "lambda_right",
        "lambda_left",
        "lambda_total",
        "lambda_min",
        "right_fraction",
        "floored_right",
        "floored_left",
    ]);
    let fraction = rates.right_fraction();
    for k in 0..grid.len() {
        rate.push(vec![
            grid[k].into(),
            rates.lambda_right[k].into(),
            rates.lambda_left[k].into(),
            rates.lambda_total[k].into(),
            rates.lambda_min[k].into(),
            fraction[k].into(),
            f64::from(u8::from(rates.floored_right[k])).into(),
            f64::from(u8::from(rates.floored_left[k])).into(),
        ]);
    }

    if wants(Output::Entanglement) {
        let (k, s) = entropy
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (k, &s)| if s > best.1 { (k, s) } else { best });
        let growth = (0..grid.len() - 1)
            .map(|k| {
                (
                    (grid[k] + grid[k + 1]) / 2.0,
                    (entropy[k + 1] - entropy[k]) / (grid[k + 1] - grid[k]),
                )
            })
            .fold((f64::NAN, f64::MIN), |best, x| if x.1 > best.1 { x } else { best });
        results["entanglement"] = json!({
            "entropy_max": s,
            "entropy_max_tau": grid[k],
            "steepest_growth_tau": growth.0,
            "steepest_growth_rate": growth.1,
        });
    }
    if wants(Output::Squeezing) {
        let best = xi_squared
            .iter()
            .enumerate()
            .filter_map(|(k, x)| x.map(|x| (k, x)))
            .fold(None, |best: Option<(usize, f64)>, (k, x)| match best {
                Some((_, b)) if b <= x => best,
                _ => Some((k, x)),
            });
        results["squeezing"] = json!({
            "xi_squared_min": best.map(|b| b.1),
            "xi_squared_min_tau": best.map(|b| grid[b.0]),
        });
    }
    if wants(Output::Perturbation) {
        results["perturbation"] = json!({
            "tau_x_predicted": predicted_tau_x(&couplings),
            "coefficient_predicted": predicted_coefficient(&couplings),
        });
    }
    if let Some(spec) = &spectrum {
        results["bandwidth"] = spec.bandwidth.into();
        if let Some(acc) = &accumulator {
            let mu = default_mu(spec).ok();
            results["spectral"] = json!({ "mu": mu, "epsilon_bins": acc.epsilon().len() });
        }
    }
    if config.shots > 0 {
        let fit = LogProbabilitySeries::from_sampled(&grid, &sampled_right, &sampled_left)
            .and_then(|s| fit_critical_time(&s));
        results["sampled"] = json!({ "shots": config.shots, "tau_crit_fit": estimate_json(fit) });
    }

    let mut tables = Vec::new();
    if wants(Output::Trace) {
        tables.push(("trace", trace));
    }
    if wants(Output::Rate) {
        tables.push(("rate", rate));
    }
    if accumulator.is_some() {
        tables.push(("spectral", spectral));
    }
    if config.shots > 0 {
        tables.push(("samples", samples));
    }
    let mut summary = metadata_json(config);
    summary["results"] = results;
    Ok(Simulation {
        config: config.clone(),
        tables,
        summary,
    })
}

impl Simulation {
    /// Writes every table and `summary.json` under `dir`.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let mut files = Vec::new();
        for (name, table) in &self.tables {
            files.push(write_table(dir, name, table, &self.config, format)?);
        }
        let path = dir.join("summary.json");
        write_file(&path, &pretty(&self.summary))?;
        files.push(path);
        Ok(files)
    }
}

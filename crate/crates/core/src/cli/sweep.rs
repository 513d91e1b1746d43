//! Parameter sweeps: one run per axis value on a worker pool.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::output::{metadata_json, pretty, write_file, Format};
use super::run::simulate;
use super::CliError;
use crate::dqpt::quadratic_coefficient;
use crate::sampler::derive_seeds;

pub const AXES: [&str; 3] = ["j_over_b", "alpha", "n_spins"];
/// Largest `J/B` admitted to the weak-coupling quadratic fit.
pub const WEAK_COUPLING_MAX: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<String>,
}

/// Parses `name=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<Axis, CliError> {
    let (name, list) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("axis `{spec}` must look like name=v1,v2")))?;
    let name = name.trim();
    if !AXES.contains(&name) {
        return Err(CliError::Usage(format!(
            "cannot sweep `{name}`; choose one of {}",
            AXES.join(", ")
        )));
    }
    let values: Vec<String> = list
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect();
    if values.is_empty() {
        return Err(CliError::Usage(format!("axis `{name}` has no values")));
    }
    Ok(Axis {
        name: name.to_string(),
        values,
    })
}

pub struct SweepOutcome {
    pub summary: Value,
    pub failed: usize,
}

fn point_config(template: &RunConfig, axis: &Axis, k: usize, seed: u64, dir: &Path) -> Result<RunConfig, CliError> {
    let mut config = template.clone();
    config
        .set(&axis.name, &axis.values[k])
        .map_err(|m| CliError::Input(format!("{}: {m}", axis.name)))?;
    config.seed = seed;
    config.output_dir = dir.to_path_buf();
    config.validate().map_err(CliError::Config)?;
    Ok(config)
}

fn fit_json(points: &[(f64, f64)]) -> Value {
    match quadratic_coefficient(points) {
        Ok(d) => json!({ "coefficient": d, "points": points.len() }),
        Err(e) => json!({ "error": e.to_string(), "points": points.len() }),
    }
}

/// Runs every point, writes per-point outputs under `out/<axis>_<k>/` and an
/// aggregated `sweep.json`. Failed points are recorded and do not stop the sweep.
pub fn sweep(template: &RunConfig, axis: &Axis, out: &Path, format: Format) -> Result<SweepOutcome, CliError> {
    let seeds = derive_seeds(template.seed, axis.values.len());
    let results: Vec<Result<(RunConfig, Value), CliError>> = (0..axis.values.len())
        .into_par_iter()
        .map(|k| {
            let dir = out.join(format!("{}_{k:03}", axis.name));
            let config = point_config(template, axis, k, seeds[k], &dir)?;
            let sim = simulate(&config, false)?;
            sim.emit(&dir, format)?;
            Ok((config, sim.summary["results"].clone()))
        })
        .collect();

    let mut points = Vec::new();
    let mut failed = 0;
    let (mut zeros, mut crossings) = (Vec::new(), Vec::new());
    for (k, r) in results.into_iter().enumerate() {
        let value = &axis.values[k];
        match r {
            Ok((config, res)) => {
                if axis.name == "j_over_b" && config.j_over_b <= WEAK_COUPLING_MAX {
                    if let Some(t) = res["magnetization_zero"].as_f64() {
                        zeros.push((config.j_over_b, t));
                    }
                    if let Some(t) = res["tau_crit"]["crossing"]["tau_crit"].as_f64() {
                        crossings.push((config.j_over_b, t));
                    }
                }
                points.push(json!({
                    "value": value,
                    "status": "ok",
                    "seed": config.seed,
                    "output_dir": config.output_dir.display().to_string(),
                    "results": res,
                }));
            }
            Err(e) => {
                failed += 1;
                points.push(json!({
                    "value": value,
                    "status": "error",
                    "error": e.to_string(),
                    "exit_code": e.exit_code(),
                }));
            }
        }
    }
    let mut summary = metadata_json(template);
    summary["axis"] = json!({ "name": axis.name, "values": axis.values });
    summary["points"] = points.into();
    summary["failed"] = failed.into();
    summary["quadratic_fit"] = if axis.name == "j_over_b" {
        json!({
            "max_j_over_b": WEAK_COUPLING_MAX,
            "magnetization_zero": fit_json(&zeros),
            "crossing": fit_json(&crossings),
        })
    } else {
        Value::Null
    };
    write_file(&out.join("sweep.json"), &pretty(&summary))?;
    Ok(SweepOutcome { summary, failed })
}

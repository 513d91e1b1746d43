//! Run configuration: `key = value` lines or one JSON object.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{Method, DENSE_MAX_SPINS};
use crate::entanglement::MAX_SUBSET;
use crate::model::DEFAULT_SPECTRUM_CAP;

/// Largest chain the CLI will simulate.
pub const MAX_SPINS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Trace,
    Rate,
    Spectral,
    Entanglement,
    Squeezing,
    Perturbation,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Trace,
        Output::Rate,
        Output::Spectral,
        Output::Entanglement,
        Output::Squeezing,
        Output::Perturbation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Trace => "trace",
            Output::Rate => "rate",
            Output::Spectral => "spectral",
            Output::Entanglement => "entanglement",
            Output::Squeezing => "squeezing",
            Output::Perturbation => "perturbation",
        }
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown output `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_spins: usize,
    pub alpha: f64,
    pub j_over_b: f64,
    /// Final time in units of `1/|B|`.
    pub time_max: f64,
    /// Number of grid points, `τ = 0` included.
    pub n_steps: usize,
    pub method: Method,
    pub krylov_dim: usize,
    pub tolerance: f64,
    /// Measurement shots per time point; 0 keeps the exact probabilities only.
    pub shots: u64,
    pub seed: u64,
    pub epsilon_bins: usize,
    pub outputs: BTreeSet<Output>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_spins: 8,
            alpha: 0.0,
            j_over_b: 0.0,
            time_max: 3.0,
            n_steps: 200,
            method: Method::Krylov,
            krylov_dim: 30,
            tolerance: 1e-10,
            shots: 0,
            seed: 0,
            epsilon_bins: 200,
            outputs: [Output::Trace, Output::Rate].into(),
            output_dir: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 13] = [
    "n_spins",
    "alpha",
    "j_over_b",
    "time_max",
    "n_steps",
    "method",
    "krylov_dim",
    "tolerance",
    "shots",
    "seed",
    "epsilon_bins",
    "outputs",
    "output_dir",
];

/// Where in the input a problem was found.
#[derive(Debug, Clone, PartialEq)]
pub enum Location {
    Line(usize),
    Field(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub location: Location,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Location::Line(n) => write!(f, "line {n}: {}", self.message),
            Location::Field(name) => write!(f, "field `{name}`: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn field_error(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        location: Location::Field(name.to_string()),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, kind: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("expected {kind} for `{key}`, found `{value}`"))
}

impl RunConfig {
    /// Sets one field from its textual value; type errors only, ranges are
    /// checked by [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "n_spins" => self.n_spins = parse_num(key, value, "an integer")?,
            "alpha" => self.alpha = parse_num(key, value, "a number")?,
            "j_over_b" => self.j_over_b = parse_num(key, value, "a number")?,
            "time_max" => self.time_max = parse_num(key, value, "a number")?,
            "n_steps" => self.n_steps = parse_num(key, value, "an integer")?,
            "method" => self.method = value.parse().map_err(|e: crate::Error| e.to_string())?,
            "krylov_dim" => self.krylov_dim = parse_num(key, value, "an integer")?,
            "tolerance" => self.tolerance = parse_num(key, value, "a number")?,
            "shots" => self.shots = parse_num(key, value, "an integer")?,
            "seed" => self.seed = parse_num(key, value, "an integer")?,
            "epsilon_bins" => self.epsilon_bins = parse_num(key, value, "an integer")?,
            "outputs" => {
                self.outputs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Output::from_str)
                    .collect::<Result<_, _>>()?
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Textual value of a field, in the form [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "n_spins" => self.n_spins.to_string(),
            "alpha" => format!("{:?}", self.alpha),
            "j_over_b" => format!("{:?}", self.j_over_b),
            "time_max" => format!("{:?}", self.time_max),
            "n_steps" => self.n_steps.to_string(),
            "method" => self.method.to_string(),
            "krylov_dim" => self.krylov_dim.to_string(),
            "tolerance" => format!("{:?}", self.tolerance),
            "shots" => self.shots.to_string(),
            "seed" => self.seed.to_string(),
            "epsilon_bins" => self.epsilon_bins.to_string(),
            "outputs" => self.outputs.iter().map(|o| o.name()).collect::<Vec<_>>().join(","),
            "output_dir" => self.output_dir.display().to_string(),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.n_spins;
        if !(1..=MAX_SPINS).contains(&n) {
            return Err(field_error("n_spins", format!("{n} is outside [1, {MAX_SPINS}]")));
        }
        if !(0.0..3.0).contains(&self.alpha) {
            return Err(field_error("alpha", format!("{} is outside [0, 3)", self.alpha)));
        }
        if !(self.j_over_b >= 0.0 && self.j_over_b.is_finite()) {
            return Err(field_error("j_over_b", "must be finite and >= 0"));
        }
        if !(self.time_max > 0.0 && self.time_max.is_finite()) {
            return Err(field_error("time_max", "must be finite and > 0"));
        }
        if self.n_steps < 2 {
            return Err(field_error("n_steps", "need at least 2 grid points"));
        }
        if self.method == Method::DenseEigen && n > DENSE_MAX_SPINS {
            return Err(field_error(
                "method",
                format!("dense-eigen supports at most {DENSE_MAX_SPINS} spins"),
            ));
        }
        if self.krylov_dim < 2 {
            return Err(field_error("krylov_dim", "must be at least 2"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(field_error("tolerance", "must lie in (0, 1)"));
        }
        if self.epsilon_bins < 2 {
            return Err(field_error("epsilon_bins", "must be at least 2"));
        }
        if self.outputs.is_empty() {
            return Err(field_error("outputs", "select at least one output"));
        }
        if self.outputs.contains(&Output::Spectral) && n > DEFAULT_SPECTRUM_CAP {
            return Err(field_error(
                "outputs",
                format!("spectral output supports at most {DEFAULT_SPECTRUM_CAP} spins"),
            ));
        }
        if self.outputs.contains(&Output::Spectral) && self.j_over_b == 0.0 {
            return Err(field_error(
                "outputs",
                "spectral output needs j_over_b > 0 (zero bandwidth)",
            ));
        }
        if self.outputs.contains(&Output::Entanglement) && (!n.is_multiple_of(2) || n / 2 > MAX_SUBSET) {
            return Err(field_error(
                "outputs",
                format!(
                    "entanglement output needs an even n_spins of at most {}",
                    2 * MAX_SUBSET
                ),
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(field_error("output_dir", "must not be empty"));
        }
        Ok(())
    }

    /// `key=value` lines that [`parse_config`] reads back to an equal config.
    pub fn to_kv(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("n_spins".into(), self.n_spins.into());
        map.insert("alpha".into(), self.alpha.into());
        map.insert("j_over_b".into(), self.j_over_b.into());
        map.insert("time_max".into(), self.time_max.into());
        map.insert("n_steps".into(), self.n_steps.into());
        map.insert("method".into(), self.method.to_string().into());
        map.insert("krylov_dim".into(), self.krylov_dim.into());
        map.insert("tolerance".into(), self.tolerance.into());
        map.insert("shots".into(), self.shots.into());
        map.insert("seed".into(), self.seed.into());
        map.insert("epsilon_bins".into(), self.epsilon_bins.into());
        map.insert(
            "outputs".into(),
            self.outputs.iter().map(|o| o.name()).collect::<Vec<_>>().into(),
        );
        map.insert("output_dir".into(), self.output_dir.display().to_string().into());
        serde_json::Value::Object(map)
    }
}

fn json_scalar(key: &str, value: &serde_json::Value) -> Result<String, ConfigError> {
    use serde_json::Value;
    match value {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Array(items) if key == "outputs" => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| field_error(key, "expected a list of strings"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.join(",")),
        other => Err(field_error(key, format!("unexpected value {other}"))),
    }
}

/// Parses `key = value` lines (`#` starts a comment) or a JSON object; missing
/// keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError {
            location: Location::Line(e.line()),
            message: format!("invalid JSON: {e}"),
        })?;
        let object = value
            .as_object()
            .ok_or_else(|| field_error("<root>", "expected a JSON object"))?;
        for (key, v) in object {
            let text = json_scalar(key, v)?;
            config.set(key, &text).map_err(|m| field_error(key, m))?;
        }
    } else {
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError {
                location: Location::Line(idx + 1),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            config.set(key, value).map_err(err)?;
        }
    }
    config.validate()?;
    Ok(config)
}

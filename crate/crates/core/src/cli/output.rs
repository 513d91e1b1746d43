//! Self-describing CSV/JSON emission and reading traces back.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{parse_config, RunConfig};
use super::CliError;
use crate::sampler::RNG_NAME;

pub const SCHEMA_VERSION: u32 = 1;
pub const GENERATOR: &str = concat!("dqpt ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn conventions() -> Vec<(&'static str, &'static str)> {
    vec![
        ("log_base", "natural logarithm"),
        ("time_unit", "tau = |B| t"),
        (
            "rate",
            "lambda = -log(P_right + P_left)/N, lambda_min = min of the branch rates",
        ),
        (
            "bit_order",
            "bit i of a basis index is site i; outcome strings list site 0 first; 0 means +1",
        ),
        (
            "mu",
            "Lorentzian half-width mu = W/(50 N), W the many-body bandwidth of the interaction term",
        ),
        (
            "epsilon",
            "energy density above the classical ground state, in units of |B|",
        ),
        (
            "squeezing",
            "xi^2 = 4 min Var(n_perp . S)/N with spin-1/2 collective operators",
        ),
        ("rng", RNG_NAME),
    ]
}

pub fn metadata_json(config: &RunConfig) -> Value {
    let conv: serde_json::Map<String, Value> = conventions()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::from(v)))
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "generator": GENERATOR,
        "config": config.to_json(),
        "conventions": conv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Missing
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::from)
    }
}

/// Column-named numeric table; missing cells are empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[idx] {
                    Cell::Num(v) => Some(v),
                    Cell::Missing => None,
                })
                .collect(),
        )
    }

    pub fn to_csv(&self, config: &RunConfig, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {title}");
        let _ = writeln!(out, "# generator: {GENERATOR}");
        let _ = writeln!(out, "# schema_version: {SCHEMA_VERSION}");
        for line in config.to_kv().lines() {
            let _ = writeln!(out, "# config: {line}");
        }
        for (k, v) in conventions() {
            let _ = writeln!(out, "# convention: {k}: {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format!("{v:?}"),
                    Cell::Missing => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &RunConfig, title: &str) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::Num(v) => Value::from(*v),
                        Cell::Missing => Value::Null,
                    })
                    .collect()
            })
            .collect();
        json!({
            "title": title,
            "metadata": metadata_json(config),
            "columns": self.columns,
            "rows": rows,
        })
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_table(
    dir: &Path,
    name: &str,
    table: &Table,
    config: &RunConfig,
    format: Format,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.{}", format.extension()));
    let body = match format {
        Format::Csv => table.to_csv(config, name),
        Format::Json => pretty(&table.to_json(config, name)),
    };
    write_file(&path, &body)?;
    Ok(path)
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Reads a table written by [`write_table`] in either format, with the
/// configuration it was produced from.
pub fn read_table(path: &Path) -> Result<(RunConfig, Table), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let config_text = v["metadata"]["config"].to_string();
        let config = parse_config(&config_text).map_err(|e| bad(e.to_string()))?;
        let columns: Vec<String> = serde_json::from_value(v["columns"].clone()).map_err(|e| bad(e.to_string()))?;
        let rows = v["rows"]
            .as_array()
            .ok_or_else(|| bad("missing rows".into()))?
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| bad("row is not an array".into()))
                    .map(|cells| {
                        cells
                            .iter()
                            .map(|c| c.as_f64().map_or(Cell::Missing, Cell::Num))
                            .collect()
                    })
            })
            .collect::<Result<Vec<Vec<Cell>>, _>>()?;
        return Ok((config, Table { columns, rows }));
    }

    let mut config_text = String::new();
    let mut lines = text.lines();
    let header = loop {
        match lines.next() {
            Some(l) if l.starts_with('#') => {
                if let Some(kv) = l.strip_prefix("# config: ") {
                    config_text.push_str(kv);
                    config_text.push('\n');
                }
            }
            Some(l) => break l,
            None => return Err(bad("no column header".into())),
        }
    };
    let config = parse_config(&config_text).map_err(|e| bad(e.to_string()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| {
                if c.is_empty() {
                    Ok(Cell::Missing)
                } else {
                    c.parse()
                        .map(Cell::Num)
                        .map_err(|_| bad(format!("row {}: bad number `{c}`", k + 1)))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != table.columns.len() {
            return Err(bad(format!("row {} has {} cells", k + 1, row.len())));
        }
        table.rows.push(row);
    }
    Ok((config, table))
}

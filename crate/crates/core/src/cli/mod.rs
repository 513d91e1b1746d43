//! Command-line front end.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::{parse_config, ConfigError, Output, RunConfig};
use output::{metadata_json, pretty, read_table, Format};
use run::{analyze_trace, simulate};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{stage} failed: {source}")]
    Numerical { stage: &'static str, source: crate::Error },
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{failed} of {total} sweep points failed")]
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Numerical { .. } | CliError::Io { .. } => 3,
            CliError::PartialSweep { .. } => 4,
        }
    }
}

const AFTER_HELP: &str = "\
Configuration keys (key = value lines or one JSON object) and defaults:
  n_spins=8  alpha=0  j_over_b=0  time_max=3  n_steps=200  method=krylov
  krylov_dim=30  tolerance=1e-10  shots=0  seed=0  epsilon_bins=200
  outputs=trace,rate  output_dir=out
outputs is any of trace, rate, spectral, entanglement, squeezing, perturbation.
time_max is in units of 1/|B|; n_steps counts grid points including tau = 0.

Exit status: 0 success, 2 configuration or usage error, 3 numerical failure,
4 partial sweep failure.";

#[derive(Debug, Parser)]
#[command(name = "dqpt", version, about = "Quench dynamics and DQPT analysis for long-range Ising chains", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true, value_name = "K")]
    pub workers: Option<usize>,
    /// Random seed, overriding `seed`.
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
    /// Format of tabular outputs; summaries are always JSON.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve and write the configured outputs.
    Evolve,
    /// Rate functions and critical times, from a new run or an emitted trace.
    Dqpt {
        /// Analyse an existing trace file instead of simulating.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Report every crossing, not only the first.
        #[arg(long)]
        all_crossings: bool,
    },
    /// Energy-resolved magnetization map.
    Spectral,
    /// Half-chain entanglement entropy.
    Entanglement,
    /// Spin squeezing parameter.
    Squeeze,
    /// Weak-coupling closed forms next to the exact magnetization.
    Perturb,
    /// Shot-sampled return probabilities and magnetization.
    Sample,
    /// One run per value of a parameter axis.
    Sweep {
        /// Axis as `name=v1,v2,...`; name is j_over_b, alpha or n_spins.
        #[arg(long, value_name = "SPEC")]
        axis: String,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, found `{kv}`")))?;
        config.set(k.trim(), v).map_err(|m| {
            CliError::Config(ConfigError {
                location: config::Location::Field(k.trim().to_string()),
                message: m,
            })
        })?;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn with_output(mut config: RunConfig, output: Output) -> RunConfig {
    config.outputs.insert(output);
    config
}

fn print_summary(summary: &Value) {
    use std::io::Write;
    // a closed pipe downstream is not an error of the run
    let _ = std::io::stdout().lock().write_all(pretty(summary).as_bytes());
}

/// Executes a parsed command line and returns the summary it printed.
pub fn execute(cli: &Cli) -> Result<Value, CliError> {
    let config = load_config(cli)?;
    let config = match &cli.command {
        Command::Evolve | Command::Sweep { .. } => config,
        Command::Dqpt { .. } => with_output(with_output(config, Output::Trace), Output::Rate),
        Command::Spectral => with_output(config, Output::Spectral),
        Command::Entanglement => with_output(config, Output::Entanglement),
        Command::Squeeze => with_output(config, Output::Squeezing),
        Command::Perturb => with_output(config, Output::Perturbation),
        Command::Sample => {
            if config.shots == 0 {
                return Err(CliError::Config(ConfigError {
                    location: config::Location::Field("shots".into()),
                    message: "sample needs shots > 0".into(),
                }));
            }
            config
        }
    };
    config.validate()?;
    let dir = config.output_dir.clone();

    let summary = match &cli.command {
        Command::Dqpt {
            trace: Some(path),
            all_crossings,
        } => {
            let (source, table) = read_table(path)?;
            let column = |name: &str| -> Result<Vec<f64>, CliError> {
                table
                    .column(name)
                    .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", path.display())))?
                    .into_iter()
                    .map(|v| v.ok_or_else(|| CliError::Input(format!("{}: empty `{name}` cell", path.display()))))
                    .collect()
            };
            let m_x = table
                .column("m_x")
                .and_then(|c| c.into_iter().collect::<Option<Vec<f64>>>());
            let mut summary = metadata_json(&source);
            summary["source"] = path.display().to_string().into();
            summary["results"] = analyze_trace(
                source.n_spins,
                &column("tau")?,
                &column("p_right")?,
                &column("p_left")?,
                m_x.as_deref(),
                *all_crossings,
            )?;
            summary
        }
        Command::Sweep { axis } => {
            let axis = sweep::parse_axis(axis)?;
            let outcome = sweep::sweep(&config, &axis, &dir, cli.format)?;
            if outcome.failed > 0 {
                print_summary(&outcome.summary);
                return Err(CliError::PartialSweep {
                    failed: outcome.failed,
                    total: axis.values.len(),
                });
            }
            outcome.summary
        }
        Command::Dqpt { all_crossings, .. } => {
            let sim = simulate(&config, *all_crossings)?;
            sim.emit(&dir, cli.format)?;
            sim.summary
        }
        _ => {
            let sim = simulate(&config, false)?;
            sim.emit(&dir, cli.format)?;
            sim.summary
        }
    };
    print_summary(&summary);
    Ok(summary)
}

/// Parses `args`, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(k) = cli.workers {
        if k == 0 {
            eprintln!("error: usage error: --workers must be at least 1");
            return 2;
        }
        // a second call only fails if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

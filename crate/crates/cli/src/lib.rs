//! Configuration-driven driver for the extended Dicke model library.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::Runner;
pub use config::RunConfig;
pub use error::CliError;
pub use output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CircuitCharge,
    CircuitFlux,
    GroundSweep,
    Spectrum,
    Hp,
    Effective,
    BoPotential,
    Qfunc,
    Disorder,
    TwoMode,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CircuitCharge => "circuit-charge",
            Command::CircuitFlux => "circuit-flux",
            Command::GroundSweep => "ground-sweep",
            Command::Spectrum => "spectrum",
            Command::Hp => "hp",
            Command::Effective => "effective",
            Command::BoPotential => "bo-potential",
            Command::Qfunc => "qfunc",
            Command::Disorder => "disorder",
            Command::TwoMode => "two-mode",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "edm", version, about = "Extended Dicke model sweeps and circuit compilation")]
pub struct Cli {
    pub command: Command,
    /// JSON run configuration.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config field, e.g. `--set sweep.points=11`. Values are parsed as JSON.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
    /// Output file; overrides `output.path`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// `csv` or `json`; overrides `output.format`.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads; overrides `threads`.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Command checked by `validate`.
    #[arg(long, value_enum, default_value = "ground-sweep")]
    pub target: Command,
}

impl Cli {
    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => format!("{{\"version\": {}}}", config::CONFIG_VERSION),
        };
        let mut overrides = self.set.clone();
        if let Some(o) = &self.output {
            overrides.push(format!("output.path={}", serde_json::Value::String(o.display().to_string())));
        }
        if let Some(f) = &self.format {
            overrides.push(format!("output.format={}", serde_json::Value::String(f.clone())));
        }
        if let Some(t) = self.threads {
            overrides.push(format!("threads={t}"));
        }
        RunConfig::load(&text, &overrides)
    }
}

/// Runs the parsed command line and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.load_config()?;
    let runner = Runner::new(&cfg)?;
    let text = if cli.command == Command::Validate {
        serde_json::to_string_pretty(&runner.validate(cli.target)).map_err(|e| CliError::Output(e.to_string()))? + "\n"
    } else {
        runner.run(cli.command)?.render(cli.command.name(), &cfg)?
    };
    match &cfg.output.path {
        Some(p) if cli.command != Command::Validate => std::fs::write(p, text)?,
        _ => print!("{text}"),
    }
    Ok(())
}

//! Command-line front end for `noonsim`.
//!
//! Every subcommand reads a [`RunConfig`]: defaults, then an optional
//! `--config` file, then flags. Exit codes: 0 success, 1 verification or
//! numerical failure, 2 usage or config error, 3 I/O error.
//!
//! `NOONSIM_SEED` is reserved for future stochastic features and is
//! currently ignored.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

use commands::Suite;

#[derive(Debug, Parser)]
#[command(name = "noonsim", version, about = "Three-photon NOON states in coupled waveguides")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// |C_ket|(t) for every ket, by default the three-photon case study
    Coeffs(ConfigArgs),
    /// Complex amplitudes over time, plus collapse data when conditioned
    Evolve(ConfigArgs),
    /// Times at which post-selection yields a NOON state
    Search(ConfigArgs),
    /// NOON search over a list of values of one parameter
    Sweep(ConfigArgs),
    /// Run numerical self-checks; exit 1 on failure
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Line chart of CSV columns against the first column
    Plot {
        input: PathBuf,
        /// Comma-separated column names; all columns when omitted
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the Fock basis in column order
    Basis {
        #[arg(long, default_value_t = 3)]
        modes: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

/// Flags override the config file key of the same name.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Flat key = value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(short = 'n', long)]
    pub total_quanta: Option<String>,
    /// e.g. "102:0.7071067811865476, 120:0.7071067811865476"
    #[arg(long, allow_hyphen_values = true)]
    pub initial_state: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    #[arg(long)]
    pub t_step: Option<String>,
    /// mode:count, or none
    #[arg(long)]
    pub conditioning: Option<String>,
    /// csv, json or svg
    #[arg(long)]
    pub format: Option<String>,
    /// Output file; stdout when omitted or "-"
    #[arg(short, long)]
    pub output: Option<String>,
    /// analytic or oracle
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub grid_step: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    /// omega0, omega, lambda or g
    #[arg(long)]
    pub sweep_param: Option<String>,
    /// Comma-separated values for --sweep-param
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_values: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        let flags = [
            ("omega0", &self.omega0),
            ("omega", &self.omega),
            ("lambda", &self.lambda),
            ("g", &self.g),
            ("total_quanta", &self.total_quanta),
            ("initial_state", &self.initial_state),
            ("t_max", &self.t_max),
            ("t_step", &self.t_step),
            ("conditioning", &self.conditioning),
            ("output_format", &self.format),
            ("output_path", &self.output),
            ("method", &self.method),
            ("search_grid_step", &self.grid_step),
            ("search_tol", &self.tol),
            ("sweep_param", &self.sweep_param),
            ("sweep_values", &self.sweep_values),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|m| CliError::field(key, m))?;
            }
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Coeffs(a) => emit(&a, commands::coeffs),
        Command::Evolve(a) => emit(&a, commands::evolve),
        Command::Search(a) => emit(&a, commands::search),
        Command::Sweep(a) => emit(&a, commands::sweep_cmd),
        Command::Verify { suite, config } => commands::verify(&config.resolve()?, suite),
        Command::Basis { modes, config } => {
            let cfg = config.resolve()?;
            commands::write_output(cfg.output_path.as_deref(), &commands::basis(&cfg, modes)?)
        }
        Command::Plot { input, columns, output } => {
            let svg = commands::plot(&input, &columns)?;
            commands::write_output(output.as_deref(), &svg)
        }
    }
}

fn emit(args: &ConfigArgs, cmd: fn(&RunConfig) -> CliResult<Vec<u8>>) -> CliResult<()> {
    let cfg = args.resolve()?;
    let bytes = cmd(&cfg)?;
    commands::write_output(cfg.output_path.as_deref(), &bytes)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mh154::config::ExperimentConfig;
use mh154::dump::Format;
use mh154::validate::{Suite, DEFAULT_SEED};
use mh154::{cmd_generate, cmd_solve, cmd_validate, CliError, Output, SolveOptions};

/// Analytical model of IEEE 802.15.4 multi-hop networks with unslotted CSMA/CA.
#[derive(Debug, Parser)]
#[command(name = "mh154", version)]
struct Cli {
    /// Print the solver residual after every iteration to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Place the nodes of the config's topology and write them as a node file.
    Generate {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the generator seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the model and write the per-link and per-node results.
    Solve {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout if omitted (JSON only).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Overrides the generator seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the solver tolerance.
        #[arg(long, env = "MH154_TOL")]
        tol: Option<f64>,
        /// Overrides the solver iteration limit.
        #[arg(long, env = "MH154_MAX_ITER")]
        max_iter: Option<usize>,
    },
    /// Cross-check the closed forms against brute-force oracles.
    Validate {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Seed of the randomized suites.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Chain,
    Powerset,
    Retrans,
    All,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            cmd_generate(&cfg, seed, out.as_deref().map_or(Output::Stdout, Output::File))
        }
        Command::Solve { config, out, format, seed, tol, max_iter } => {
            let cfg = ExperimentConfig::load(&config)?;
            let opts = SolveOptions { seed, tol, max_iter, verbose: cli.verbose };
            let format = match format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            };
            let dump = cmd_solve(&cfg, &opts, out.as_deref().map_or(Output::Stdout, Output::File), format)?;
            if cli.verbose {
                let d = &dump.diagnostics;
                eprintln!("converged after {} iterations, residual {:.3e}", d.iterations, d.final_residual);
            }
            Ok(())
        }
        Command::Validate { suite, seed } => {
            let suite = match suite {
                SuiteArg::Chain => Suite::Chain,
                SuiteArg::Powerset => Suite::Powerset,
                SuiteArg::Retrans => Suite::Retrans,
                SuiteArg::All => Suite::All,
            };
            cmd_validate(suite, seed, &mut std::io::stdout()).map(drop)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

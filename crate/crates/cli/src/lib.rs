//! Command-line front end for the `mh154-model` crate: configuration files,
//! topology generation, solution dumps and the oracle validation suites.

pub mod config;
pub mod dump;
pub mod generate;
pub mod validate;

use std::io::Write;
use std::path::Path;

use mh154_model::solver::Model;
use mh154_model::SolverConfig;

use config::ExperimentConfig;
use dump::{Format, SolutionDump};
use validate::{Suite, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] mh154_model::Error),
    #[error("{0}")]
    Io(String),
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Model(_) | CliError::Io(_) => 1,
            CliError::NonConvergence { .. } => 2,
            CliError::OracleMismatch(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Where `generate` and `solve` write their result.
#[derive(Debug, Clone, Copy)]
pub enum Output<'a> {
    Stdout,
    File(&'a Path),
}

/// Writes the node placement of the config's position-based topology.
pub fn cmd_generate(cfg: &ExperimentConfig, seed: Option<u64>, out: Output) -> Result<(), CliError> {
    let file = cfg
        .nodes(seed)?
        .ok_or_else(|| CliError::Input("topology: explicit link lists have no node placement to generate".into()))?;
    let text = serde_json::to_string_pretty(&file).map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Output::Stdout => writeln!(std::io::stdout().lock(), "{text}")?,
        Output::File(p) => std::fs::write(p, text + "\n")
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?,
    }
    Ok(())
}

/// Overrides applied on top of the config's solver section.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Print `(iteration, residual)` to stderr after every pass.
    pub verbose: bool,
}

/// Solves the model and writes the dump. The dump is written even when the
/// solver does not converge; the error is returned afterwards.
pub fn cmd_solve(
    cfg: &ExperimentConfig,
    opts: &SolveOptions,
    out: Output,
    format: Format,
) -> Result<SolutionDump, CliError> {
    let topo = cfg.build_topology(opts.seed)?;
    let mut solver: SolverConfig = cfg.solver();
    solver.tol = opts.tol.unwrap_or(solver.tol);
    solver.max_iter = opts.max_iter.unwrap_or(solver.max_iter);

    let model = Model::new(&topo, &cfg.protocol(), &cfg.traffic())?;
    let sol = model.solve_with_observer(&solver, |i, r| {
        if opts.verbose {
            eprintln!("iteration {i} residual {r:.6e}");
        }
    })?;
    let dump = SolutionDump::new(&topo, &sol, &solver);
    match (out, format) {
        (Output::File(p), _) => {
            dump.write(p, format)?;
        }
        (Output::Stdout, Format::Json) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            dump.write_json(&mut lock)?;
            lock.flush()?;
        }
        (Output::Stdout, Format::Csv) => {
            return Err(CliError::Input("--format csv writes two tables and needs --out".into()));
        }
    }
    if !sol.converged {
        return Err(CliError::NonConvergence { residual: sol.final_residual, iterations: sol.iterations });
    }
    Ok(dump)
}

/// Runs the oracle suites, printing one line per comparison.
pub fn cmd_validate(suite: Suite, seed: u64, out: &mut impl Write) -> Result<Vec<SuiteReport>, CliError> {
    let reports = validate::run(suite, seed)?;
    for r in &reports {
        writeln!(out, "{r}")?;
    }
    if let Some(bad) = reports.iter().find(|r| !r.passed()) {
        return Err(CliError::OracleMismatch(format!(
            "{} error {:.3e} exceeds {:.0e} at {}",
            bad.name, bad.max_error, bad.tolerance, bad.worst_case
        )));
    }
    Ok(reports)
}

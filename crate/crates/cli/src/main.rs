//! `mamv`: batch front end for the mean-value averaging operators, remainder
//! rate studies, bound-schedule sweeps, and the wide-stencil Dirichlet solver.
//!
//! Exit codes: 0 on success, 2 on validation failure, 3 on numerical failure.
//! Failures also emit one machine-readable JSON line on stderr.

mod config;
mod runner;

use clap::{Args, Parser, Subcommand};
use config::{
    parse_domain, parse_field, parse_floats, parse_function, parse_phi, parse_phi_list,
    parse_variant, CommandKind, RunConfig, SolveSpec,
};
use runner::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mamv",
    about = "Mean-value averaging operators for the Monge-Ampere equation",
    version
)]
struct Cli {
    /// JSON run manifest; supersedes all flags (see docs/config.schema.json)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone, Default)]
struct StudyFlags {
    /// Catalog function name
    #[arg(long)]
    function: Option<String>,
    /// Fold exponent for the ridge entry
    #[arg(long)]
    gamma: Option<f64>,
    /// Evaluation point, comma separated
    #[arg(long)]
    x: Option<String>,
    /// Operator variant (solid_restricted, solid_domain, surface_restricted,
    /// surface_domain, weighted_surface, discrete)
    #[arg(long)]
    variant: Option<String>,
    /// Eigenvalue bound schedule: power:ALPHA or const:C
    #[arg(long)]
    phi: Option<String>,
    /// Scale schedule, comma separated and strictly decreasing
    #[arg(long)]
    eps: Option<String>,
    /// Constraint domain: rect:LO..,HI.. | disc:CENTER..,R | whole
    #[arg(long)]
    domain: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce a named study
    Example {
        /// Study name (see README for the registry)
        #[arg(long)]
        name: String,
        #[command(flatten)]
        flags: StudyFlags,
    },
    /// Remainder-rate study for one function and operator variant
    Rate {
        #[command(flatten)]
        flags: StudyFlags,
    },
    /// Rate studies across several bound schedules
    Sweep {
        /// Comma-separated schedules, e.g. power:0.25,power:0.5
        #[arg(long)]
        phi_list: Option<String>,
        #[command(flatten)]
        flags: StudyFlags,
    },
    /// Solve the Dirichlet problem on a rectangle or disc
    Solve {
        /// Right-hand side: const:C or a catalog name (its right-hand side)
        #[arg(long)]
        f: Option<String>,
        /// Boundary data: const:C or a catalog name (its values)
        #[arg(long)]
        g: Option<String>,
        /// Grid spacing
        #[arg(long)]
        h: Option<f64>,
        /// Convergence tolerance on the max update
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Sweep budget
        #[arg(long, default_value_t = 40_000)]
        max_iter: usize,
        /// Exact solution name for the error report
        #[arg(long)]
        exact: Option<String>,
        #[command(flatten)]
        flags: StudyFlags,
    },
}

fn assemble(cli: Cli) -> Result<RunConfig, CliError> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config rejected: {e}")))?;
        return Ok(config);
    }
    let command = cli
        .command
        .ok_or_else(|| CliError::Validation("a subcommand or --config is required".into()))?;

    let from_flags = |flags: &StudyFlags| -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            command: CommandKind::Rate,
            name: None,
            function: flags
                .function
                .as_deref()
                .map(|f| parse_function(f, flags.gamma)),
            x: flags
                .x
                .as_deref()
                .map(parse_floats)
                .transpose()
                .map_err(CliError::Validation)?,
            variant: flags
                .variant
                .as_deref()
                .map(parse_variant)
                .transpose()
                .map_err(CliError::Validation)?,
            phi: flags
                .phi
                .as_deref()
                .map(parse_phi)
                .transpose()
                .map_err(CliError::Validation)?,
            phi_list: None,
            eps: flags
                .eps
                .as_deref()
                .map(parse_floats)
                .transpose()
                .map_err(CliError::Validation)?,
            domain: flags
                .domain
                .as_deref()
                .map(parse_domain)
                .transpose()
                .map_err(CliError::Validation)?,
            search: None,
            quadrature: None,
            stencil: None,
            solve: None,
            out: flags.out.clone(),
        })
    };

    match command {
        Command::Example { name, flags } => {
            let mut config = from_flags(&flags)?;
            config.command = CommandKind::Example;
            config.name = Some(name);
            Ok(config)
        }
        Command::Rate { flags } => from_flags(&flags),
        Command::Sweep { phi_list, flags } => {
            let mut config = from_flags(&flags)?;
            config.command = CommandKind::Sweep;
            config.phi_list = phi_list
                .as_deref()
                .map(parse_phi_list)
                .transpose()
                .map_err(CliError::Validation)?;
            Ok(config)
        }
        Command::Solve {
            f,
            g,
            h,
            tol,
            max_iter,
            exact,
            flags,
        } => {
            let mut config = from_flags(&flags)?;
            config.command = CommandKind::Solve;
            let eps = match config.eps.as_deref() {
                Some([single]) => *single,
                Some(_) => {
                    return Err(CliError::Validation(
                        "solve takes a single --eps value".into(),
                    ))
                }
                None => return Err(CliError::Validation("solve needs --eps".into())),
            };
            config.eps = None;
            config.solve = Some(SolveSpec {
                h: h.ok_or_else(|| CliError::Validation("solve needs --h".into()))?,
                eps,
                tol,
                max_iter,
                f: parse_field(
                    f.as_deref()
                        .ok_or_else(|| CliError::Validation("solve needs --f".into()))?,
                )
                .map_err(CliError::Validation)?,
                g: parse_field(
                    g.as_deref()
                        .ok_or_else(|| CliError::Validation("solve needs --g".into()))?,
                )
                .map_err(CliError::Validation)?,
                exact,
            });
            Ok(config)
        }
    }
}

fn emit_failure(err: &CliError) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::json!({ "error": err.kind(), "detail": err.detail() })
    );
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MAMV_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let config = match assemble(cli) {
        Ok(c) => c,
        Err(e) => return emit_failure(&e),
    };
    match runner::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => emit_failure(&e),
    }
}

//! Command-line front end: `run`, `verify`, `bounds` and `sample`.
//!
//! Exit codes: 0 success, 1 a check or bound failed, 2 usage error,
//! 3 problem-file error, 4 blow-up, 5 numeric failure, 6 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{kondratiev_norm, mc_moments, tail_decay};
use crate::error::Error;
use crate::multiindex::Truncation;
use crate::problem::Problem;
use crate::propagator::{certificate, solve_system, SolverOptions};
use crate::report::{
    bounds_table, catalan_table, factorial_bound_table, mc_table, norm_table, trajectory_table, write_tables,
};
use crate::verify::{run_check, suite_ids};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;
pub const EXIT_IO: i32 = 6;

/// Rows of the trajectory table are kept on at most this many output nodes
/// unless a stride is given.
const DEFAULT_TRAJECTORY_NODES: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "wickflow", version, about = "Chaos-expansion solver for Wick-nonlinear evolution equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem and write trajectory, sup-norm and norm tables.
    Run(RunArgs),
    /// Run the built-in verification checks.
    Verify(VerifyArgs),
    /// Write the coefficient certificate and the combinatorial bound tables.
    Bounds(ProblemArgs),
    /// Monte-Carlo moments of the solution at the final time.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Problem file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the number of time steps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    steps: Option<u64>,
    /// Override the truncation as `K,P`.
    #[arg(long, value_parser = parse_trunc)]
    trunc: Option<Truncation>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Keep every `N`-th output node in the trajectory table.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "full_trajectory")]
    stride: Option<u64>,
    /// Keep every output node in the trajectory table.
    #[arg(long)]
    full_trajectory: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suite to run (repeatable): `all`, `bounds` or a check name.
    #[arg(long = "suite", default_value = "all")]
    suites: Vec<String>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Generator seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of draws.
    #[arg(long, default_value_t = 20000, value_parser = clap::value_parser!(u64).range(2..))]
    draws: u64,
}

fn parse_trunc(s: &str) -> Result<Truncation, String> {
    let (k, p) = s
        .split_once(',')
        .ok_or_else(|| format!("expected K,P, got {s:?}"))?;
    let k: u32 = k.trim().parse().map_err(|e| format!("K: {e}"))?;
    let p: u32 = p.trim().parse().map_err(|e| format!("P: {e}"))?;
    Truncation::new(k, p).map_err(|e| e.to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

fn load(args: &ProblemArgs) -> Result<Problem, Error> {
    let mut problem = Problem::from_path(&args.spec)?;
    if let Some(n) = args.steps {
        problem = problem
            .with_steps(n as usize)
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    if let Some(t) = args.trunc {
        problem = problem.with_truncation(t);
    }
    Ok(problem)
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let problem = load(&args.problem)?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    let cert = certificate(&problem, &report);
    let stride = match (args.full_trajectory, args.stride) {
        (true, _) => 1,
        (false, Some(s)) => s as usize,
        (false, None) => problem.steps.div_ceil(DEFAULT_TRAJECTORY_NODES).max(1),
    };
    let q = cert.constants.as_ref().map(|c| c.q).unwrap_or(0.0);
    let norms = kondratiev_norm(report.trajectory.last(), 1.0, q)?;
    let tables = vec![
        trajectory_table(&report, stride)?,
        bounds_table("sup_norms.csv", &cert)?,
        norm_table(&norms, &tail_decay(&norms))?,
    ];
    write_tables(&args.problem.out, &tables)?;
    let _ = writeln!(
        out,
        "solved {} coefficients on {} nodes; wrote {} tables to {}",
        report.sup_norms.len(),
        report.trajectory.times.len(),
        tables.len(),
        args.problem.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut ids = Vec::new();
    for name in &args.suites {
        match suite_ids(name) {
            Some(v) => ids.extend(v),
            None => {
                let _ = writeln!(err, "error: unknown or empty suite {name:?}");
                return EXIT_USAGE;
            }
        }
    }
    ids.sort_unstable();
    ids.dedup();
    let mut failed = 0;
    for id in ids {
        let r = run_check(id);
        let _ = writeln!(out, "{r}");
        failed += usize::from(!r.passed);
    }
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Factorial-ratio sweep range written by `bounds`.
const FACTORIAL_SWEEP: (u32, u32) = (6, 8);
const CATALAN_SWEEP: u32 = 30;

fn cmd_bounds(args: &ProblemArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let problem = load(args)?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    let cert = certificate(&problem, &report);
    let tables = vec![
        bounds_table("certificate.csv", &cert)?,
        catalan_table(CATALAN_SWEEP)?,
        factorial_bound_table(Truncation::new(FACTORIAL_SWEEP.0, FACTORIAL_SWEEP.1)?)?,
    ];
    let sweeps_hold = tables[1..]
        .iter()
        .all(|t| !String::from_utf8_lossy(&t.bytes).contains(",false"));
    write_tables(&args.out, &tables)?;
    let _ = writeln!(out, "certificate holds: {}", cert.holds());
    if let Some(reason) = &cert.fit_failure {
        let _ = writeln!(out, "{reason}");
    }
    let _ = writeln!(out, "catalan and factorial sweeps hold: {sweeps_hold}");
    Ok(if cert.holds() && sweeps_hold {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_sample(args: &SampleArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let problem = load(&args.problem)?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    let mc = mc_moments(report.trajectory.last(), args.draws as usize, args.seed)?;
    write_tables(&args.problem.out, &[mc_table(&mc)?])?;
    let (zm, zv) = mc.max_z();
    let _ = writeln!(out, "max z mean {zm:.3}, max z variance {zv:.3}");
    Ok(EXIT_OK)
}

fn configure_threads(err: &mut dyn Write) -> Result<(), i32> {
    let Ok(value) = std::env::var("WICKFLOW_THREADS") else {
        return Ok(());
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // A second configuration in the same process keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        _ => {
            let _ = writeln!(err, "error: WICKFLOW_THREADS must be a positive integer, got {value:?}");
            Err(EXIT_USAGE)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    if let Err(code) = configure_threads(err) {
        return code;
    }
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Verify(a) => Ok(cmd_verify(a, out, err)),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Sample(a) => cmd_sample(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

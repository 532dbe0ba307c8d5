//! `monge` — command-line front end for the Monge-Ampère solver.
//!
//! One subcommand, `solve`, runs a single grid or a convergence sweep for
//! a built-in or user-defined problem and writes a JSON report (plus
//! optional CSV solution dumps). Exit codes: 0 on success, 2 for
//! configuration errors (bad flags, malformed problem files, impossible
//! grids), 3 when the solver itself fails to converge or hits a numerical
//! fault.

mod custom;
mod expr;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use monge::diagnostics::{convergence_rates, error_norms, ErrorNorms};
use monge::nonmonotone::{solve_branch, NewtonConfig, RootBranch};
use monge::problems::Problem;
use monge::solver::{solve, Scheme, SolveError, SolverConfig};
use monge::Error;

use report::{Metadata, Report, ReportRow, NORM_CONVENTION};

#[derive(Parser)]
#[command(
    name = "monge",
    version,
    about = "Monotone finite-difference solver for the Dirichlet Monge-Ampère equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem on one or more grids and write a convergence report
    Solve(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in problem name (see `--problem help`) or path to a .toml
    /// problem description
    #[arg(long)]
    problem: String,

    /// Grid sizes as cells per axis, comma-separated (e.g. 32,64,128).
    /// Each size n solves on the (n-1)x(n-1) interior lattice with
    /// spacing h = width/n. Rate columns are filled when sizes double.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,

    /// Discretization scheme
    #[arg(long, value_enum, default_value_t = SchemeArg::Mixed)]
    scheme: SchemeArg,

    /// Residual sup-norm tolerance (default 1e-6; 1e-10 for the
    /// non-monotone scheme's Newton iteration)
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap for policy iteration / Newton
    #[arg(long, default_value_t = 100)]
    max_iter: usize,

    /// Control-angle sample count M (default: one sample per grid line)
    #[arg(long)]
    samples: Option<usize>,

    /// Directory for reports (default: $MONGE_OUT_DIR, else the current
    /// directory)
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Also write each solution's interior values as CSV (x,y,u)
    #[arg(long)]
    dump_solution: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    /// Seven-point stencils where admissible, wide stencils elsewhere
    Mixed,
    /// Wide semi-Lagrangian stencils everywhere
    Wide,
    /// Non-monotone central-difference Newton scheme (concave branch)
    Nonmonotone,
}

impl SchemeArg {
    fn label(self) -> &'static str {
        match self {
            SchemeArg::Mixed => "mixed",
            SchemeArg::Wide => "wide",
            SchemeArg::Nonmonotone => "nonmonotone",
        }
    }
}

/// A failure, tagged with the process exit code it maps to.
enum Failure {
    /// Bad input: flags, problem files, impossible grids. Exit code 2.
    Config(String),
    /// The solver ran and failed: non-convergence or a numerical fault.
    /// Exit code 3.
    Solver(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidDomain(_)
            | Error::InvalidProblem(_)
            | Error::GridTooSmall(_)
            | Error::NonSquareCells { .. } => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(&args),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}

fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let problem = resolve_problem(&args.problem)?;
    for &size in &args.n {
        if size < 3 {
            return Err(Failure::Config(format!(
                "grid size must be at least 3 cells per axis, got {size}"
            )));
        }
    }
    if args.scheme == SchemeArg::Nonmonotone && args.samples.is_some() {
        eprintln!("warning: --samples has no effect with the non-monotone scheme");
    }

    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("MONGE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::Config(format!("cannot create '{}': {e}", out_dir.display())))?;

    let stem = sanitize(problem.name());
    let scheme = args.scheme.label();
    println!(
        "problem {}, scheme {}, sizes {:?}",
        problem.name(),
        scheme,
        args.n
    );
    println!(
        "{:>6} {:>12} {:>12} {:>6} {:>12} {:>6} {:>6} {:>8} {:>9}",
        "n", "h", "l2", "rate", "linf", "rate", "iters", "wide", "ms"
    );

    let mut rows: Vec<ReportRow> = Vec::with_capacity(args.n.len());
    let mut norms: Vec<(usize, ErrorNorms<f64>)> = Vec::new();
    for &size in &args.n {
        let interior = size - 1;
        let started = Instant::now();
        let solved = run_one(&problem, interior, args)?;
        let runtime_ms = started.elapsed().as_millis() as u64;

        let errors = problem
            .has_exact()
            .then(|| error_norms(&solved.u, |p| problem.exact_value(p).unwrap()));
        if let Some(e) = errors {
            norms.push((interior, e));
        }

        let grid = solved.u.grid();
        rows.push(ReportRow {
            n: size,
            h: grid.h(),
            l2: errors.map(|e| e.l2),
            rate2: None,
            linf: errors.map(|e| e.linf),
            rate_inf: None,
            policy_iterations: solved.iterations,
            wide_point_count: solved.wide_point_count,
            runtime_ms,
        });

        if args.dump_solution {
            let path = out_dir.join(format!("{stem}_{scheme}_n{size}.csv"));
            report::write_csv(&path, &solved.u).map_err(Failure::Config)?;
        }
    }

    fill_rates(&mut rows, &norms);
    for row in &rows {
        print_row(row);
    }

    let json_path = out_dir.join(format!("{stem}_{scheme}.json"));
    let document = Report {
        problem: problem.name().to_string(),
        scheme: scheme.to_string(),
        samples: (args.scheme != SchemeArg::Nonmonotone)
            .then_some(args.samples)
            .flatten(),
        tol: effective_tolerance(args),
        norm_convention: NORM_CONVENTION,
        rows,
        metadata: Metadata::now(),
    };
    report::write_json(&json_path, &document).map_err(Failure::Config)?;
    println!("wrote {}", json_path.display());
    Ok(())
}

struct Solved {
    u: monge::GridFunction,
    iterations: usize,
    wide_point_count: usize,
}

fn run_one(problem: &Problem<f64>, interior: usize, args: &SolveArgs) -> Result<Solved, Failure> {
    match args.scheme {
        SchemeArg::Mixed | SchemeArg::Wide => {
            let config = SolverConfig {
                scheme: if args.scheme == SchemeArg::Mixed {
                    Scheme::Mixed
                } else {
                    Scheme::PureWide
                },
                tolerance: effective_tolerance(args),
                max_iterations: args.max_iter,
                theta_samples: args.samples,
                ..SolverConfig::default()
            };
            match solve(problem, interior, &config) {
                Ok(outcome) => Ok(Solved {
                    wide_point_count: outcome
                        .report
                        .census
                        .last()
                        .map(|c| c.wide)
                        .unwrap_or(0),
                    iterations: outcome.report.iterations,
                    u: outcome.u,
                }),
                Err(SolveError::NonConvergence(outcome)) => Err(Failure::Solver(format!(
                    "policy iteration did not reach tolerance after {} iterations \
                     (final residual {:.3e})",
                    outcome.report.iterations, outcome.report.final_residual
                ))),
                Err(SolveError::Fault(e)) => Err(e.into()),
            }
        }
        SchemeArg::Nonmonotone => {
            let config = NewtonConfig {
                tolerance: effective_tolerance(args),
                max_iterations: args.max_iter,
                ..NewtonConfig::default()
            };
            let (u, newton) = solve_branch(problem, interior, RootBranch::Concave, &config)
                .map_err(Failure::from)?;
            Ok(Solved {
                u,
                iterations: newton.iterations,
                wide_point_count: 0,
            })
        }
    }
}

fn effective_tolerance(args: &SolveArgs) -> f64 {
    args.tol.unwrap_or(match args.scheme {
        SchemeArg::Mixed | SchemeArg::Wide => 1e-6,
        SchemeArg::Nonmonotone => 1e-10,
    })
}

fn resolve_problem(spec: &str) -> Result<Problem<f64>, Failure> {
    if Problem::<f64>::builtin_names().contains(&spec) {
        return Problem::builtin(spec).map_err(Failure::from);
    }
    let path = std::path::Path::new(spec);
    if path.extension().is_some_and(|e| e == "toml") || path.exists() {
        return custom::load(path).map_err(Failure::Config);
    }
    Err(Failure::Config(format!(
        "unknown problem '{spec}': expected one of {:?} or a path to a .toml file",
        Problem::<f64>::builtin_names()
    )))
}

/// Fills the rate columns when the size sequence halves the mesh step by
/// step; leaves them null otherwise.
fn fill_rates(rows: &mut [ReportRow], norms: &[(usize, ErrorNorms<f64>)]) {
    if norms.len() != rows.len() || norms.len() < 2 {
        return;
    }
    let Ok(table) = convergence_rates(norms) else {
        return;
    };
    for (row, rate) in rows.iter_mut().zip(&table) {
        row.rate2 = rate.rate_l2;
        row.rate_inf = rate.rate_linf;
    }
}

fn print_row(row: &ReportRow) {
    let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
    let rate = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    println!(
        "{:>6} {:>12.6} {:>12} {:>6} {:>12} {:>6} {:>6} {:>8} {:>9}",
        row.n,
        row.h,
        num(row.l2),
        rate(row.rate2),
        num(row.linf),
        rate(row.rate_inf),
        row.policy_iterations,
        row.wide_point_count,
        row.runtime_ms
    );
}

fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '-'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "problem".to_string()
    } else {
        cleaned
    }
}

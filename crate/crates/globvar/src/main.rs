use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use globvar::tabulate::Grid;
use globvar::{run, Command, ConfigError, Method, Overrides, Problem, ProblemConfig, RunOptions};

/// Decide whether a second-order system on a surface is variational and
/// build a global Lagrangian for it.
///
/// Exit status: 0 when every verdict passes, 1 on a mathematical failure
/// (the report says which), 2 on a configuration or usage error.
#[derive(Parser, Debug)]
#[command(name = "globvar", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file: the JSON report, or the CSV for `tabulate`. Default stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the JSON report here (useful with `tabulate`).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points per chart.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol_symbolic: Option<f64>,
    #[arg(long)]
    tol_quadrature: Option<f64>,
    #[arg(long)]
    tol_cohomology: Option<f64>,
    #[arg(long)]
    tol_obstruction: Option<f64>,
    #[arg(long)]
    tol_global: Option<f64>,
    /// Tabulation grid, `var=v` or `var=lo:hi:n`, comma-separated or repeated.
    #[arg(long)]
    grid: Vec<Grid>,
    /// Chart to tabulate (default: the first).
    #[arg(long)]
    chart: Option<String>,
    /// Lagrangian to verify; one for every chart or one per chart in order.
    #[arg(long)]
    lagrangian: Vec<String>,
}

fn write(path: Option<&PathBuf>, text: &str) -> Result<(), ConfigError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| ConfigError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main_inner(cli: &Cli) -> Result<u8, ConfigError> {
    let mut config = ProblemConfig::load(&cli.config)?;
    Overrides {
        tol_symbolic: cli.tol_symbolic,
        tol_quadrature: cli.tol_quadrature,
        tol_cohomology: cli.tol_cohomology,
        tol_obstruction: cli.tol_obstruction,
        tol_global: cli.tol_global,
        samples: cli.samples,
        seed: cli.seed,
    }
    .apply(&mut config.numerics);
    let problem = Problem::from_config(&config)?;
    let mut grid = Grid::default();
    for g in &cli.grid {
        grid.extend(g.clone());
    }
    let opts = RunOptions { method: cli.method, lagrangians: cli.lagrangian.clone(), grid, chart: cli.chart.clone() };
    let outcome = run(&problem, cli.command, &opts)?;
    let json = outcome.report.to_json();
    write(cli.out.as_ref(), outcome.csv.as_deref().unwrap_or(&json))?;
    if let Some(p) = &cli.report {
        write(Some(p), &json)?;
    }
    if let Some(reason) = outcome.report.failure() {
        eprintln!("globvar: {}: {reason}", cli.command.name());
    }
    Ok(outcome.status as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(&cli) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("globvar: {e}");
            ExitCode::from(2)
        }
    }
}

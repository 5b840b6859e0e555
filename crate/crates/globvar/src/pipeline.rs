//! check → construct → verify.

use globvar_core::cohomology::{solve_exactness, CohomologyError, GlobalLagrangian};
use globvar_core::expr::{EvalError, Expression};
use globvar_core::globalize::{euler_lagrange_residual, Construction, OMEGA_TOL};
use globvar_core::jet::{DifferentialForm, JetPoint, Lagrangian};
use globvar_core::lagrange::vainberg_tonti;
use globvar_core::sample::JetSampler;
use globvar_core::varcheck::{helmholtz, CheckOptions};

use crate::config::{ConfigError, LoadedChart, Problem};
use crate::report::{self, ChartHelmholtz, ChartIdentities, ChartLagrangian, Globality, Omega, Path, Report, Residual};
use crate::tabulate::{self, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Check,
    Build,
    Verify,
    Tabulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Build => "build",
            Command::Verify => "verify",
            Command::Tabulate => "tabulate",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    #[default]
    Auto,
    Simple,
    Cohomology,
    VainbergTonti,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub method: Method,
    /// Lagrangians for `verify`; overrides the config's `[verify]` section.
    pub lagrangians: Vec<String>,
    /// Grid and chart for `tabulate`.
    pub grid: Grid,
    pub chart: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
    pub status: i32,
}

/// λ samples recorded per chart in a `build` report.
pub const REPORT_SAMPLES: usize = 5;

/// Runs `command`. Errors are configuration errors (exit status 2);
/// mathematical failures are recorded in the report (exit status 1).
pub fn run(problem: &Problem, command: Command, opts: &RunOptions) -> Result<Outcome, ConfigError> {
    let mut report = Report::new(&problem.name, command.name(), &problem.numerics);
    let mut csv = None;
    match command {
        Command::Check => check(problem, &mut report),
        Command::Verify => verify(problem, opts, &mut report)?,
        Command::Build | Command::Tabulate => {
            if let Some(built) = build(problem, opts.method, &mut report)? {
                if command == Command::Tabulate {
                    let chart = match &opts.chart {
                        Some(name) => problem
                            .charts
                            .iter()
                            .position(|c| &c.name == name)
                            .ok_or_else(|| ConfigError::UnknownChart(name.clone()))?,
                        None => 0,
                    };
                    let table = tabulate::tabulate(&opts.grid, &problem.charts[chart], |p| built.density(chart, p))?;
                    csv = Some(table);
                }
            }
        }
    }
    report.finish();
    let status = if report.passed { 0 } else { 1 };
    Ok(Outcome { report, csv, status })
}

/// Helmholtz conditions in every chart and globality of ε.
pub fn check(problem: &Problem, report: &mut Report) {
    let n = &problem.numerics;
    for chart in &problem.charts {
        match helmholtz(&chart.source, &chart.check_options(n, &problem.flags)) {
            Ok(h) => report.helmholtz.push(ChartHelmholtz::new(&chart.name, &h, n.tol_symbolic)),
            Err(e) => report.errors.push(format!("chart `{}`: helmholtz: {e}", chart.name)),
        }
    }
    let eps: Vec<DifferentialForm> = problem.charts.iter().map(|c| c.source.to_form()).collect();
    globality(problem, "eps", &eps, report);
}

fn globality(problem: &Problem, form: &str, family: &[DifferentialForm], report: &mut Report) {
    if problem.atlas.transitions.is_empty() {
        return;
    }
    let n = &problem.numerics;
    match problem.atlas.check_global(family, n.samples, n.seed) {
        Ok(g) => {
            let max_mismatch = g.max_mismatch();
            report.globality.push(Globality {
                form: form.to_string(),
                max_mismatch,
                tol: n.tol_global,
                passed: g.passed(n.tol_global),
                overlaps: g
                    .overlaps
                    .iter()
                    .map(|o| report::Overlap {
                        from: o.from.clone(),
                        to: o.to.clone(),
                        samples: o.samples,
                        max_mismatch: o.max_mismatch,
                        worst_point: o.worst_point.as_ref().map(Into::into),
                    })
                    .collect(),
            })
        }
        Err(e) => report.errors.push(format!("globality of {form}: {e}")),
    }
}

/// Lagrangian produced by `build`.
pub enum Built {
    Global(GlobalLagrangian),
    Local(Vec<Lagrangian>),
}

impl Built {
    pub fn density(&self, chart: usize, p: &JetPoint) -> Result<f64, EvalError> {
        match self {
            Built::Global(g) => g.density(chart, p),
            Built::Local(l) => l[chart].density().evaluate(p),
        }
    }
}

fn chart_lagrangians(problem: &Problem, lagrangians: &[Lagrangian], numeric_eta: bool) -> Vec<ChartLagrangian> {
    problem
        .charts
        .iter()
        .zip(lagrangians)
        .map(|(c, l)| ChartLagrangian { chart: c.name.clone(), lagrangian: c.display(l.density()), numeric_eta })
        .collect()
}

/// The full construction. Returns `None` when a step failed; the failure is
/// in the report.
pub fn build(problem: &Problem, method: Method, report: &mut Report) -> Result<Option<Built>, ConfigError> {
    let n = &problem.numerics;
    if method == Method::Cohomology && problem.cover.is_none() {
        return Err(ConfigError::Invalid("the cohomology path needs a [cover] section".into()));
    }
    check(problem, report);
    if !report.errors.is_empty() || report.helmholtz.iter().any(|h| !h.passed) {
        report.errors.push("source form is not locally variational; nothing constructed".into());
        return Ok(None);
    }
    let opts: Vec<CheckOptions> = problem.charts.iter().map(|c| c.check_options(n, &problem.flags)).collect();
    if method == Method::VainbergTonti {
        return Ok(local(problem, &opts, report));
    }

    let mut constructions = Vec::new();
    for (chart, o) in problem.charts.iter().zip(&opts) {
        match Construction::new(&chart.source, o) {
            Ok(c) => constructions.push(c),
            Err(e) => report.errors.push(format!("chart `{}`: {e}", chart.name)),
        }
    }
    if constructions.len() != problem.charts.len() {
        return Ok(None);
    }
    for ((chart, c), o) in problem.charts.iter().zip(&constructions).zip(&opts) {
        match c.identities(o) {
            Ok(ids) => report.identities.push(ChartIdentities {
                chart: chart.name.clone(),
                identities: ids.iter().map(|(name, r)| Residual::new(*name, *r, n.tol_symbolic, None)).collect(),
            }),
            Err(e) => report.errors.push(format!("chart `{}`: identities: {e}", chart.name)),
        }
        let coefficient = c.omega_coefficient();
        match c.omega_magnitude(o) {
            Ok((max_abs, _)) => report.omega.push(Omega {
                chart: chart.name.clone(),
                coefficient: chart.display(&coefficient),
                max_abs,
                samples: if coefficient.is_zero() { 0 } else { o.samples },
                zero: max_abs < OMEGA_TOL,
            }),
            Err(e) => report.errors.push(format!("chart `{}`: omega: {e}", chart.name)),
        }
    }
    let pick = |f: fn(&Construction) -> &DifferentialForm| constructions.iter().map(f).cloned().collect::<Vec<_>>();
    globality(problem, "alpha_prime", &pick(|c| &c.split.alpha_prime), report);
    globality(problem, "kappa", &pick(|c| &c.kappa), report);
    globality(problem, "omega", &pick(|c| &c.omega), report);
    if !report.errors.is_empty() {
        return Ok(None);
    }

    let omega_zero = report.omega.iter().all(|o| o.zero);
    let path = match method {
        Method::Auto if omega_zero => Path::Simple,
        Method::Auto if problem.cover.is_none() => {
            return Err(ConfigError::Invalid("omega does not vanish and no [cover] section is given".into()));
        }
        Method::Simple => Path::Simple,
        _ => Path::Cohomology,
    };
    report.path = Some(path);
    let mut lagrangians = Vec::new();
    for (chart, c) in problem.charts.iter().zip(&constructions) {
        match c.lagrangian(None) {
            Ok(l) => lagrangians.push(l),
            Err(e) => report.errors.push(format!("chart `{}`: lagrangian: {e}", chart.name)),
        }
    }
    if !report.errors.is_empty() {
        return Ok(None);
    }

    let built = if path == Path::Simple {
        if !omega_zero {
            report.errors.push("omega does not vanish; the simple path does not apply".into());
            return Ok(None);
        }
        report.lagrangians = chart_lagrangians(problem, &lagrangians, false);
        let forms: Vec<DifferentialForm> = lagrangians.iter().map(|l| l.to_form()).collect();
        globality(problem, "lambda", &forms, report);
        for ((chart, l), o) in problem.charts.iter().zip(&lagrangians).zip(&opts) {
            report.verification.push(match euler_lagrange_residual(l, &chart.source, o) {
                Ok((r, p)) => Residual::new(&chart.name, r, n.tol_quadrature, p.as_ref()),
                Err(e) => {
                    report.errors.push(format!("chart `{}`: E(lambda): {e}", chart.name));
                    Residual::new(&chart.name, f64::NAN, n.tol_quadrature, None)
                }
            });
        }
        Built::Global(GlobalLagrangian { charts: lagrangians, eta: None })
    } else {
        let cover = problem.cover.as_ref().expect("checked above");
        let omega: Vec<Expression> = constructions.iter().map(|c| c.omega_coefficient()).collect();
        let mut summary = report::Cohomology {
            cells: cover.cells.len(),
            masses: Vec::new(),
            c_last: f64::NAN,
            max_residual: None,
            tol: n.tol_cohomology,
            obstruction: None,
            passed: false,
        };
        let solution = match solve_exactness(&omega, cover, &problem.solver_options()) {
            Ok(s) => s,
            Err(CohomologyError::Obstruction { c_last, masses, diagnosis }) => {
                summary.masses = masses;
                summary.c_last = c_last;
                summary.obstruction =
                    Some(report::Obstruction { c_last, tol: n.tol_obstruction, diagnosis: diagnosis.to_string() });
                report.cohomology = Some(summary);
                return Ok(None);
            }
            Err(e) => {
                report.errors.push(format!("cohomology: {e}"));
                report.cohomology = Some(summary);
                return Ok(None);
            }
        };
        summary.masses = solution.masses.clone();
        summary.c_last = solution.c_last();
        match solution.residual(&omega, n.samples, n.seed) {
            Ok((r, _)) => {
                summary.max_residual = Some(r);
                summary.passed = r < n.tol_cohomology;
            }
            Err(e) => report.errors.push(format!("cohomology residual: {e}")),
        }
        report.cohomology = Some(summary);
        report.lagrangians = chart_lagrangians(problem, &lagrangians, true);
        let global = GlobalLagrangian { charts: lagrangians, eta: Some(solution) };
        let eps: Vec<_> = problem.charts.iter().map(|c| c.source.clone()).collect();
        let el_opts = CheckOptions { samples: n.el_samples, ..opts[0].clone() };
        let (r, passed) = match global.euler_lagrange_residual(&eps, &el_opts) {
            Ok(r) => (r, true),
            Err(e) => {
                report.errors.push(format!("E(lambda): {e}"));
                (f64::NAN, false)
            }
        };
        let mut entry = Residual::new("all charts", r, n.tol_cohomology, None);
        entry.passed &= passed;
        report.verification.push(entry);
        Built::Global(global)
    };
    record_samples(problem, &built, report);
    Ok(Some(built))
}

/// Vainberg–Tonti Lagrangians reduced to first order, chart by chart.
fn local(problem: &Problem, opts: &[CheckOptions], report: &mut Report) -> Option<Built> {
    let n = &problem.numerics;
    report.path = Some(Path::VainbergTontiLocal);
    let mut lagrangians = Vec::new();
    for (chart, o) in problem.charts.iter().zip(opts) {
        match vainberg_tonti(&chart.source, o) {
            Ok(vt) => lagrangians.push(vt.reduced),
            Err(e) => {
                report.errors.push(format!("chart `{}`: vainberg-tonti: {e}", chart.name));
                return None;
            }
        }
    }
    report.lagrangians = chart_lagrangians(problem, &lagrangians, false);
    for ((chart, l), o) in problem.charts.iter().zip(&lagrangians).zip(opts) {
        report.verification.push(match euler_lagrange_residual(l, &chart.source, o) {
            Ok((r, p)) => Residual::new(&chart.name, r, n.tol_quadrature, p.as_ref()),
            Err(e) => {
                report.errors.push(format!("chart `{}`: E(lambda): {e}", chart.name));
                Residual::new(&chart.name, f64::NAN, n.tol_quadrature, None)
            }
        });
    }
    let built = Built::Local(lagrangians);
    record_samples(problem, &built, report);
    Some(built)
}

fn record_samples(problem: &Problem, built: &Built, report: &mut Report) {
    for (k, chart) in problem.charts.iter().enumerate() {
        let mut sampler = JetSampler::new(problem.numerics.seed.wrapping_add(k as u64)).in_box(chart.domain);
        for p in sampler.points(1, REPORT_SAMPLES) {
            let value = built.density(k, &p).unwrap_or(f64::NAN);
            report.samples.push(report::Sample { chart: chart.name.clone(), point: (&p).into(), value });
        }
    }
}

/// E(𝓛) = ε for user-supplied Lagrangians.
pub fn verify(problem: &Problem, opts: &RunOptions, report: &mut Report) -> Result<(), ConfigError> {
    let texts = if opts.lagrangians.is_empty() { &problem.verify } else { &opts.lagrangians };
    let k = problem.charts.len();
    if texts.is_empty() {
        return Err(ConfigError::Invalid("verify needs a Lagrangian (--lagrangian or [verify])".into()));
    }
    if !(texts.len() == 1 || texts.len() == k) {
        return Err(ConfigError::Invalid(format!("verify needs 1 or {k} Lagrangians, got {}", texts.len())));
    }
    let n = &problem.numerics;
    for (i, chart) in problem.charts.iter().enumerate() {
        let text = &texts[if texts.len() == 1 { 0 } else { i }];
        let density = parse_lagrangian(chart, text)?;
        let lagrangian = Lagrangian::new(density).map_err(|e| ConfigError::Invalid(format!("lagrangian: {e}")))?;
        report.lagrangians.push(ChartLagrangian {
            chart: chart.name.clone(),
            lagrangian: chart.display(lagrangian.density()),
            numeric_eta: false,
        });
        let o = chart.check_options(n, &problem.flags);
        report.verification.push(match euler_lagrange_residual(&lagrangian, &chart.source, &o) {
            Ok((r, p)) => Residual::new(&chart.name, r, n.tol_quadrature, p.as_ref()),
            Err(e) => {
                report.errors.push(format!("chart `{}`: E(lagrangian): {e}", chart.name));
                Residual::new(&chart.name, f64::NAN, n.tol_quadrature, None)
            }
        });
    }
    Ok(())
}

fn parse_lagrangian(chart: &LoadedChart, text: &str) -> Result<Expression, ConfigError> {
    let e = chart.parse(text, &format!("chart `{}` lagrangian", chart.name))?;
    crate::config::check_jet_vars(&e, &format!("chart `{}` lagrangian", chart.name))?;
    Ok(e)
}

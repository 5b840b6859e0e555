//! Problem configuration: a TOML document with the sections `constants`,
//! `charts`, `transitions`, `cover`, `numerics`, `flags` and `verify`.
//! See `docs/config.md` for the schema.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use globvar_core::atlas::{Atlas, AtlasError, Chart, Interval, Piece, TransitionMap};
use globvar_core::cohomology::{Cell, CohomologyError, CoveredSurface, PoincareOptions, SolverOptions};
use globvar_core::expr::{parse_with, Expression, ParseError, Scope};
use globvar_core::varcheck::{CheckOptions, SourceForm, VarError};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{context}: {source}")]
    Parse { context: String, source: ParseError },
    #[error("{context}: bound `{text}` is not a constant expression")]
    Bound { context: String, text: String },
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("at least one chart is required")]
    NoCharts,
    #[error("atlas: {0}")]
    Atlas(#[from] AtlasError),
    #[error("cover: {0}")]
    Cover(#[from] CohomologyError),
    #[error("chart `{chart}`: {source}")]
    Source { chart: String, source: VarError },
    #[error("{0}")]
    Invalid(String),
}

/// Interval end: a number, or an expression in the named constants
/// (`"pi"`, `"2*pi"`, `"-inf"`).
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(String),
}

pub type BoxSpec = [[Bound; 2]; 2];

fn unbounded() -> BoxSpec {
    let b = || [Bound::Text("-inf".into()), Bound::Text("inf".into())];
    [b(), b()]
}

fn xy() -> [String; 2] {
    ["x".into(), "y".into()]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub name: String,
    /// Coordinate names used in this chart's expressions; they stand for the
    /// canonical `x`, `y` (and `<name>d`, `<name>dd` for derivatives).
    #[serde(default = "xy")]
    pub coords: [String; 2],
    #[serde(default = "unbounded")]
    pub domain: BoxSpec,
    /// ε_x and ε_y in this chart.
    pub eps: [String; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    /// Expressions in the source chart's coordinates, all > 0 where the
    /// piece applies.
    #[serde(default)]
    pub guards: Vec<String>,
    /// Target coordinates as expressions in the source chart's coordinates.
    pub map: [String; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub from: String,
    pub to: String,
    /// Defaults to the source chart's domain.
    #[serde(default)]
    pub overlap: Option<BoxSpec>,
    pub pieces: Vec<PieceConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub chart: String,
    pub x: [Bound; 2],
    pub y: [Bound; 2],
    #[serde(default)]
    pub bump_scale: Option<f64>,
    /// Index of K(j); defaults to the next cell.
    #[serde(default)]
    pub next: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    pub cells: Vec<CellConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub tol_symbolic: f64,
    pub tol_quadrature: f64,
    pub tol_cohomology: f64,
    pub tol_obstruction: f64,
    pub tol_global: f64,
    pub samples: usize,
    /// Points per chart for E(λ) = ε on the cohomology path.
    pub el_samples: usize,
    pub seed: u64,
    pub quadrature_panels: usize,
    pub dense_panels: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            tol_symbolic: 1e-9,
            tol_quadrature: 1e-6,
            tol_cohomology: 1e-4,
            tol_obstruction: 1e-6,
            tol_global: 1e-8,
            samples: 200,
            el_samples: 20,
            seed: 42,
            quadrature_panels: 16,
            dense_panels: 16,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Flags {
    pub time_independent: bool,
    pub orientable: bool,
    pub compact: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags { time_independent: true, orientable: true, compact: false }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// One Lagrangian per chart, or a single one used in every chart.
    pub lagrangian: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub charts: Vec<ChartConfig>,
    #[serde(default)]
    pub transitions: Vec<TransitionConfig>,
    #[serde(default)]
    pub cover: Option<CoverConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<ProblemConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ProblemConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        ProblemConfig::from_toml(&text)
    }
}

/// One chart with everything parsed.
#[derive(Clone, Debug)]
pub struct LoadedChart {
    pub name: String,
    pub coords: [String; 2],
    pub domain: [Interval; 2],
    pub scope: Scope,
    pub source: SourceForm,
}

impl LoadedChart {
    pub fn parse(&self, text: &str, context: &str) -> Result<Expression, ConfigError> {
        parse_with(text, &self.scope).map_err(|source| ConfigError::Parse { context: context.to_string(), source })
    }

    /// Rename canonical jet names back to this chart's coordinates.
    pub fn display(&self, e: &Expression) -> String {
        let mut map = BTreeMap::new();
        for (canon, name) in [("x", &self.coords[0]), ("y", &self.coords[1])] {
            for suffix in ["", "d", "dd"] {
                map.insert(format!("{canon}{suffix}"), format!("{name}{suffix}"));
            }
        }
        e.rename(&map).to_string()
    }

    /// Check options sampling this chart's box.
    pub fn check_options(&self, numerics: &Numerics, flags: &Flags) -> CheckOptions {
        CheckOptions {
            samples: numerics.samples,
            seed: numerics.seed,
            tol: numerics.tol_symbolic,
            domain: self.domain,
            allow_time_dependence: !flags.time_independent,
        }
    }
}

/// Validated problem: parsed charts, atlas and optional cover.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub charts: Vec<LoadedChart>,
    pub atlas: Atlas,
    pub cover: Option<Arc<CoveredSurface>>,
    pub numerics: Numerics,
    pub flags: Flags,
    pub verify: Vec<String>,
}

fn chart_scope(coords: &[String; 2], constants: &BTreeMap<String, f64>) -> Scope {
    let mut s = Scope::standard();
    for (canon, name) in [("x", &coords[0]), ("y", &coords[1])] {
        for suffix in ["", "d", "dd"] {
            if name != canon {
                s = s.with_rename(&format!("{name}{suffix}"), &format!("{canon}{suffix}"));
            }
        }
    }
    for (k, v) in constants {
        s = s.with_constant(k, *v);
    }
    s
}

fn check_vars(e: &Expression, allowed: &[&str], context: &str) -> Result<(), ConfigError> {
    match e.free_vars().into_iter().find(|v| !allowed.contains(&v.as_str())) {
        Some(v) => Err(ConfigError::Invalid(format!("{context}: unknown variable `{v}`"))),
        None => Ok(()),
    }
}

/// Rejects free variables other than t and the jet coordinates up to order 2.
pub fn check_jet_vars(e: &Expression, context: &str) -> Result<(), ConfigError> {
    check_vars(e, &["t", "x", "y", "xd", "yd", "xdd", "ydd"], context)
}

fn constant_scope(constants: &BTreeMap<String, f64>) -> Scope {
    constants.iter().fold(Scope::standard(), |s, (k, v)| s.with_constant(k, *v))
}

fn bound(b: &Bound, scope: &Scope, context: &str) -> Result<f64, ConfigError> {
    match b {
        Bound::Number(v) => Ok(*v),
        Bound::Text(t) => match t.trim() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            text => {
                let e = parse_with(text, scope)
                    .map_err(|source| ConfigError::Parse { context: context.to_string(), source })?;
                e.evaluate(&globvar_core::expr::Binding::new())
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| ConfigError::Bound { context: context.to_string(), text: text.to_string() })
            }
        },
    }
}

fn interval(spec: &[Bound; 2], scope: &Scope, context: &str) -> Result<Interval, ConfigError> {
    Ok(Interval::new(bound(&spec[0], scope, context)?, bound(&spec[1], scope, context)?))
}

fn boxed(spec: &BoxSpec, scope: &Scope, context: &str) -> Result<[Interval; 2], ConfigError> {
    Ok([interval(&spec[0], scope, context)?, interval(&spec[1], scope, context)?])
}

impl Problem {
    pub fn from_config(config: &ProblemConfig) -> Result<Problem, ConfigError> {
        if config.charts.is_empty() {
            return Err(ConfigError::NoCharts);
        }
        let constants = constant_scope(&config.constants);
        let mut charts = Vec::new();
        let mut atlas_charts = Vec::new();
        for c in &config.charts {
            let context = format!("chart `{}`", c.name);
            let domain = boxed(&c.domain, &constants, &context)?;
            let [u, v] = &c.coords;
            atlas_charts.push(Chart::new(&c.name, [u.as_str(), v.as_str()], domain)?);
            let scope = chart_scope(&c.coords, &config.constants);
            let parse = |text: &str, which: &str| {
                parse_with(text, &scope)
                    .map_err(|source| ConfigError::Parse { context: format!("{context} {which}"), source })
            };
            let (ex, ey) = (parse(&c.eps[0], "eps_x")?, parse(&c.eps[1], "eps_y")?);
            check_jet_vars(&ex, &context)?;
            check_jet_vars(&ey, &context)?;
            let source = SourceForm::new(ex, ey, config.flags.time_independent)
                .map_err(|source| ConfigError::Source { chart: c.name.clone(), source })?;
            charts.push(LoadedChart { name: c.name.clone(), coords: c.coords.clone(), domain, scope, source });
        }
        let index = |name: &str| {
            charts.iter().position(|c| c.name == name).ok_or_else(|| ConfigError::UnknownChart(name.to_string()))
        };
        let mut transitions = Vec::new();
        for t in &config.transitions {
            let from = &charts[index(&t.from)?];
            index(&t.to)?;
            let context = format!("transition {} -> {}", t.from, t.to);
            let overlap = match &t.overlap {
                Some(spec) => boxed(spec, &constants, &context)?,
                None => from.domain,
            };
            let mut pieces = Vec::new();
            for p in &t.pieces {
                let guards = p.guards.iter().map(|g| from.parse(g, &context)).collect::<Result<Vec<_>, _>>()?;
                let map = [from.parse(&p.map[0], &context)?, from.parse(&p.map[1], &context)?];
                for e in guards.iter().chain(&map) {
                    check_vars(e, &["x", "y"], &context)?;
                }
                pieces.push(Piece::new(guards, map));
            }
            transitions.push(TransitionMap::new(&t.from, &t.to, pieces, overlap));
        }
        let atlas = Atlas::new(atlas_charts, transitions, config.flags.orientable, config.flags.compact)?;
        let cover = match &config.cover {
            None => None,
            Some(cover) => {
                let mut cells = Vec::new();
                let mut successor = Vec::new();
                let n = cover.cells.len();
                for (j, c) in cover.cells.iter().enumerate() {
                    let context = format!("cover cell {j}");
                    let mut cell = Cell::new(
                        index(&c.chart)?,
                        [interval(&c.x, &constants, &context)?, interval(&c.y, &constants, &context)?],
                    );
                    if let Some(s) = c.bump_scale {
                        cell.bump_scale = s;
                    }
                    cells.push(cell);
                    successor.push(if j + 1 == n { c.next } else { Some(c.next.unwrap_or(j + 1)) });
                }
                Some(Arc::new(CoveredSurface::new(atlas.clone(), cells, Some(successor))?))
            }
        };
        let verify = config.verify.as_ref().map(|v| v.lagrangian.clone()).unwrap_or_default();
        if !(verify.is_empty() || verify.len() == 1 || verify.len() == charts.len()) {
            return Err(ConfigError::Invalid(format!(
                "verify.lagrangian needs 1 or {} entries, got {}",
                charts.len(),
                verify.len()
            )));
        }
        let n = &config.numerics;
        if n.samples == 0 || n.quadrature_panels == 0 || n.dense_panels == 0 {
            return Err(ConfigError::Invalid("sample and panel counts must be positive".into()));
        }
        Ok(Problem {
            name: config.name.clone(),
            charts,
            atlas,
            cover,
            numerics: config.numerics.clone(),
            flags: config.flags.clone(),
            verify,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            poincare: PoincareOptions {
                panels: self.numerics.quadrature_panels,
                dense_panels: self.numerics.dense_panels,
                ..PoincareOptions::default()
            },
            obstruction_tol: self.numerics.tol_obstruction,
        }
    }
}

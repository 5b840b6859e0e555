//! JSON report. Field order is fixed by the struct definitions and every map
//! is a `Vec`, so identical runs serialize byte-identically. Non-finite
//! numbers serialize as `null`; the verdict of an entry holding one is
//! always `false`. See `docs/report.md`.

use globvar_core::jet::JetPoint;
use globvar_core::varcheck::{Condition, HelmholtzReport};
use serde::Serialize;

use crate::config::Numerics;

/// A jet point; coordinates above the point's order are omitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xdd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ydd: Option<f64>,
}

impl From<&JetPoint> for Point {
    fn from(p: &JetPoint) -> Point {
        let v = p.values();
        let order = p.order();
        let at = |k: usize, min: u8| (order >= min).then_some(v[k]);
        Point { t: v[0], x: v[1], y: v[2], xd: at(3, 1), yd: at(4, 1), xdd: at(5, 2), ydd: at(6, 2) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub name: String,
    pub max_residual: f64,
    pub tol: f64,
    pub worst_point: Option<Point>,
    pub passed: bool,
}

impl Residual {
    pub fn new(name: impl Into<String>, max_residual: f64, tol: f64, worst_point: Option<&JetPoint>) -> Residual {
        Residual {
            name: name.into(),
            max_residual,
            tol,
            worst_point: worst_point.map(Point::from),
            passed: max_residual < tol,
        }
    }

    fn from_condition(c: &Condition, tol: f64) -> Residual {
        Residual {
            name: c.name.to_string(),
            max_residual: c.max_residual,
            tol,
            worst_point: c.worst_point.as_ref().map(Point::from),
            passed: c.passed && c.max_residual.is_finite(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartHelmholtz {
    pub chart: String,
    pub passed: bool,
    pub conditions: Vec<Residual>,
    pub raw_conditions: Vec<Residual>,
    pub higher_order_dependence: f64,
    pub warnings: Vec<String>,
}

impl ChartHelmholtz {
    pub fn new(chart: &str, report: &HelmholtzReport, tol: f64) -> ChartHelmholtz {
        let conditions: Vec<Residual> = report.conditions.iter().map(|c| Residual::from_condition(c, tol)).collect();
        let raw_conditions: Vec<Residual> =
            report.raw_conditions.iter().map(|c| Residual::from_condition(c, tol)).collect();
        let passed = report.passed && conditions.iter().chain(&raw_conditions).all(|c| c.passed);
        ChartHelmholtz {
            chart: chart.to_string(),
            passed,
            conditions,
            raw_conditions,
            higher_order_dependence: report.higher_order_dependence,
            warnings: report.warnings.clone(),
        }
    }

    /// Names of the failed conditions.
    pub fn failed(&self) -> Vec<&str> {
        self.conditions.iter().chain(&self.raw_conditions).filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Overlap {
    pub from: String,
    pub to: String,
    pub samples: usize,
    pub max_mismatch: f64,
    pub worst_point: Option<Point>,
}

/// Whether one family of forms agrees on every overlap.
#[derive(Clone, Debug, Serialize)]
pub struct Globality {
    pub form: String,
    pub max_mismatch: f64,
    pub tol: f64,
    pub passed: bool,
    pub overlaps: Vec<Overlap>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartIdentities {
    pub chart: String,
    pub identities: Vec<Residual>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Omega {
    pub chart: String,
    /// Coefficient of dx∧dy, in the chart's coordinates.
    pub coefficient: String,
    pub max_abs: f64,
    pub samples: usize,
    pub zero: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Path {
    Simple,
    Cohomology,
    VainbergTontiLocal,
}

impl Path {
    pub fn name(self) -> &'static str {
        match self {
            Path::Simple => "simple",
            Path::Cohomology => "cohomology",
            Path::VainbergTontiLocal => "vainberg-tonti-local",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Obstruction {
    pub c_last: f64,
    pub tol: f64,
    pub diagnosis: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cohomology {
    pub cells: usize,
    /// Obstruction masses c_j, in cover order.
    pub masses: Vec<f64>,
    pub c_last: f64,
    /// Largest |dη − ω| over sampled chart points.
    pub max_residual: Option<f64>,
    pub tol: f64,
    pub obstruction: Option<Obstruction>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartLagrangian {
    pub chart: String,
    /// Symbolic part in the chart's coordinates.
    pub lagrangian: String,
    /// Whether a numerical η·(ẋ, ẏ) term is added.
    pub numeric_eta: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub chart: String,
    pub point: Point,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub command: String,
    pub passed: bool,
    pub numerics: Numerics,
    pub helmholtz: Vec<ChartHelmholtz>,
    pub globality: Vec<Globality>,
    pub identities: Vec<ChartIdentities>,
    pub omega: Vec<Omega>,
    pub path: Option<Path>,
    pub cohomology: Option<Cohomology>,
    pub lagrangians: Vec<ChartLagrangian>,
    /// max |E(λ) − ε| for `build`, or for the supplied Lagrangian in
    /// `verify`, one entry per chart.
    pub verification: Vec<Residual>,
    /// λ at a few sampled first-order points per chart.
    pub samples: Vec<Sample>,
    pub errors: Vec<String>,
}

impl Report {
    pub fn new(name: &str, command: &str, numerics: &Numerics) -> Report {
        Report {
            name: name.to_string(),
            command: command.to_string(),
            passed: false,
            numerics: numerics.clone(),
            helmholtz: Vec::new(),
            globality: Vec::new(),
            identities: Vec::new(),
            omega: Vec::new(),
            path: None,
            cohomology: None,
            lagrangians: Vec::new(),
            verification: Vec::new(),
            samples: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Sets `passed` from the individual verdicts.
    pub fn finish(&mut self) {
        self.passed = self.errors.is_empty()
            && self.helmholtz.iter().all(|h| h.passed)
            && self.globality.iter().all(|g| g.passed)
            && self.identities.iter().flat_map(|c| &c.identities).all(|r| r.passed)
            && self.cohomology.as_ref().is_none_or(|c| c.passed)
            && self.verification.iter().all(|r| r.passed);
    }

    /// One line naming the first failure, if any.
    pub fn failure(&self) -> Option<String> {
        if self.passed {
            return None;
        }
        if let Some(e) = self.errors.first() {
            return Some(e.clone());
        }
        if let Some(h) = self.helmholtz.iter().find(|h| !h.passed) {
            return Some(format!("Helmholtz conditions fail in chart `{}`: {}", h.chart, h.failed().join("; ")));
        }
        if let Some(g) = self.globality.iter().find(|g| !g.passed) {
            return Some(format!("{} is not global (mismatch {:e})", g.form, g.max_mismatch));
        }
        if let Some(o) = self.cohomology.as_ref().and_then(|c| c.obstruction.as_ref()) {
            return Some(format!("obstruction: c_last = {:e} ({})", o.c_last, o.diagnosis));
        }
        Some("a verdict failed".into())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

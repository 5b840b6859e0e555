//! Affine decomposition of a source form and the Helmholtz conditions of
//! local variationality.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::atlas::Interval;
use crate::expr::{EvalError, Expression};
use crate::jet::{jet_order, max_jet_var, total_derivative, JetPoint, JetVar};
use crate::sample::{worst_case, JetSampler};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VarError {
    #[error("source form depends on t; the time-independent setting is required (relax with the time-dependence flag)")]
    TimeDependent,
    #[error("source form contains `{0}`; only second-order systems are supported")]
    OrderTooHigh(&'static str),
    #[error("source form is not affine in the accelerations (second partial {residual:e} at {point:?})")]
    NotAffine { residual: f64, point: JetPoint },
    #[error("B_xy differs from B_yx by {residual:e} at {point:?}")]
    AsymmetricB { residual: f64, point: JetPoint },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// The pair (ε_x, ε_y) of a source form (ε_x ω^x + ε_y ω^y) ∧ dt in one
/// chart, in canonical jet variables.
#[derive(Clone, Debug)]
pub struct SourceForm {
    pub eps: [Expression; 2],
    pub time_independent: bool,
}

impl SourceForm {
    /// Validates the jet order and, when `time_independent`, the absence of t.
    pub fn new(eps_x: Expression, eps_y: Expression, time_independent: bool) -> Result<SourceForm, VarError> {
        for e in [&eps_x, &eps_y] {
            if let Some(v) = max_jet_var(e).filter(|v| v.order() > 2) {
                return Err(VarError::OrderTooHigh(v.name()));
            }
            if time_independent && e.depends_on("t") {
                return Err(VarError::TimeDependent);
            }
        }
        Ok(SourceForm { eps: [eps_x, eps_y], time_independent })
    }

    pub fn depends_on_time(&self) -> bool {
        self.eps.iter().any(|e| e.depends_on("t"))
    }

    /// The source form as the coordinate 2-form −ε_x dt∧dx − ε_y dt∧dy.
    pub fn to_form(&self) -> crate::jet::DifferentialForm {
        use crate::jet::{Coord, DifferentialForm};
        DifferentialForm::from_terms(
            2,
            &[(&[Coord::X, Coord::T], self.eps[0].clone()), (&[Coord::Y, Coord::T], self.eps[1].clone())],
        )
    }
}

/// ε_x = A_x + B_xx ẍ + B_xy ÿ, ε_y = A_y + B_xy ẍ + B_yy ÿ.
#[derive(Clone, Debug)]
pub struct ABDecomposition {
    pub a: [Expression; 2],
    pub b_xx: Expression,
    pub b_xy: Expression,
    pub b_yy: Expression,
}

impl ABDecomposition {
    pub fn reconstruct(&self) -> [Expression; 2] {
        let (xdd, ydd) = (Expression::var("xdd"), Expression::var("ydd"));
        [
            self.a[0].add(&self.b_xx.mul(&xdd)).add(&self.b_xy.mul(&ydd)),
            self.a[1].add(&self.b_xy.mul(&xdd)).add(&self.b_yy.mul(&ydd)),
        ]
    }

    /// F = ½(∂A_x/∂ẏ − ∂A_y/∂ẋ), the ω^x∧ω^y coefficient of α_ε.
    pub fn gyroscopic(&self) -> Expression {
        self.a[0]
            .differentiate("yd")
            .sub(&self.a[1].differentiate("xd"))
            .mul(&Expression::constant(0.5))
    }
}

/// Sampling controls shared by the checks in this crate.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub domain: [Interval; 2],
    pub allow_time_dependence: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        let unit = Interval::new(-2.0, 2.0);
        CheckOptions { samples: 200, seed: 42, tol: 1e-9, domain: [unit, unit], allow_time_dependence: false }
    }
}

impl CheckOptions {
    pub fn sampler(&self) -> JetSampler {
        JetSampler::new(self.seed).in_box(self.domain)
    }
}

/// Samples and tolerance of the affinity and symmetry checks in [`decompose`].
pub const DECOMPOSE_SAMPLES: usize = 50;
pub const DECOMPOSE_TOL: f64 = 1e-12;

struct RawSplit {
    a: [Expression; 2],
    b_xx: Expression,
    b_xy: Expression,
    b_yx: Expression,
    b_yy: Expression,
}

fn at_zero_acceleration(e: &Expression) -> Expression {
    e.substitute("xdd", &Expression::zero()).substitute("ydd", &Expression::zero())
}

fn raw_split(eps: &SourceForm) -> RawSplit {
    let [ex, ey] = &eps.eps;
    RawSplit {
        a: [at_zero_acceleration(ex), at_zero_acceleration(ey)],
        b_xx: at_zero_acceleration(&ex.differentiate("xdd")),
        b_xy: at_zero_acceleration(&ex.differentiate("ydd")),
        b_yx: at_zero_acceleration(&ey.differentiate("xdd")),
        b_yy: at_zero_acceleration(&ey.differentiate("ydd")),
    }
}

fn affinity_residuals(eps: &SourceForm) -> Vec<Expression> {
    let mut out = Vec::new();
    for e in &eps.eps {
        for (u, v) in [("xdd", "xdd"), ("xdd", "ydd"), ("ydd", "ydd")] {
            out.push(e.differentiate(u).differentiate(v));
        }
    }
    out
}

/// Affine decomposition, with affinity and B-symmetry verified at
/// [`DECOMPOSE_SAMPLES`] points.
pub fn decompose(eps: &SourceForm, opts: &CheckOptions) -> Result<ABDecomposition, VarError> {
    let mut sampler = JetSampler::new(opts.seed).in_box(opts.domain);
    let points = sampler.points(2, DECOMPOSE_SAMPLES);
    let (residual, worst) = worst_case(&affinity_residuals(eps), &points)?;
    if !(residual < DECOMPOSE_TOL) {
        return Err(VarError::NotAffine { residual, point: worst.unwrap_or(points[0]) });
    }
    let raw = raw_split(eps);
    let (residual, worst) = worst_case(&[raw.b_xy.sub(&raw.b_yx)], &points)?;
    if !(residual < DECOMPOSE_TOL) {
        return Err(VarError::AsymmetricB { residual, point: worst.unwrap_or(points[0]) });
    }
    Ok(ABDecomposition { a: raw.a, b_xx: raw.b_xx, b_xy: raw.b_xy, b_yy: raw.b_yy })
}

/// One sampled identity.
#[derive(Clone, Debug)]
pub struct Condition {
    pub name: &'static str,
    pub max_residual: f64,
    pub worst_point: Option<JetPoint>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct HelmholtzReport {
    /// Affinity in (ẍ, ÿ) followed by the seven identities on A and B.
    pub conditions: Vec<Condition>,
    /// The five identities on (ε_x, ε_y) directly, with formal third-order
    /// coordinates.
    pub raw_conditions: Vec<Condition>,
    /// Largest change of a raw residual when the third- and fourth-order
    /// coordinates are resampled; zero when they cancel.
    pub higher_order_dependence: f64,
    pub passed: bool,
    pub warnings: Vec<String>,
}

impl HelmholtzReport {
    pub fn failed(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().chain(&self.raw_conditions).filter(|c| !c.passed)
    }
}

/// Names of the identities in [`HelmholtzReport::conditions`], in order.
pub const AB_CONDITIONS: [&str; 8] = [
    "affine in accelerations",
    "B_xy = B_yx",
    "dB_xx/dyd = dB_xy/dxd",
    "dB_yy/dxd = dB_xy/dyd",
    "dA_x/dxd - (dB_xx/dx xd + dB_xx/dy yd) = 0",
    "dA_y/dyd - (dB_yy/dx xd + dB_yy/dy yd) = 0",
    "dA_x/dyd + dA_y/dxd - 2(dB_xy/dx xd + dB_xy/dy yd) = 0",
    "dA_x/dy - dA_y/dx - (1/2)(d/dx(dA_x/dyd - dA_y/dxd) xd + d/dy(dA_x/dyd - dA_y/dxd) yd) = 0",
];

/// Names of the identities in [`HelmholtzReport::raw_conditions`].
pub const RAW_CONDITIONS: [&str; 5] = [
    "de_x/dydd - de_y/dxdd = 0",
    "de_x/dxd - d/dt de_x/dxdd = 0",
    "de_y/dyd - d/dt de_y/dydd = 0",
    "de_x/dyd + de_y/dxd - d/dt(de_x/dydd + de_y/dxdd) = 0",
    "de_x/dy - de_y/dx - (1/2) d/dt(de_x/dyd - de_y/dxd) = 0",
];

fn directional(f: &Expression) -> Expression {
    // ∂f/∂x ẋ + ∂f/∂y ẏ
    f.differentiate("x")
        .mul(&Expression::var("xd"))
        .add(&f.differentiate("y").mul(&Expression::var("yd")))
}

fn ab_identities(r: &RawSplit) -> [Expression; 7] {
    let [ax, ay] = &r.a;
    let two = Expression::constant(2.0);
    let half = Expression::constant(0.5);
    let curl_v = ax.differentiate("yd").sub(&ay.differentiate("xd"));
    [
        r.b_xy.sub(&r.b_yx),
        r.b_xx.differentiate("yd").sub(&r.b_xy.differentiate("xd")),
        r.b_yy.differentiate("xd").sub(&r.b_xy.differentiate("yd")),
        ax.differentiate("xd").sub(&directional(&r.b_xx)),
        ay.differentiate("yd").sub(&directional(&r.b_yy)),
        ax.differentiate("yd").add(&ay.differentiate("xd")).sub(&two.mul(&directional(&r.b_xy))),
        ax.differentiate("y").sub(&ay.differentiate("x")).sub(&half.mul(&directional(&curl_v))),
    ]
}

fn raw_identities(eps: &SourceForm) -> Result<[Expression; 5], crate::jet::JetError> {
    let [ex, ey] = &eps.eps;
    let d = |e: &Expression, v: &str| e.differentiate(v);
    let dt = total_derivative;
    Ok([
        d(ex, "ydd").sub(&d(ey, "xdd")),
        d(ex, "xd").sub(&dt(&d(ex, "xdd"))?),
        d(ey, "yd").sub(&dt(&d(ey, "ydd"))?),
        d(ex, "yd").add(&d(ey, "xd")).sub(&dt(&d(ex, "ydd").add(&d(ey, "xdd")))?),
        d(ex, "y")
            .sub(&d(ey, "x"))
            .sub(&Expression::constant(0.5).mul(&dt(&d(ex, "yd").sub(&d(ey, "xd")))?)),
    ])
}

fn condition(name: &'static str, e: &Expression, points: &[JetPoint], tol: f64) -> Result<Condition, VarError> {
    let (max_residual, worst_point) = worst_case(core::slice::from_ref(e), points)?;
    Ok(Condition { name, max_residual, worst_point, passed: max_residual < tol })
}

/// Number of points of the raw cross-check.
pub const RAW_CHECK_POINTS: usize = 10;

/// Evaluate the Helmholtz conditions at `opts.samples` points in the chart.
pub fn helmholtz(eps: &SourceForm, opts: &CheckOptions) -> Result<HelmholtzReport, VarError> {
    let mut warnings = Vec::new();
    if eps.depends_on_time() {
        if !opts.allow_time_dependence {
            return Err(VarError::TimeDependent);
        }
        warnings.push(String::from(
            "source form depends on t: the Helmholtz identities are applied as stated, \
             outside the time-independent setting they are derived in",
        ));
    }
    for e in &eps.eps {
        if jet_order(e) > 2 {
            return Err(VarError::OrderTooHigh(max_jet_var(e).map_or("?", JetVar::name)));
        }
    }
    let mut sampler = opts.sampler();
    let second = sampler.points(2, DECOMPOSE_SAMPLES.max(opts.samples));
    let first: Vec<JetPoint> = second.iter().take(opts.samples).map(|p| p.with_order(1)).collect();

    let mut conditions = Vec::new();
    let (aff, worst) = worst_case(&affinity_residuals(eps), &second)?;
    conditions.push(Condition { name: AB_CONDITIONS[0], max_residual: aff, worst_point: worst, passed: aff < opts.tol });

    let raw = raw_split(eps);
    for (name, e) in AB_CONDITIONS[1..].iter().zip(ab_identities(&raw).iter()) {
        conditions.push(condition(name, e, &first, opts.tol)?);
    }

    let identities = raw_identities(eps).map_err(|_| VarError::OrderTooHigh("xddd"))?;
    let fourth: Vec<JetPoint> = sampler.points(4, RAW_CHECK_POINTS);
    let mut raw_conditions = Vec::new();
    for (name, e) in RAW_CONDITIONS.iter().zip(identities.iter()) {
        raw_conditions.push(condition(name, e, &fourth, opts.tol)?);
    }
    let mut higher_order_dependence: f64 = 0.0;
    for p in &fourth {
        let mut q = *p;
        for v in [JetVar::X3, JetVar::Y3, JetVar::X4, JetVar::Y4] {
            let fresh = sampler.point(4);
            q = q.with(v, fresh.get(v).expect("order 4 point"));
        }
        for e in &identities {
            let diff = e.evaluate(p)? - e.evaluate(&q)?;
            higher_order_dependence = crate::num::max_nan(higher_order_dependence, crate::num::abs(diff));
        }
    }
    if !(higher_order_dependence < opts.tol) {
        warnings.push(format!(
            "raw Helmholtz expressions depend on third/fourth-order coordinates (max change {higher_order_dependence:e})"
        ));
    }
    let passed = conditions.iter().chain(&raw_conditions).all(|c| c.passed);
    Ok(HelmholtzReport { conditions, raw_conditions, higher_order_dependence, passed, warnings })
}

#[cfg(test)]
mod tests;

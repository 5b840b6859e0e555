//! Euler–Lagrange operator, Cartan form, Vainberg–Tonti Lagrangian and
//! equivalence of Lagrangians.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{EvalError, Expression};
use crate::jet::{total_derivative, ContactSplit, DifferentialForm, JetError, JetPoint, JetVar, Lagrangian};
use crate::sample::worst_case;
use crate::varcheck::{helmholtz, CheckOptions, SourceForm, VarError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LagrangeError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Var(#[from] VarError),
    #[error("Euler–Lagrange expressions depend on third/fourth-order coordinates (change {residual:e})")]
    HigherOrderResidue { residual: f64 },
    #[error("operation needs a first-order Lagrangian")]
    NotFirstOrder,
    #[error("source form fails the Helmholtz conditions")]
    NotVariational,
    #[error("chart box is not star-shaped about the origin (coordinate {0})")]
    NotStarShaped(&'static str),
    #[error("Vainberg–Tonti reduction left a dependence on accelerations ({residual:e})")]
    ReductionFailed { residual: f64 },
}

/// Relative tolerance for the independence of higher jet coordinates.
pub const HIGHER_ORDER_TOL: f64 = 1e-10;

const HIGHER: [JetVar; 4] = [JetVar::X3, JetVar::Y3, JetVar::X4, JetVar::Y4];

/// (E_x, E_y) with E = ∂𝓛/∂q − d_t ∂𝓛/∂q̇ + d_t² ∂𝓛/∂q̈, before any
/// simplification of higher coordinates.
pub fn euler_lagrange_formal(lagrangian: &Lagrangian) -> Result<[Expression; 2], JetError> {
    let l = lagrangian.density();
    let mut out = Vec::with_capacity(2);
    for (q, qd, qdd) in [("x", "xd", "xdd"), ("y", "yd", "ydd")] {
        let mut e = l.differentiate(q).sub(&total_derivative(&l.differentiate(qd))?);
        let acc = l.differentiate(qdd);
        if !acc.is_zero() {
            e = e.add(&total_derivative(&total_derivative(&acc)?)?);
        }
        out.push(e);
    }
    Ok([out[0].clone(), out[1].clone()])
}

/// Euler–Lagrange expressions as a source form. For second-order 𝓛 the
/// independence of the third/fourth-order coordinates is verified at sampled
/// points before they are set to zero.
pub fn euler_lagrange(lagrangian: &Lagrangian, opts: &CheckOptions) -> Result<SourceForm, LagrangeError> {
    let [ex, ey] = euler_lagrange_formal(lagrangian)?;
    let (ex, ey) = if lagrangian.order() == 2 {
        let residual = higher_order_dependence(&[ex.clone(), ey.clone()], opts)?;
        if !(residual < HIGHER_ORDER_TOL) {
            return Err(LagrangeError::HigherOrderResidue { residual });
        }
        (drop_higher(&ex), drop_higher(&ey))
    } else {
        (ex, ey)
    };
    let time_independent = !ex.depends_on("t") && !ey.depends_on("t");
    Ok(SourceForm::new(ex, ey, time_independent)?)
}

fn drop_higher(e: &Expression) -> Expression {
    let zeros: BTreeMap<String, Expression> =
        HIGHER.iter().map(|v| (String::from(v.name()), Expression::zero())).collect();
    e.substitute_all(&zeros)
}

/// Largest relative change of the expressions when third/fourth-order
/// coordinates are resampled.
fn higher_order_dependence(exprs: &[Expression], opts: &CheckOptions) -> Result<f64, EvalError> {
    let mut sampler = opts.sampler();
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples.clamp(1, 50) {
        let p = sampler.point(4);
        let fresh = sampler.point(4);
        let mut q = p;
        for v in HIGHER {
            q = q.with(v, fresh.get(v).expect("order 4 point"));
        }
        for e in exprs {
            let (a, b) = (e.evaluate(&p)?, e.evaluate(&q)?);
            let scale = 1.0f64.max(crate::num::abs(a));
            worst = crate::num::max_nan(worst, crate::num::abs(a - b) / scale);
        }
    }
    Ok(worst)
}

/// Θ_λ = 𝓛dt + ∂𝓛/∂ẋ ω^x + ∂𝓛/∂ẏ ω^y in the coordinate basis.
pub fn cartan(lagrangian: &Lagrangian) -> Result<DifferentialForm, LagrangeError> {
    if lagrangian.order() != 1 {
        return Err(LagrangeError::NotFirstOrder);
    }
    let l = lagrangian.density();
    let split = ContactSplit {
        horizontal: l.clone(),
        contact: [l.differentiate("xd"), l.differentiate("yd"), Expression::zero(), Expression::zero()],
    };
    Ok(split.reassemble())
}

/// Output of [`vainberg_tonti`].
#[derive(Clone, Debug)]
pub struct VainbergTonti {
    /// 𝓛_T = x∫₀¹ε_x(s·)ds + y∫₀¹ε_y(s·)ds, affine in the accelerations.
    pub full: Lagrangian,
    /// G with ∂G/∂ẋ = ∂𝓛_T/∂ẍ and ∂G/∂ẏ = ∂𝓛_T/∂ÿ.
    pub potential: Expression,
    /// (𝓛_T − d_t G) restricted to first order.
    pub reduced: Lagrangian,
}

/// Scaled variables of the homotopy integrals.
const SCALED: [&str; 6] = ["x", "y", "xd", "yd", "xdd", "ydd"];

/// Placeholder bound variable used while building integrands.
const S: &str = "#0";

fn scale_vars(e: &Expression, vars: &[&str]) -> Expression {
    let s = Expression::var(S);
    let map: BTreeMap<String, Expression> =
        vars.iter().map(|v| (String::from(*v), s.mul(&Expression::var(v)))).collect();
    e.substitute_all(&map)
}

/// Vainberg–Tonti Lagrangian and its reduction to first order.
pub fn vainberg_tonti(eps: &SourceForm, opts: &CheckOptions) -> Result<VainbergTonti, LagrangeError> {
    for (i, name) in ["x", "y"].into_iter().enumerate() {
        let iv = opts.domain[i];
        if !(iv.lo < 0.0 && 0.0 < iv.hi) {
            return Err(LagrangeError::NotStarShaped(name));
        }
    }
    if !helmholtz(eps, opts)?.passed {
        return Err(LagrangeError::NotVariational);
    }
    let [ex, ey] = &eps.eps;
    let (x, y) = (Expression::var("x"), Expression::var("y"));
    let body = x.mul(&scale_vars(ex, &SCALED)).add(&y.mul(&scale_vars(ey, &SCALED)));
    let lt = Expression::integrate(&body, S, &Expression::zero(), &Expression::one());

    let zero_acc = |e: &Expression| e.substitute("xdd", &Expression::zero()).substitute("ydd", &Expression::zero());
    let p = zero_acc(&lt.differentiate("xdd"));
    let q = zero_acc(&lt.differentiate("ydd"));
    let g_body = scale_vars(&p, &["xd", "yd"])
        .mul(&Expression::var("xd"))
        .add(&scale_vars(&q, &["xd", "yd"]).mul(&Expression::var("yd")));
    let g = Expression::integrate(&g_body, S, &Expression::zero(), &Expression::one());

    let difference = lt.sub(&total_derivative(&g)?);
    let mut sampler = opts.sampler();
    let points = sampler.points(2, opts.samples.clamp(1, 50));
    let (residual, _) = worst_case(&[difference.differentiate("xdd"), difference.differentiate("ydd")], &points)?;
    if !(residual < opts.tol) {
        return Err(LagrangeError::ReductionFailed { residual });
    }
    Ok(VainbergTonti {
        full: Lagrangian::new(lt)?,
        potential: g,
        reduced: Lagrangian::new(zero_acc(&difference))?,
    })
}

/// Outcome of [`equivalent`].
#[derive(Clone, Debug)]
pub struct Equivalence {
    pub max_residual: f64,
    pub worst_point: Option<JetPoint>,
    pub passed: bool,
}

/// Whether two Lagrangians have the same Euler–Lagrange expressions at
/// `opts.samples` sampled second-jet points.
pub fn equivalent(a: &Lagrangian, b: &Lagrangian, opts: &CheckOptions) -> Result<Equivalence, LagrangeError> {
    let ea = euler_lagrange(a, opts)?;
    let eb = euler_lagrange(b, opts)?;
    let diff = [ea.eps[0].sub(&eb.eps[0]), ea.eps[1].sub(&eb.eps[1])];
    let points = opts.sampler().points(2, opts.samples);
    let (max_residual, worst_point) = worst_case(&diff, &points)?;
    Ok(Equivalence { max_residual, worst_point, passed: max_residual < opts.tol })
}

/// Euler–Lagrange expressions of a first-order Lagrange function given as a
/// callable, by central differences with one Richardson step:
/// E_q = ∂L/∂q − ∂²L/∂q̇∂t − Σ_r (ṙ ∂²L/∂q̇∂r + r̈ ∂²L/∂q̇∂ṙ).
pub fn euler_lagrange_numeric(
    f: &dyn Fn(&JetPoint) -> Result<f64, EvalError>,
    p: &JetPoint,
    h: f64,
) -> Result<[f64; 2], EvalError> {
    let base = p.with_order(1);
    let idx = |v: JetVar| v.index();
    let shift = |pt: &JetPoint, v: JetVar, d: f64| pt.with(v, pt.values()[idx(v)] + d);
    let first = |v: JetVar, h: f64| -> Result<f64, EvalError> {
        Ok((f(&shift(&base, v, h))? - f(&shift(&base, v, -h))?) / (2.0 * h))
    };
    let mixed = |u: JetVar, v: JetVar, h: f64| -> Result<f64, EvalError> {
        if u == v {
            let c = f(&base)?;
            return Ok((f(&shift(&base, u, h))? - 2.0 * c + f(&shift(&base, u, -h))?) / (h * h));
        }
        let pp = shift(&shift(&base, u, h), v, h);
        let pm = shift(&shift(&base, u, h), v, -h);
        let mp = shift(&shift(&base, u, -h), v, h);
        let mm = shift(&shift(&base, u, -h), v, -h);
        Ok((f(&pp)? - f(&pm)? - f(&mp)? + f(&mm)?) / (4.0 * h * h))
    };
    let richardson = |g: &dyn Fn(f64) -> Result<f64, EvalError>| -> Result<f64, EvalError> {
        let coarse = g(h)?;
        let fine = g(0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    };
    let v = p.values();
    let mut out = [0.0; 2];
    for (k, (q, qd)) in [(JetVar::X, JetVar::Xd), (JetVar::Y, JetVar::Yd)].into_iter().enumerate() {
        let mut e = richardson(&|h| first(q, h))?;
        e -= richardson(&|h| mixed(qd, JetVar::T, h))?;
        for (r, rd, rdd) in [(JetVar::X, JetVar::Xd, JetVar::Xdd), (JetVar::Y, JetVar::Yd, JetVar::Ydd)] {
            e -= v[idx(rd)] * richardson(&|h| mixed(qd, r, h))?;
            e -= v[idx(rdd)] * richardson(&|h| mixed(qd, rd, h))?;
        }
        out[k] = e;
    }
    Ok(out)
}

#[cfg(test)]
mod tests;

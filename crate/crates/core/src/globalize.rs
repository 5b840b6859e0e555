//! The forms μ₀, κ and ω of the global construction, and the global
//! Lagrangian h(μ₀ + κ) when ω vanishes.

use alloc::vec::Vec;

use crate::expr::{EvalError, Expression};
use crate::jet::{Coord, DifferentialForm, JetError, JetPoint, Lagrangian};
use crate::lagrange::{euler_lagrange, LagrangeError};
use crate::lepage::{decompose_alpha, lepage_equivalent, AlphaSplit, LepageEquivalent, LepageError};
use crate::sample::{form_worst_case, worst_case};
use crate::varcheck::{CheckOptions, SourceForm};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GlobalizeError {
    #[error(transparent)]
    Lepage(#[from] LepageError),
    #[error(transparent)]
    Lagrange(#[from] LagrangeError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{operator:?} expects a form without d{coord}")]
    FiberBase { operator: Fiber, coord: &'static str },
    #[error("ω does not vanish (|coefficient| = {coefficient:e} at {point:?}); the cohomology solver is needed")]
    NotSimple { coefficient: f64, point: JetPoint },
    #[error("{identity} fails with residual {residual:e}")]
    Identity { identity: &'static str, residual: f64 },
}

/// The two fiber homotopy operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fiber {
    /// Integration along ẋ from the section ẋ = 0.
    K1,
    /// Integration along ẏ from ẏ = 0, for forms already restricted to ẋ = 0.
    K2,
}

impl Fiber {
    fn coord(self) -> Coord {
        match self {
            Fiber::K1 => Coord::Xd,
            Fiber::K2 => Coord::Yd,
        }
    }
}

/// Kρ = ∫₀^{v} s_ν*(i_{∂/∂v} ρ) dν with v = ẋ (K₁) or ẏ (K₂). Coefficients
/// are integral expressions, evaluated by quadrature.
pub fn fiber_integrate(rho: &DifferentialForm, which: Fiber) -> Result<DifferentialForm, GlobalizeError> {
    let base = rho.base_coords();
    let forbidden: &[Coord] = match which {
        Fiber::K1 => &[Coord::T],
        Fiber::K2 => &[Coord::T, Coord::Xd],
    };
    if let Some(c) = forbidden.iter().find(|c| base.contains(c)) {
        return Err(GlobalizeError::FiberBase { operator: which, coord: c.name() });
    }
    if which == Fiber::K2 && rho.terms().any(|(_, e)| e.depends_on("xd")) {
        return Err(GlobalizeError::FiberBase { operator: which, coord: "xd" });
    }
    let v = which.coord();
    let name = v.jet_var().name();
    let contracted = rho.contract(v);
    let mut out = DifferentialForm::zero(rho.degree().saturating_sub(1));
    for (mask, coef) in contracted.terms() {
        // s_ν fixes v, so every term still containing dv pulls back to zero.
        if mask & v.bit() != 0 {
            continue;
        }
        let integral = Expression::integrate(coef, name, &Expression::zero(), &Expression::var(name));
        out = out.add(&DifferentialForm::term(&Coord::from_mask(mask), &integral));
    }
    Ok(out)
}

/// Pullback by the section ẋ = 0.
fn on_xdot_zero(rho: &DifferentialForm) -> DifferentialForm {
    let mut out = DifferentialForm::zero(rho.degree());
    for (mask, coef) in rho.terms() {
        if mask & Coord::Xd.bit() == 0 {
            out = out.add(&DifferentialForm::term(&Coord::from_mask(mask), &coef.substitute("xd", &Expression::zero())));
        }
    }
    out
}

/// μ₀ = −t α₀.
pub fn mu0(split: &AlphaSplit) -> DifferentialForm {
    split.alpha0.scale(&Expression::var("t").neg())
}

/// κ = K₁α′ + K₂(s*α′) with s the section ẋ = 0.
pub fn kappa(split: &AlphaSplit) -> Result<DifferentialForm, GlobalizeError> {
    let k1 = fiber_integrate(&split.alpha_prime, Fiber::K1)?;
    let k2 = fiber_integrate(&on_xdot_zero(&split.alpha_prime), Fiber::K2)?;
    Ok(k1.add(&k2))
}

/// ω = F(x, y, 0, 0) dx∧dy.
pub fn omega(le: &LepageEquivalent) -> DifferentialForm {
    let f = le.gyroscopic.substitute("xd", &Expression::zero()).substitute("yd", &Expression::zero());
    DifferentialForm::term(&[Coord::X, Coord::Y], &f)
}

/// Everything the global construction needs in one chart.
#[derive(Clone, Debug)]
pub struct Construction {
    pub lepage: LepageEquivalent,
    pub split: AlphaSplit,
    pub mu0: DifferentialForm,
    pub kappa: DifferentialForm,
    pub omega: DifferentialForm,
}

impl Construction {
    pub fn new(eps: &SourceForm, opts: &CheckOptions) -> Result<Construction, GlobalizeError> {
        let lepage = lepage_equivalent(eps, opts)?;
        let split = decompose_alpha(&lepage, opts)?;
        Ok(Construction {
            mu0: mu0(&split),
            kappa: kappa(&split)?,
            omega: omega(&lepage),
            lepage,
            split,
        })
    }

    pub fn omega_coefficient(&self) -> Expression {
        self.omega.coefficient(&[Coord::X, Coord::Y])
    }

    /// Largest |ω| over sampled positions (0 without sampling when ω folds
    /// to zero).
    pub fn omega_magnitude(&self, opts: &CheckOptions) -> Result<(f64, Option<JetPoint>), EvalError> {
        let w = self.omega_coefficient();
        if w.is_zero() {
            return Ok((0.0, None));
        }
        worst_case(&[w], &opts.sampler().points(0, opts.samples))
    }

    /// h(μ₀ + κ + η) for a closed-form correction η on the base.
    pub fn lagrangian(&self, eta: Option<&DifferentialForm>) -> Result<Lagrangian, JetError> {
        let mut form = self.mu0.add(&self.kappa);
        if let Some(eta) = eta {
            form = form.add(eta);
        }
        form.horizontalize()
    }

    /// Residuals of the identities dμ₀ = α₀∧dt, hμ₀ = −(ε_xẋ + ε_yẏ)t dt and
    /// α′ − ω = dκ at sampled points.
    pub fn identities(&self, opts: &CheckOptions) -> Result<Vec<(&'static str, f64)>, GlobalizeError> {
        let points1 = opts.sampler().points(1, opts.samples);
        let points2 = opts.sampler().points(2, opts.samples);
        let dt = DifferentialForm::dt();
        let d_mu0 = self.mu0.exterior_derivative()?.sub(&self.split.alpha0.wedge(&dt));
        let eps = &self.lepage.source.eps;
        let expected = eps[0]
            .mul(&Expression::var("xd"))
            .add(&eps[1].mul(&Expression::var("yd")))
            .mul(&Expression::var("t"))
            .neg();
        let h_mu0 = self.mu0.horizontalize()?.density().sub(&expected);
        let keq = self.split.alpha_prime.sub(&self.omega).sub(&self.kappa.exterior_derivative()?);
        Ok(alloc::vec![
            (IDENTITIES[0], form_worst_case(&d_mu0, &points1)?.0),
            (IDENTITIES[1], worst_case(&[h_mu0], &points2)?.0),
            (IDENTITIES[2], form_worst_case(&keq, &points1)?.0),
        ])
    }
}

pub const IDENTITIES: [&str; 3] = ["d(mu0) = alpha0 ^ dt", "h(mu0) = -(e_x xd + e_y yd) t dt", "alpha' - omega = d(kappa)"];

/// Tolerance for ω ≡ 0.
pub const OMEGA_TOL: f64 = 1e-12;
/// Tolerance of the check E(λ) = ε on the emitted Lagrangian.
pub const EULER_LAGRANGE_TOL: f64 = 1e-6;

/// Largest |E(λ) − ε| over sampled second-jet points.
pub fn euler_lagrange_residual(
    lambda: &Lagrangian,
    eps: &SourceForm,
    opts: &CheckOptions,
) -> Result<(f64, Option<JetPoint>), GlobalizeError> {
    let e = euler_lagrange(lambda, opts)?;
    let diff = [e.eps[0].sub(&eps.eps[0]), e.eps[1].sub(&eps.eps[1])];
    Ok(worst_case(&diff, &opts.sampler().points(2, opts.samples))?)
}

/// λ = h(μ₀ + κ) when ω vanishes in this chart, verified against ε.
pub fn simple_global_lagrangian(eps: &SourceForm, opts: &CheckOptions) -> Result<Lagrangian, GlobalizeError> {
    let c = Construction::new(eps, opts)?;
    let (coefficient, point) = c.omega_magnitude(opts)?;
    if !(coefficient < OMEGA_TOL) {
        return Err(GlobalizeError::NotSimple { coefficient, point: point.expect("sampled") });
    }
    let lambda = c.lagrangian(None)?;
    let (residual, _) = euler_lagrange_residual(&lambda, eps, opts)?;
    if !(residual < EULER_LAGRANGE_TOL) {
        return Err(GlobalizeError::Identity { identity: "E(lambda) = epsilon", residual });
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests;

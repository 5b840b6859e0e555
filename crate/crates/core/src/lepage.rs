//! Lepage equivalent α_ε of a locally variational source form and its
//! splitting α_ε = α₀∧dt + α′.

use crate::expr::{EvalError, Expression};
use crate::jet::{Coord, DifferentialForm, JetError};
use crate::sample::{form_worst_case, worst_case};
use crate::varcheck::{decompose, helmholtz, ABDecomposition, CheckOptions, SourceForm, VarError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LepageError {
    #[error(transparent)]
    Var(#[from] VarError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("source form fails the Helmholtz conditions ({0})")]
    NotVariational(&'static str),
    #[error("Lepage equivalent still depends on accelerations ({residual:e})")]
    AccelerationResidue { residual: f64 },
    #[error("the splitting into α₀ and α′ is only available for time-independent source forms")]
    TimeDependent,
    #[error("α₀∧dt + α′ differs from α_ε by {residual:e}")]
    Reconstruction { residual: f64 },
}

/// α_ε together with the data it was built from.
#[derive(Clone, Debug)]
pub struct LepageEquivalent {
    pub source: SourceForm,
    pub ab: ABDecomposition,
    /// F = ½(∂A_x/∂ẏ − ∂A_y/∂ẋ).
    pub gyroscopic: Expression,
    /// α_ε in the coordinate basis over (t, x, y, ẋ, ẏ).
    pub alpha: DifferentialForm,
}

/// Sampled tolerance for the cancellation of ẍ, ÿ in the coordinate basis.
pub const ACCELERATION_TOL: f64 = 1e-10;

fn zero_acceleration(f: &DifferentialForm) -> DifferentialForm {
    f.substitute("xdd", &Expression::zero()).substitute("ydd", &Expression::zero())
}

/// α_ε = (ε_xω^x + ε_yω^y)∧dt + Fω^x∧ω^y + B_xxω^x∧ω̇^x
///       + B_xy(ω^x∧ω̇^y + ω^y∧ω̇^x) + B_yyω^y∧ω̇^y.
pub fn lepage_equivalent(eps: &SourceForm, opts: &CheckOptions) -> Result<LepageEquivalent, LepageError> {
    let report = helmholtz(eps, opts)?;
    if let Some(c) = report.failed().next() {
        return Err(LepageError::NotVariational(c.name));
    }
    let ab = decompose(eps, opts)?;
    let f = ab.gyroscopic();
    let [ex, ey] = eps.eps.clone();
    use Coord::{Xd, Yd, T, X, Y};
    let contact = DifferentialForm::from_terms(
        2,
        &[
            (&[X, T], ex),
            (&[Y, T], ey),
            (&[X, Y], f.clone()),
            (&[X, Xd], ab.b_xx.clone()),
            (&[X, Yd], ab.b_xy.clone()),
            (&[Y, Xd], ab.b_xy.clone()),
            (&[Y, Yd], ab.b_yy.clone()),
        ],
    );
    let full = contact.from_contact_basis();
    let points = opts.sampler().points(2, opts.samples.clamp(1, 50));
    let partials: alloc::vec::Vec<Expression> = full
        .terms()
        .flat_map(|(_, e)| [e.differentiate("xdd"), e.differentiate("ydd")])
        .collect();
    let (residual, _) = worst_case(&partials, &points)?;
    if !(residual < ACCELERATION_TOL) {
        return Err(LepageError::AccelerationResidue { residual });
    }
    Ok(LepageEquivalent { source: eps.clone(), ab, gyroscopic: f, alpha: zero_acceleration(&full) })
}

/// The forms α₀ (degree 1) and α′ (degree 2) over (x, y, ẋ, ẏ).
#[derive(Clone, Debug)]
pub struct AlphaSplit {
    pub alpha0: DifferentialForm,
    pub alpha_prime: DifferentialForm,
}

impl AlphaSplit {
    pub fn reassemble(&self) -> DifferentialForm {
        self.alpha0.wedge(&DifferentialForm::dt()).add(&self.alpha_prime)
    }
}

/// Tolerance of the reconstruction α₀∧dt + α′ = α_ε.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

/// α₀ and α′ from their closed formulas, checked against α_ε.
pub fn decompose_alpha(le: &LepageEquivalent, opts: &CheckOptions) -> Result<AlphaSplit, LepageError> {
    if le.source.depends_on_time() {
        return Err(LepageError::TimeDependent);
    }
    let ab = &le.ab;
    let f = &le.gyroscopic;
    let (xd, yd) = (Expression::var("xd"), Expression::var("yd"));
    use Coord::{Xd, Yd, X, Y};
    let alpha0 = DifferentialForm::from_terms(
        1,
        &[
            (&[X], ab.a[0].sub(&f.mul(&yd))),
            (&[Y], ab.a[1].add(&f.mul(&xd))),
            (&[Xd], ab.b_xx.mul(&xd).add(&ab.b_xy.mul(&yd))),
            (&[Yd], ab.b_xy.mul(&xd).add(&ab.b_yy.mul(&yd))),
        ],
    );
    let alpha_prime = DifferentialForm::from_terms(
        2,
        &[
            (&[X, Y], f.clone()),
            (&[X, Xd], ab.b_xx.clone()),
            (&[Y, Xd], ab.b_xy.clone()),
            (&[X, Yd], ab.b_xy.clone()),
            (&[Y, Yd], ab.b_yy.clone()),
        ],
    );
    let split = AlphaSplit { alpha0, alpha_prime };
    let points = opts.sampler().points(1, opts.samples.clamp(1, 50));
    let (residual, _) = form_worst_case(&split.reassemble().sub(&le.alpha), &points)?;
    if !(residual < RECONSTRUCTION_TOL) {
        return Err(LepageError::Reconstruction { residual });
    }
    Ok(split)
}

#[cfg(test)]
mod tests;

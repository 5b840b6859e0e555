use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{JetError, JetVar, Lagrangian};
use crate::expr::{Env, EvalError, Expression};

/// Coordinates of J¹Y carrying differentials: (t, x, y, ẋ, ẏ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    T = 0,
    X = 1,
    Y = 2,
    Xd = 3,
    Yd = 4,
}

impl Coord {
    pub const ALL: [Coord; 5] = [Coord::T, Coord::X, Coord::Y, Coord::Xd, Coord::Yd];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn jet_var(self) -> JetVar {
        JetVar::ALL[self as usize]
    }

    pub fn name(self) -> &'static str {
        self.jet_var().name()
    }

    /// Mask and sign of dq^{c₀} ∧ dq^{c₁} ∧ … after sorting; sign 0 when a
    /// coordinate repeats.
    pub fn mask_of(coords: &[Coord]) -> (u8, f64) {
        let mut mask = 0u8;
        let mut sign = 1.0;
        for c in coords {
            if mask & c.bit() != 0 {
                return (0, 0.0);
            }
            if (mask & !(c.bit() - 1) & !c.bit()).count_ones() % 2 == 1 {
                sign = -sign;
            }
            mask |= c.bit();
        }
        (mask, sign)
    }

    pub fn from_mask(mask: u8) -> Vec<Coord> {
        Coord::ALL.into_iter().filter(|c| mask & c.bit() != 0).collect()
    }
}

/// Sign of e_a ∧ e_b relative to e_{a|b} (0 if they share a factor).
pub(crate) fn wedge_sign(a: u8, b: u8) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut swaps = 0;
    for i in 0..8 {
        if b & (1 << i) != 0 {
            swaps += (a >> (i + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Number of basis factors below `c` in `mask` (the sign exponent when `dc`
/// is moved to the front or contracted out).
fn below(mask: u8, c: Coord) -> u32 {
    (mask & (c.bit() - 1)).count_ones()
}

/// A differential form on J¹Y in the coordinate basis dt, dx, dy, dẋ, dẏ.
///
/// Keys are bitmasks of the basis factors in increasing coordinate order, so
/// antisymmetry is canonical. Coefficients are expressions in jet variables
/// (possibly of order 2 when the form lives on J² after pullback).
#[derive(Clone, Debug)]
pub struct DifferentialForm {
    degree: u8,
    coeffs: BTreeMap<u8, Expression>,
}

impl DifferentialForm {
    pub fn zero(degree: u8) -> DifferentialForm {
        DifferentialForm { degree, coeffs: BTreeMap::new() }
    }

    /// 0-form.
    pub fn function(f: &Expression) -> DifferentialForm {
        DifferentialForm::zero(0).with_mask(0, f.clone())
    }

    pub fn dq(c: Coord) -> DifferentialForm {
        DifferentialForm::zero(1).with_mask(c.bit(), Expression::one())
    }

    pub fn dt() -> DifferentialForm {
        DifferentialForm::dq(Coord::T)
    }

    /// `coef · dq^{c₀} ∧ …` with the factors in any order.
    pub fn term(coords: &[Coord], coef: &Expression) -> DifferentialForm {
        let (mask, sign) = Coord::mask_of(coords);
        let form = DifferentialForm::zero(coords.len() as u8);
        if sign == 0.0 {
            form
        } else {
            form.with_mask(mask, coef.mul(&Expression::constant(sign)))
        }
    }

    /// Form from `(factors, coefficient)` pairs of equal degree.
    pub fn from_terms(degree: u8, terms: &[(&[Coord], Expression)]) -> DifferentialForm {
        terms
            .iter()
            .fold(DifferentialForm::zero(degree), |acc, (c, e)| acc.add(&DifferentialForm::term(c, e)))
    }

    fn with_mask(mut self, mask: u8, coef: Expression) -> DifferentialForm {
        debug_assert_eq!(mask.count_ones(), u32::from(self.degree));
        if !coef.is_zero() {
            self.coeffs.insert(mask, coef);
        }
        self
    }

    fn add_to(&mut self, mask: u8, coef: Expression) {
        if coef.is_zero() {
            return;
        }
        let entry = match self.coeffs.remove(&mask) {
            Some(old) => old.add(&coef),
            None => coef,
        };
        if !entry.is_zero() {
            self.coeffs.insert(mask, entry);
        }
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    /// Coefficient of `dq^{c₀} ∧ …` (sign-adjusted for unsorted factors).
    pub fn coefficient(&self, coords: &[Coord]) -> Expression {
        let (mask, sign) = Coord::mask_of(coords);
        if sign == 0.0 || coords.len() != usize::from(self.degree) {
            return Expression::zero();
        }
        self.coefficient_mask(mask).mul(&Expression::constant(sign))
    }

    pub fn coefficient_mask(&self, mask: u8) -> Expression {
        self.coeffs.get(&mask).cloned().unwrap_or_else(Expression::zero)
    }

    /// Nonzero terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (u8, &Expression)> {
        self.coeffs.iter().map(|(m, e)| (*m, e))
    }

    /// Coordinates whose differentials occur with a nonzero coefficient.
    pub fn base_coords(&self) -> Vec<Coord> {
        Coord::from_mask(self.coeffs.keys().fold(0, |m, k| m | k))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_degree(&self, other: &DifferentialForm) {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
    }

    pub fn add(&self, other: &DifferentialForm) -> DifferentialForm {
        self.check_degree(other);
        let mut out = self.clone();
        for (m, e) in other.terms() {
            out.add_to(m, e.clone());
        }
        out
    }

    pub fn sub(&self, other: &DifferentialForm) -> DifferentialForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        self.map_coefficients(Expression::neg)
    }

    pub fn scale(&self, f: &Expression) -> DifferentialForm {
        self.map_coefficients(|c| c.mul(f))
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expression) -> Expression) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree);
        for (m, e) in self.terms() {
            out.add_to(m, f(e));
        }
        out
    }

    pub fn substitute(&self, var: &str, value: &Expression) -> DifferentialForm {
        self.map_coefficients(|c| c.substitute(var, value))
    }

    pub fn wedge(&self, other: &DifferentialForm) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree + other.degree);
        for (a, ea) in self.terms() {
            for (b, eb) in other.terms() {
                let s = wedge_sign(a, b);
                if s != 0.0 {
                    out.add_to(a | b, ea.mul(eb).mul(&Expression::constant(s)));
                }
            }
        }
        out
    }

    /// Exterior derivative over (t, x, y, ẋ, ẏ). Coefficients must be
    /// functions on J¹Y.
    pub fn exterior_derivative(&self) -> Result<DifferentialForm, JetError> {
        let mut out = DifferentialForm::zero(self.degree + 1);
        for (mask, coef) in self.terms() {
            if let Some(v) = super::max_jet_var(coef).filter(|v| v.order() > 1) {
                return Err(JetError::BeyondFirstJet(v.name()));
            }
            for c in Coord::ALL {
                if mask & c.bit() != 0 {
                    continue;
                }
                let partial = coef.differentiate(c.name());
                if partial.is_zero() {
                    continue;
                }
                let sign = if below(mask, c).is_multiple_of(2) { 1.0 } else { -1.0 };
                out.add_to(mask | c.bit(), partial.mul(&Expression::constant(sign)));
            }
        }
        Ok(out)
    }

    /// Interior product with ∂/∂c.
    pub fn contract(&self, c: Coord) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree.saturating_sub(1));
        for (mask, coef) in self.terms() {
            if mask & c.bit() == 0 {
                continue;
            }
            let sign = if below(mask, c).is_multiple_of(2) { 1.0 } else { -1.0 };
            out.add_to(mask ^ c.bit(), coef.mul(&Expression::constant(sign)));
        }
        out
    }

    /// Rewrite each dq^c as the 1-form `images[c]` and expand.
    pub fn change_basis(&self, images: &[DifferentialForm; 5]) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree);
        for (mask, coef) in self.terms() {
            let mut product = DifferentialForm::function(coef);
            for c in Coord::from_mask(mask) {
                product = product.wedge(&images[c as usize]);
            }
            for (m, e) in product.terms() {
                out.add_to(m, e.clone());
            }
        }
        out
    }

    /// Components in the contact basis (dt, ω^x, ω^y, ω̇^x, ω̇^y) of J²Y:
    /// the returned form's bit k refers to the k-th contact basis element.
    pub fn to_contact_basis(&self) -> DifferentialForm {
        let e = |c: Coord| DifferentialForm::dq(c);
        let lift = |c: Coord, v: JetVar| e(c).add(&e(Coord::T).scale(&Expression::var(v.name())));
        self.change_basis(&[
            e(Coord::T),
            lift(Coord::X, JetVar::Xd),
            lift(Coord::Y, JetVar::Yd),
            lift(Coord::Xd, JetVar::Xdd),
            lift(Coord::Yd, JetVar::Ydd),
        ])
    }

    /// Inverse of [`DifferentialForm::to_contact_basis`].
    pub fn from_contact_basis(&self) -> DifferentialForm {
        let e = |c: Coord| DifferentialForm::dq(c);
        let drop = |c: Coord, v: JetVar| e(c).sub(&e(Coord::T).scale(&Expression::var(v.name())));
        self.change_basis(&[
            e(Coord::T),
            drop(Coord::X, JetVar::Xd),
            drop(Coord::Y, JetVar::Yd),
            drop(Coord::Xd, JetVar::Xdd),
            drop(Coord::Yd, JetVar::Ydd),
        ])
    }

    /// hρ for a 1-form: dt ↦ dt, dx ↦ ẋdt, dẋ ↦ ẍdt.
    pub fn horizontalize(&self) -> Result<Lagrangian, JetError> {
        if self.degree != 1 {
            return Err(JetError::Degree { expected: 1, found: self.degree });
        }
        Lagrangian::new(self.to_contact_basis().coefficient_mask(Coord::T.bit()))
    }

    /// ρ = 𝓛 dt + A_x ω^x + A_y ω^y + C_x ω̇^x + C_y ω̇^y for a 1-form.
    pub fn contact_split(&self) -> Result<ContactSplit, JetError> {
        if self.degree != 1 {
            return Err(JetError::Degree { expected: 1, found: self.degree });
        }
        let c = self.to_contact_basis();
        Ok(ContactSplit {
            horizontal: c.coefficient_mask(Coord::T.bit()),
            contact: [Coord::X, Coord::Y, Coord::Xd, Coord::Yd].map(|k| c.coefficient_mask(k.bit())),
        })
    }

    /// 1-contact part of a 2-form: coefficients of ω^x∧dt, ω^y∧dt, ω̇^x∧dt,
    /// ω̇^y∧dt after pulling back to J²Y.
    pub fn one_contact(&self) -> Result<[Expression; 4], JetError> {
        if self.degree != 2 {
            return Err(JetError::Degree { expected: 2, found: self.degree });
        }
        let c = self.to_contact_basis();
        // ω^k ∧ dt = −dt ∧ ω^k, and the stored mask is ordered dt first.
        Ok([Coord::X, Coord::Y, Coord::Xd, Coord::Yd].map(|k| c.coefficient_mask(Coord::T.bit() | k.bit()).neg()))
    }

    /// p₁ρ written as (ε_x ω^x + ε_y ω^y) ∧ dt; returns (ε_x, ε_y).
    pub fn p1(&self) -> Result<[Expression; 2], JetError> {
        let [x, y, _, _] = self.one_contact()?;
        Ok([x, y])
    }

    pub fn evaluate(&self, env: &dyn Env) -> Result<FormValue, EvalError> {
        let mut v = FormValue::zero(self.degree);
        for (m, e) in self.terms() {
            v.coeffs[usize::from(m)] = e.evaluate(env)?;
        }
        Ok(v)
    }
}

/// Result of [`DifferentialForm::contact_split`]: the horizontal density and
/// the coefficients of ω^x, ω^y, ω̇^x, ω̇^y.
#[derive(Clone, Debug)]
pub struct ContactSplit {
    pub horizontal: Expression,
    pub contact: [Expression; 4],
}

impl ContactSplit {
    /// Reassemble the coordinate-basis form.
    pub fn reassemble(&self) -> DifferentialForm {
        let mut contact = DifferentialForm::dt().scale(&self.horizontal);
        for (k, c) in [Coord::X, Coord::Y, Coord::Xd, Coord::Yd].into_iter().zip(&self.contact) {
            contact = contact.add(&DifferentialForm::dq(k).scale(c));
        }
        contact.from_contact_basis()
    }
}

/// Numeric values of a form's coefficients at one point, indexed by basis
/// mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormValue {
    pub degree: u8,
    pub coeffs: [f64; 32],
}

impl FormValue {
    pub fn zero(degree: u8) -> FormValue {
        FormValue { degree, coeffs: [0.0; 32] }
    }

    pub fn get(&self, coords: &[Coord]) -> f64 {
        let (mask, sign) = Coord::mask_of(coords);
        sign * self.coeffs[usize::from(mask)]
    }

    /// Largest coefficient magnitude (NaN propagates).
    pub fn max_abs(&self) -> f64 {
        crate::num::max_abs(&self.coeffs)
    }

    pub fn sub(&self, other: &FormValue) -> FormValue {
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a -= b;
        }
        out
    }

    pub fn add(&self, other: &FormValue) -> FormValue {
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> FormValue {
        let mut out = *self;
        for a in out.coeffs.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Max |self − other| over all coefficients.
    pub fn distance(&self, other: &FormValue) -> f64 {
        self.sub(other).max_abs()
    }
}

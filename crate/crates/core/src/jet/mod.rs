//! Jet coordinates, the total time derivative, Lagrangians and coordinate
//! differential forms on the first jet space.

mod form;

use alloc::string::String;

pub use form::{Coord, ContactSplit, DifferentialForm, FormValue};

use crate::expr::{Env, Expression};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("`{0}` is above jet order {1}")]
    AboveOrder(&'static str, u8),
    #[error("total derivative needs order ≤ 3, expression contains `{0}`")]
    TotalDerivativeOrder(&'static str),
    #[error("exterior derivative needs coefficients on the first jet, found `{0}`")]
    BeyondFirstJet(&'static str),
    #[error("form has degree {found}, expected {expected}")]
    Degree { expected: u8, found: u8 },
    #[error("Lagrangian depends on `{0}`; only orders 1 and 2 are supported")]
    LagrangianOrder(&'static str),
    #[error("non-finite jet coordinate `{0}`")]
    NonFinite(String),
}

/// Canonical jet coordinates up to order 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetVar {
    T,
    X,
    Y,
    Xd,
    Yd,
    Xdd,
    Ydd,
    X3,
    Y3,
    X4,
    Y4,
}

impl JetVar {
    pub const ALL: [JetVar; 11] = [
        JetVar::T,
        JetVar::X,
        JetVar::Y,
        JetVar::Xd,
        JetVar::Yd,
        JetVar::Xdd,
        JetVar::Ydd,
        JetVar::X3,
        JetVar::Y3,
        JetVar::X4,
        JetVar::Y4,
    ];

    pub fn name(self) -> &'static str {
        ["t", "x", "y", "xd", "yd", "xdd", "ydd", "xddd", "yddd", "xdddd", "ydddd"][self.index()]
    }

    pub fn from_name(name: &str) -> Option<JetVar> {
        JetVar::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Derivative order of the coordinate (time and positions are 0).
    pub fn order(self) -> u8 {
        match self {
            JetVar::T | JetVar::X | JetVar::Y => 0,
            JetVar::Xd | JetVar::Yd => 1,
            JetVar::Xdd | JetVar::Ydd => 2,
            JetVar::X3 | JetVar::Y3 => 3,
            JetVar::X4 | JetVar::Y4 => 4,
        }
    }

    /// The coordinate one derivative higher (`x → xd`), `None` for `t` and
    /// order 4.
    pub fn next(self) -> Option<JetVar> {
        match self {
            JetVar::T | JetVar::X4 | JetVar::Y4 => None,
            v => Some(JetVar::ALL[v.index() + 2]),
        }
    }
}

/// A point of J^k with k ≤ 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetPoint {
    order: u8,
    values: [f64; 11],
}

impl JetPoint {
    /// Point of the given order from `(t, x, y, xd, yd, …)` in canonical
    /// order; missing entries are zero.
    pub fn new(order: u8, coords: &[f64]) -> Result<JetPoint, JetError> {
        let order = order.min(4);
        let mut values = [0.0; 11];
        for (i, v) in coords.iter().enumerate().take(11) {
            if !v.is_finite() {
                return Err(JetError::NonFinite(JetVar::ALL[i].name().into()));
            }
            if JetVar::ALL[i].order() > order && *v != 0.0 {
                return Err(JetError::AboveOrder(JetVar::ALL[i].name(), order));
            }
            values[i] = *v;
        }
        Ok(JetPoint { order, values })
    }

    pub fn first(t: f64, x: f64, y: f64, xd: f64, yd: f64) -> JetPoint {
        JetPoint { order: 1, values: [t, x, y, xd, yd, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] }
    }

    pub fn second(t: f64, x: f64, y: f64, xd: f64, yd: f64, xdd: f64, ydd: f64) -> JetPoint {
        JetPoint { order: 2, values: [t, x, y, xd, yd, xdd, ydd, 0.0, 0.0, 0.0, 0.0] }
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn get(&self, v: JetVar) -> Result<f64, JetError> {
        if v.order() > self.order {
            Err(JetError::AboveOrder(v.name(), self.order))
        } else {
            Ok(self.values[v.index()])
        }
    }

    /// Copy with one coordinate replaced; raises the order if needed.
    pub fn with(&self, v: JetVar, value: f64) -> JetPoint {
        let mut p = *self;
        p.values[v.index()] = value;
        p.order = p.order.max(v.order());
        p
    }

    /// Copy truncated or extended (with zeros) to `order`.
    pub fn with_order(&self, order: u8) -> JetPoint {
        let mut p = *self;
        for v in JetVar::ALL {
            if v.order() > order {
                p.values[v.index()] = 0.0;
            }
        }
        p.order = order.min(4);
        p
    }

    pub fn t(&self) -> f64 {
        self.values[0]
    }

    pub fn position(&self) -> [f64; 2] {
        [self.values[1], self.values[2]]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.values[3], self.values[4]]
    }

    pub fn acceleration(&self) -> [f64; 2] {
        [self.values[5], self.values[6]]
    }

    /// Raw coordinate array in canonical order.
    pub fn values(&self) -> &[f64; 11] {
        &self.values
    }
}

impl Env for JetPoint {
    fn lookup(&self, name: &str) -> Option<f64> {
        let v = JetVar::from_name(name)?;
        self.get(v).ok()
    }
}

/// Highest-order jet coordinate among the free variables of `e`, if any.
pub fn max_jet_var(e: &Expression) -> Option<JetVar> {
    JetVar::ALL.into_iter().rev().find(|v| e.depends_on(v.name()))
}

/// Jet order of an expression (0 when only t, x, y appear).
pub fn jet_order(e: &Expression) -> u8 {
    max_jet_var(e).map_or(0, JetVar::order)
}

/// d_t f = ∂f/∂t + Σ q^(k+1) ∂f/∂q^(k).
pub fn total_derivative(f: &Expression) -> Result<Expression, JetError> {
    for top in [JetVar::X4, JetVar::Y4] {
        if f.depends_on(top.name()) {
            return Err(JetError::TotalDerivativeOrder(top.name()));
        }
    }
    let mut out = f.differentiate("t");
    for v in &JetVar::ALL[1..9] {
        let next = v.next().expect("orders below 4 have a successor");
        let partial = f.differentiate(v.name());
        if !partial.is_zero() {
            out = out.add(&Expression::var(next.name()).mul(&partial));
        }
    }
    Ok(out)
}

/// λ = 𝓛 dt with 𝓛 of order 1 or 2.
#[derive(Clone, Debug)]
pub struct Lagrangian {
    order: u8,
    density: Expression,
}

impl Lagrangian {
    /// Order is 2 when ẍ or ÿ occurs, otherwise 1.
    pub fn new(density: Expression) -> Result<Lagrangian, JetError> {
        match max_jet_var(&density) {
            Some(v) if v.order() > 2 => Err(JetError::LagrangianOrder(v.name())),
            Some(v) if v.order() == 2 => Ok(Lagrangian { order: 2, density }),
            _ => Ok(Lagrangian { order: 1, density }),
        }
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn density(&self) -> &Expression {
        &self.density
    }

    /// λ as the 1-form 𝓛 dt.
    pub fn to_form(&self) -> DifferentialForm {
        DifferentialForm::dt().scale(&self.density)
    }
}

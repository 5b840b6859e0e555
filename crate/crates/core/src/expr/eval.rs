use alloc::collections::BTreeMap;
use alloc::string::String;

use super::{Expression, Node};
use crate::quad;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite intermediate result")]
    NonFinite,
    #[error("quadrature on [{lo}, {hi}] did not converge")]
    QuadratureNonConvergence { lo: f64, hi: f64 },
}

impl From<quad::NonConvergence> for EvalError {
    fn from(e: quad::NonConvergence) -> Self {
        EvalError::QuadratureNonConvergence { lo: e.lo, hi: e.hi }
    }
}

/// Source of variable values during evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

/// Plain name → value map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binding(pub BTreeMap<String, f64>);

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Binding {
        self.0.insert(name.into(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.into(), value);
    }
}

impl<const N: usize> From<[(&str, f64); N]> for Binding {
    fn from(pairs: [(&str, f64); N]) -> Self {
        Binding(pairs.into_iter().map(|(k, v)| (String::from(k), v)).collect())
    }
}

impl Env for Binding {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<E: Env + ?Sized> Env for &E {
    fn lookup(&self, name: &str) -> Option<f64> {
        (**self).lookup(name)
    }
}

/// `parent` extended by one binding, which shadows the parent.
pub struct Scoped<'a> {
    pub parent: &'a dyn Env,
    pub name: &'a str,
    pub value: f64,
}

impl Env for Scoped<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        if name == self.name {
            Some(self.value)
        } else {
            self.parent.lookup(name)
        }
    }
}

fn check(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expression {
    pub fn evaluate(&self, env: &dyn Env) -> Result<f64, EvalError> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(v) => env.lookup(v).ok_or_else(|| EvalError::MissingBinding(String::from(&**v))),
            Node::Neg(a) => Ok(-a.evaluate(env)?),
            Node::Add(a, b) => check(a.evaluate(env)? + b.evaluate(env)?),
            Node::Sub(a, b) => check(a.evaluate(env)? - b.evaluate(env)?),
            Node::Mul(a, b) => check(a.evaluate(env)? * b.evaluate(env)?),
            Node::Div(a, b) => {
                let num = a.evaluate(env)?;
                let den = b.evaluate(env)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                check(num / den)
            }
            Node::Pow(a, n) => {
                let base = a.evaluate(env)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                check(crate::num::powi(base, *n))
            }
            Node::Call(f, a) => f.apply(a.evaluate(env)?),
            Node::Integral { dummy, lo, hi, body } => {
                let lo = lo.evaluate(env)?;
                let hi = hi.evaluate(env)?;
                if lo == hi {
                    return Ok(0.0);
                }
                quad::integrate(
                    |s| body.evaluate(&Scoped { parent: env, name: dummy, value: s }),
                    lo,
                    hi,
                    &quad::Adaptive::default(),
                )
            }
        }
    }
}

//! Immutable symbolic expressions: parsing, printing, exact differentiation and
//! evaluation.
//!
//! Besides the parsed node kinds there is an internal definite-integral node
//! `∫_lo^hi body d#k`. It is produced by [`Expression::integrate`] (fiber
//! integrals, homotopy integrals), evaluated by adaptive Gauss–Legendre
//! quadrature and differentiated exactly by the Leibniz rule. Its bound
//! variable uses a `#k` name that the lexer cannot produce, so it never clashes
//! with user identifiers.

mod diff;
mod eval;
mod parse;
mod print;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use core::ops;

pub use eval::{Binding, Env, EvalError, Scoped};
pub use parse::{parse, parse_with, ParseError, ParseErrorKind, Scope};

/// Elementary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> Result<f64, EvalError> {
        use crate::num;
        let v = match self {
            Func::Sin => num::sin(x),
            Func::Cos => num::cos(x),
            Func::Tan => num::tan(x),
            Func::Exp => num::exp(x),
            Func::Log => {
                if !(x > 0.0) {
                    return Err(EvalError::Domain { func: "log", arg: x });
                }
                num::log(x)
            }
            Func::Sqrt => {
                if !(x >= 0.0) {
                    return Err(EvalError::Domain { func: "sqrt", arg: x });
                }
                num::sqrt(x)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

/// AST node. Children are shared, so cloning an expression is cheap.
#[derive(Clone, Debug)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Neg(Expression),
    Add(Expression, Expression),
    Sub(Expression, Expression),
    Mul(Expression, Expression),
    Div(Expression, Expression),
    Pow(Expression, i32),
    Call(Func, Expression),
    Integral {
        dummy: Arc<str>,
        lo: Expression,
        hi: Expression,
        body: Expression,
    },
}

/// A scalar expression in named real variables.
///
/// All constructors fold constant subtrees and the identities `0 + e`,
/// `e * 1`, `e * 0`, `e ^ 1`, `e ^ 0`; nothing else is simplified, so
/// equality of two expressions is only ever tested by evaluation.
#[derive(Clone, Debug)]
pub struct Expression(Arc<Node>);

fn finite(v: f64) -> Option<Expression> {
    v.is_finite().then(|| Expression::constant(v))
}

impl Expression {
    fn wrap(node: Node) -> Expression {
        Expression(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Expression {
        Expression::wrap(Node::Const(c))
    }

    pub fn zero() -> Expression {
        Expression::constant(0.0)
    }

    pub fn one() -> Expression {
        Expression::constant(1.0)
    }

    pub fn var(name: &str) -> Expression {
        Expression::wrap(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(&self) -> Expression {
        match self.node() {
            Node::Const(c) => Expression::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expression::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &Expression) -> Expression {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => finite(a + b).unwrap_or_else(|| self.raw_add(rhs)),
            (Some(a), _) if a == 0.0 => rhs.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => self.raw_add(rhs),
        }
    }

    fn raw_add(&self, rhs: &Expression) -> Expression {
        Expression::wrap(Node::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &Expression) -> Expression {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => finite(a - b)
                .unwrap_or_else(|| Expression::wrap(Node::Sub(self.clone(), rhs.clone()))),
            (Some(a), _) if a == 0.0 => rhs.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expression::wrap(Node::Sub(self.clone(), rhs.clone())),
        }
    }

    pub fn mul(&self, rhs: &Expression) -> Expression {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => finite(a * b)
                .unwrap_or_else(|| Expression::wrap(Node::Mul(self.clone(), rhs.clone()))),
            (Some(a), _) if a == 0.0 => Expression::zero(),
            (_, Some(b)) if b == 0.0 => Expression::zero(),
            (Some(a), _) if a == 1.0 => rhs.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => rhs.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Expression::wrap(Node::Mul(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &Expression) -> Expression {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => finite(a / b)
                .unwrap_or_else(|| Expression::wrap(Node::Div(self.clone(), rhs.clone()))),
            (Some(a), _) if a == 0.0 => Expression::zero(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Expression::wrap(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Expression {
        match (n, self.as_const()) {
            (0, _) => Expression::one(),
            (1, _) => self.clone(),
            (_, Some(c)) if !(c == 0.0 && n < 0) => finite(crate::num::powi(c, n))
                .unwrap_or_else(|| Expression::wrap(Node::Pow(self.clone(), n))),
            _ => Expression::wrap(Node::Pow(self.clone(), n)),
        }
    }

    pub fn call(f: Func, arg: &Expression) -> Expression {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = f.apply(c) {
                return Expression::constant(v);
            }
        }
        Expression::wrap(Node::Call(f, arg.clone()))
    }

    pub fn sin(&self) -> Expression {
        Expression::call(Func::Sin, self)
    }

    pub fn cos(&self) -> Expression {
        Expression::call(Func::Cos, self)
    }

    pub fn exp(&self) -> Expression {
        Expression::call(Func::Exp, self)
    }

    /// `∫_lo^hi body[var ↦ s] ds` with a fresh bound variable `s`.
    pub fn integrate(body: &Expression, var: &str, lo: &Expression, hi: &Expression) -> Expression {
        if body.is_zero() {
            return Expression::zero();
        }
        if !body.depends_on(var) {
            return body.mul(&hi.sub(lo));
        }
        if let (Some(a), Some(b)) = (lo.as_const(), hi.as_const()) {
            if a == b {
                return Expression::zero();
            }
        }
        let index = 1 + body.max_dummy_index().max(lo.max_dummy_index()).max(hi.max_dummy_index());
        let dummy: Arc<str> = Arc::from(format!("#{index}").as_str());
        let body = body.substitute(var, &Expression::wrap(Node::Var(dummy.clone())));
        Expression::wrap(Node::Integral { dummy, lo: lo.clone(), hi: hi.clone(), body })
    }

    /// Free variables (bound integration variables excluded).
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out, &mut alloc::vec::Vec::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>, bound: &mut alloc::vec::Vec<Arc<str>>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                if !bound.iter().any(|b| b == v) {
                    out.insert(String::from(&**v));
                }
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.collect_free(out, bound),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_free(out, bound);
                b.collect_free(out, bound);
            }
            Node::Integral { dummy, lo, hi, body } => {
                lo.collect_free(out, bound);
                hi.collect_free(out, bound);
                bound.push(dummy.clone());
                body.collect_free(out, bound);
                bound.pop();
            }
        }
    }

    /// Whether `name` occurs free.
    pub fn depends_on(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == name,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.depends_on(name),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on(name) || b.depends_on(name)
            }
            Node::Integral { dummy, lo, hi, body } => {
                lo.depends_on(name) || hi.depends_on(name) || (&**dummy != name && body.depends_on(name))
            }
        }
    }

    /// Number of AST nodes (shared subtrees counted each time they occur).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.size(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => 1 + a.size() + b.size(),
            Node::Integral { lo, hi, body, .. } => 1 + lo.size() + hi.size() + body.size(),
        }
    }

    fn max_dummy_index(&self) -> u32 {
        fn index_of(name: &str) -> u32 {
            name.strip_prefix('#').and_then(|d| d.parse().ok()).unwrap_or(0)
        }
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(v) => index_of(v),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_dummy_index(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_dummy_index().max(b.max_dummy_index())
            }
            Node::Integral { dummy, lo, hi, body } => index_of(dummy)
                .max(lo.max_dummy_index())
                .max(hi.max_dummy_index())
                .max(body.max_dummy_index()),
        }
    }
}

impl From<f64> for Expression {
    fn from(c: f64) -> Self {
        Expression::constant(c)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl ops::$tr<Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::$method(&self, &rhs)
            }
        }
        impl ops::$tr<&Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression::$method(&self, rhs)
            }
        }
        impl ops::$tr<Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::$method(self, &rhs)
            }
        }
        impl ops::$tr<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression::$method(self, rhs)
            }
        }
        impl ops::$tr<f64> for Expression {
            type Output = Expression;
            fn $method(self, rhs: f64) -> Expression {
                Expression::$method(&self, &Expression::constant(rhs))
            }
        }
        impl ops::$tr<f64> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: f64) -> Expression {
                Expression::$method(self, &Expression::constant(rhs))
            }
        }
        impl ops::$tr<Expression> for f64 {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::$method(&Expression::constant(self), &rhs)
            }
        }
        impl ops::$tr<&Expression> for f64 {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression::$method(&Expression::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::neg(&self)
    }
}

impl ops::Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::neg(self)
    }
}

impl core::iter::Sum for Expression {
    fn sum<I: Iterator<Item = Expression>>(iter: I) -> Expression {
        iter.fold(Expression::zero(), |acc, e| acc + e)
    }
}

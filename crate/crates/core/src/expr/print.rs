use core::fmt;

use super::{Expression, Node};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Atom,
}

impl Expression {
    fn prec(&self) -> Prec {
        match self.node() {
            Node::Add(..) | Node::Sub(..) => Prec::Sum,
            Node::Mul(..) | Node::Div(..) => Prec::Product,
            Node::Const(c) if c.is_sign_negative() => Prec::Sum,
            Node::Neg(_) | Node::Pow(..) | Node::Integral { .. } => Prec::Sum,
            Node::Const(_) | Node::Var(_) | Node::Call(..) => Prec::Atom,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: Prec) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            fmt::Display::fmt(self, f)?;
            write!(f, ")")
        } else {
            fmt::Display::fmt(self, f)
        }
    }
}

/// Prints in the parser's grammar; `parse(&e.to_string())` evaluates exactly
/// like `e`. Integral nodes print as `int(lo, hi, body, #k)`, which is not
/// parseable.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, Prec::Atom)
            }
            Node::Add(a, b) => {
                a.write_at(f, Prec::Sum)?;
                write!(f, " + ")?;
                b.write_at(f, Prec::Product)
            }
            Node::Sub(a, b) => {
                a.write_at(f, Prec::Sum)?;
                write!(f, " - ")?;
                b.write_at(f, Prec::Product)
            }
            Node::Mul(a, b) => {
                a.write_at(f, Prec::Product)?;
                write!(f, "*")?;
                b.write_at(f, Prec::Atom)
            }
            Node::Div(a, b) => {
                a.write_at(f, Prec::Product)?;
                write!(f, "/")?;
                b.write_at(f, Prec::Atom)
            }
            Node::Pow(a, n) => {
                a.write_at(f, Prec::Atom)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Integral { dummy, lo, hi, body } => write!(f, "int({lo}, {hi}, {body}, {dummy})"),
        }
    }
}

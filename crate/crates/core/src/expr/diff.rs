use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;

use super::{Expression, Func, Node};

impl Expression {
    /// Exact partial derivative with respect to the free variable `v`.
    pub fn differentiate(&self, v: &str) -> Expression {
        match self.node() {
            Node::Const(_) => Expression::zero(),
            Node::Var(name) => {
                if &**name == v {
                    Expression::one()
                } else {
                    Expression::zero()
                }
            }
            Node::Neg(a) => a.differentiate(v).neg(),
            Node::Add(a, b) => a.differentiate(v).add(&b.differentiate(v)),
            Node::Sub(a, b) => a.differentiate(v).sub(&b.differentiate(v)),
            Node::Mul(a, b) => {
                let da = a.differentiate(v);
                let db = b.differentiate(v);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let da = a.differentiate(v);
                let db = b.differentiate(v);
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
                }
            }
            Node::Pow(a, n) => {
                let da = a.differentiate(v);
                if da.is_zero() {
                    return Expression::zero();
                }
                Expression::constant(f64::from(*n)).mul(&a.powi(n - 1)).mul(&da)
            }
            Node::Call(f, a) => {
                let da = a.differentiate(v);
                if da.is_zero() {
                    return Expression::zero();
                }
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Tan => Expression::one().add(&self.powi(2)),
                    Func::Exp => self.clone(),
                    Func::Log => Expression::one().div(a),
                    Func::Sqrt => Expression::constant(0.5).div(self),
                };
                outer.mul(&da)
            }
            Node::Integral { dummy, lo, hi, body } => {
                let inner = body.differentiate(v);
                let mut out = if inner.is_zero() {
                    Expression::zero()
                } else {
                    Expression(Arc::new(Node::Integral {
                        dummy: dummy.clone(),
                        lo: lo.clone(),
                        hi: hi.clone(),
                        body: inner,
                    }))
                };
                let dhi = hi.differentiate(v);
                if !dhi.is_zero() {
                    out = out.add(&body.substitute(dummy, hi).mul(&dhi));
                }
                let dlo = lo.differentiate(v);
                if !dlo.is_zero() {
                    out = out.sub(&body.substitute(dummy, lo).mul(&dlo));
                }
                out
            }
        }
    }

    /// Replace every free occurrence of `v` by `e`, renaming bound variables
    /// that would capture a free variable of `e`.
    pub fn substitute(&self, v: &str, e: &Expression) -> Expression {
        if !self.depends_on(v) {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(name) => {
                if &**name == v {
                    e.clone()
                } else {
                    self.clone()
                }
            }
            Node::Neg(a) => a.substitute(v, e).neg(),
            Node::Add(a, b) => a.substitute(v, e).add(&b.substitute(v, e)),
            Node::Sub(a, b) => a.substitute(v, e).sub(&b.substitute(v, e)),
            Node::Mul(a, b) => a.substitute(v, e).mul(&b.substitute(v, e)),
            Node::Div(a, b) => a.substitute(v, e).div(&b.substitute(v, e)),
            Node::Pow(a, n) => a.substitute(v, e).powi(*n),
            Node::Call(f, a) => Expression::call(*f, &a.substitute(v, e)),
            Node::Integral { dummy, lo, hi, body } => {
                let lo = lo.substitute(v, e);
                let hi = hi.substitute(v, e);
                if &**dummy == v {
                    return rebuild_integral(dummy.clone(), lo, hi, body.clone());
                }
                let (dummy, body) = if e.depends_on(dummy) {
                    let index = 1 + self.max_dummy_index().max(e.max_dummy_index());
                    let fresh: Arc<str> = Arc::from(format!("#{index}").as_str());
                    let renamed = body.substitute(dummy, &Expression(Arc::new(Node::Var(fresh.clone()))));
                    (fresh, renamed)
                } else {
                    (dummy.clone(), body.clone())
                };
                rebuild_integral(dummy, lo, hi, body.substitute(v, e))
            }
        }
    }

    /// Simultaneous substitution of several variables.
    pub fn substitute_all(&self, map: &BTreeMap<String, Expression>) -> Expression {
        if map.is_empty() {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(name) => map.get(&**name).cloned().unwrap_or_else(|| self.clone()),
            Node::Neg(a) => a.substitute_all(map).neg(),
            Node::Add(a, b) => a.substitute_all(map).add(&b.substitute_all(map)),
            Node::Sub(a, b) => a.substitute_all(map).sub(&b.substitute_all(map)),
            Node::Mul(a, b) => a.substitute_all(map).mul(&b.substitute_all(map)),
            Node::Div(a, b) => a.substitute_all(map).div(&b.substitute_all(map)),
            Node::Pow(a, n) => a.substitute_all(map).powi(*n),
            Node::Call(f, a) => Expression::call(*f, &a.substitute_all(map)),
            Node::Integral { .. } => {
                // Sequential substitution through fresh placeholders keeps
                // the capture handling in one place.
                let base = 1 + map
                    .values()
                    .map(Expression::max_dummy_index)
                    .max()
                    .unwrap_or(0)
                    .max(self.max_dummy_index());
                let mut out = self.clone();
                let mut holders = alloc::vec::Vec::new();
                for (i, name) in map.keys().enumerate() {
                    let holder = format!("#{}", base as usize + i);
                    out = out.substitute(name, &Expression::var(&holder));
                    holders.push(holder);
                }
                for (holder, value) in holders.iter().zip(map.values()) {
                    out = out.substitute(holder, value);
                }
                out
            }
        }
    }

    /// Replace variable names according to `map` (names absent from the map
    /// are kept).
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Expression {
        let targets: BTreeMap<String, Expression> =
            map.iter().map(|(k, v)| (k.clone(), Expression::var(v))).collect();
        self.substitute_all(&targets)
    }
}

fn rebuild_integral(dummy: Arc<str>, lo: Expression, hi: Expression, body: Expression) -> Expression {
    if body.is_zero() {
        return Expression::zero();
    }
    if let (Some(a), Some(b)) = (lo.as_const(), hi.as_const()) {
        if a == b {
            return Expression::zero();
        }
    }
    Expression(Arc::new(Node::Integral { dummy, lo, hi, body }))
}

use std::collections::HashMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Expr, Func, Kind, Symbol};
use crate::scalar::Real;

/// Minimum magnitude accepted for a quantity raised to a negative power.
pub const DEN_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
}

/// Values for named constants and for coordinates (a point).
#[derive(Debug, Clone, Default)]
pub struct Bindings<T> {
    consts: HashMap<Symbol, T>,
    vars: HashMap<Symbol, T>,
}

impl<T: Real> Bindings<T> {
    pub fn new() -> Self {
        Bindings { consts: HashMap::new(), vars: HashMap::new() }
    }

    pub fn set_const(&mut self, name: impl Into<Symbol>, v: T) -> &mut Self {
        self.consts.insert(name.into(), v);
        self
    }

    pub fn set_var(&mut self, name: impl Into<Symbol>, v: T) -> &mut Self {
        self.vars.insert(name.into(), v);
        self
    }

    pub fn with_const(mut self, name: impl Into<Symbol>, v: T) -> Self {
        self.set_const(name, v);
        self
    }

    pub fn with_var(mut self, name: impl Into<Symbol>, v: T) -> Self {
        self.set_var(name, v);
        self
    }

    pub fn constant(&self, s: Symbol) -> Option<T> {
        self.consts.get(&s).copied()
    }

    pub fn var(&self, s: Symbol) -> Option<T> {
        self.vars.get(&s).copied()
    }
}

pub(crate) fn num_value<T: Real>(r: &num_rational::BigRational) -> T {
    T::lit(r.to_f64().unwrap_or(f64::NAN))
}

fn finite<T: Real>(v: T, what: &str) -> Result<T, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::DomainViolation(format!("{what} is not finite")))
    }
}

pub(crate) fn apply_pow<T: Real>(b: T, e: T) -> Result<T, EvalError> {
    let r = e.round();
    if r == e && r.abs() < T::lit(1e9) {
        let k = r.to_i32().unwrap_or(0);
        if k < 0 && b.abs() < T::lit(DEN_GUARD) {
            return Err(EvalError::DomainViolation("denominator below guard".into()));
        }
        return finite(b.powi(k), "power");
    }
    if !(b > T::zero()) {
        return Err(EvalError::DomainViolation("non-integer power of a non-positive base".into()));
    }
    finite(b.powf(e), "power")
}

pub(crate) fn apply_func<T: Real>(f: Func, a: T) -> Result<T, EvalError> {
    let v = match f {
        Func::Exp => a.exp(),
        Func::Ln => {
            if !(a > T::zero()) {
                return Err(EvalError::DomainViolation("ln of a non-positive argument".into()));
            }
            a.ln()
        }
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => {
            if a.cos().abs() < T::lit(DEN_GUARD) {
                return Err(EvalError::DomainViolation("tan at a pole".into()));
            }
            a.tan()
        }
        Func::Sinh => a.sinh(),
        Func::Cosh => a.cosh(),
        Func::Tanh => a.tanh(),
    };
    finite(v, f.name())
}

impl Expr {
    /// Evaluate at a point. All free symbols must be bound.
    pub fn eval<T: Real>(&self, b: &Bindings<T>) -> Result<T, EvalError> {
        let mut memo = HashMap::new();
        self.eval_rec(b, &mut memo)
    }

    fn eval_rec<T: Real>(&self, b: &Bindings<T>, memo: &mut HashMap<usize, T>) -> Result<T, EvalError> {
        if let Some(v) = memo.get(&self.node_id()) {
            return Ok(*v);
        }
        let v = match self.kind() {
            Kind::Num(r) => num_value(r),
            Kind::Const(s) => b
                .constant(*s)
                .or_else(|| b.var(*s))
                .ok_or_else(|| EvalError::UnboundSymbol(s.name().to_string()))?,
            Kind::Var(s) => b
                .var(*s)
                .or_else(|| b.constant(*s))
                .ok_or_else(|| EvalError::UnboundSymbol(s.name().to_string()))?,
            Kind::Add(ts) => {
                let mut acc = T::zero();
                for t in ts {
                    acc = acc + t.eval_rec(b, memo)?;
                }
                finite(acc, "sum")?
            }
            Kind::Mul(fs) => {
                let mut acc = T::one();
                for f in fs {
                    acc = acc * f.eval_rec(b, memo)?;
                }
                finite(acc, "product")?
            }
            Kind::Pow(base, e) => {
                let bv = base.eval_rec(b, memo)?;
                let ev = e.eval_rec(b, memo)?;
                apply_pow(bv, ev)?
            }
            Kind::Func(f, a) => apply_func(*f, a.eval_rec(b, memo)?)?,
        };
        memo.insert(self.node_id(), v);
        Ok(v)
    }

    /// Sum of absolute values of the top-level additive terms; the scale used for
    /// normalized residuals.
    pub fn term_scale<T: Real>(&self, b: &Bindings<T>) -> Result<T, EvalError> {
        match self.kind() {
            Kind::Add(ts) => {
                let mut acc = T::zero();
                for t in ts {
                    acc = acc + t.eval(b)?.abs();
                }
                Ok(acc)
            }
            _ => Ok(self.eval(b)?.abs()),
        }
    }
}

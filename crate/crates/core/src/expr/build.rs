//! Smart constructors. Invariants maintained for every `Add`/`Mul` node:
//! flattened, at most one numeric entry (stored first), like terms/bases
//! collected, remaining entries sorted in canonical order.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Func, Kind};

fn rat_one() -> BigRational {
    BigRational::one()
}

/// Split a term into numeric coefficient and the remaining (non-numeric) part.
fn split_coefficient(term: &Expr) -> (BigRational, Option<Expr>) {
    match term.kind() {
        Kind::Num(r) => (r.clone(), None),
        Kind::Mul(fs) => match fs[0].kind() {
            Kind::Num(c) => {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let rest = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::from_kind(Kind::Mul(rest))
                };
                (c.clone(), Some(rest))
            }
            _ => (rat_one(), Some(term.clone())),
        },
        _ => (rat_one(), Some(term.clone())),
    }
}

/// Multiply an already-canonical non-numeric expression by a rational coefficient
/// without distributing over sums.
fn scale(coef: BigRational, rest: Expr) -> Expr {
    if coef.is_zero() {
        return Expr::zero();
    }
    if coef.is_one() {
        return rest;
    }
    let mut fs = vec![Expr::num(coef)];
    match rest.kind() {
        Kind::Mul(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    Expr::from_kind(Kind::Mul(fs))
}

pub fn add(terms: impl IntoIterator<Item = Expr>) -> Expr {
    let mut constant = BigRational::zero();
    let mut order: Vec<Expr> = Vec::new();
    let mut coeffs: HashMap<Expr, BigRational> = HashMap::new();
    let mut push = |t: &Expr, constant: &mut BigRational| {
        let (c, rest) = split_coefficient(t);
        match rest {
            None => *constant += c,
            Some(r) => match coeffs.get_mut(&r) {
                Some(acc) => *acc += c,
                None => {
                    order.push(r.clone());
                    coeffs.insert(r, c);
                }
            },
        }
    };
    for t in terms {
        match t.kind() {
            Kind::Add(inner) => {
                for u in inner {
                    push(u, &mut constant);
                }
            }
            _ => push(&t, &mut constant),
        }
    }
    let mut out: Vec<Expr> = Vec::with_capacity(order.len() + 1);
    order.sort();
    for r in order {
        let c = coeffs.remove(&r).unwrap();
        if !c.is_zero() {
            out.push(scale(c, r));
        }
    }
    if out.is_empty() {
        return Expr::num(constant);
    }
    if constant.is_zero() && out.len() == 1 {
        return out.pop().unwrap();
    }
    if !constant.is_zero() {
        out.insert(0, Expr::num(constant));
    }
    Expr::from_kind(Kind::Add(out))
}

/// Split a factor into (base, exponent).
fn split_power(f: &Expr) -> (Expr, Expr) {
    match f.kind() {
        Kind::Pow(b, e) => (b.clone(), e.clone()),
        _ => (f.clone(), Expr::one()),
    }
}

pub fn mul(factors: impl IntoIterator<Item = Expr>) -> Expr {
    let mut coef = BigRational::one();
    let mut order: Vec<Expr> = Vec::new();
    let mut exps: HashMap<Expr, Vec<Expr>> = HashMap::new();
    let mut stack: Vec<Expr> = factors.into_iter().collect();
    while let Some(f) = stack.pop() {
        match f.kind() {
            Kind::Num(r) => {
                if r.is_zero() {
                    return Expr::zero();
                }
                coef *= r;
            }
            Kind::Mul(inner) => stack.extend(inner.iter().cloned()),
            _ => {
                let (b, e) = split_power(&f);
                match exps.get_mut(&b) {
                    Some(v) => v.push(e),
                    None => {
                        order.push(b.clone());
                        exps.insert(b, vec![e]);
                    }
                }
            }
        }
    }
    order.sort();
    let mut out: Vec<Expr> = Vec::with_capacity(order.len());
    let mut again: Vec<Expr> = Vec::new();
    for b in order {
        let es = exps.remove(&b).unwrap();
        let e = if es.len() == 1 { es.into_iter().next().unwrap() } else { add(es) };
        let p = pow(b, e);
        match p.kind() {
            Kind::Num(r) => coef *= r,
            Kind::Mul(_) => again.push(p),
            _ => out.push(p),
        }
    }
    if coef.is_zero() {
        return Expr::zero();
    }
    if !again.is_empty() {
        let mut all = out;
        all.extend(again);
        all.push(Expr::num(coef));
        return mul(all);
    }
    if out.is_empty() {
        return Expr::num(coef);
    }
    if out.len() == 1 {
        let f = out.pop().unwrap();
        if coef.is_one() {
            return f;
        }
        // Distribute a numeric coefficient over a single sum so that linear
        // combinations cancel term by term.
        if let Kind::Add(ts) = f.kind() {
            return add(ts.iter().map(|t| scale_any(&coef, t)));
        }
        return scale(coef, f);
    }
    out.sort();
    if !coef.is_one() {
        out.insert(0, Expr::num(coef));
    }
    Expr::from_kind(Kind::Mul(out))
}

fn scale_any(coef: &BigRational, t: &Expr) -> Expr {
    let (c, rest) = split_coefficient(t);
    match rest {
        None => Expr::num(c * coef),
        Some(r) => scale(c * coef, r),
    }
}

fn rational_pow(base: &BigRational, exp: i64) -> Option<BigRational> {
    if exp.unsigned_abs() > 4096 {
        return None;
    }
    if base.is_zero() {
        return if exp > 0 { Some(BigRational::zero()) } else { None };
    }
    let p = num_traits::pow(base.clone(), exp.unsigned_abs() as usize);
    Some(if exp < 0 { p.recip() } else { p })
}

/// Exact k-th root of a non-negative integer, if it exists.
fn int_root(v: &BigInt, k: u32) -> Option<BigInt> {
    if v.is_negative() {
        return None;
    }
    let r = v.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *v).then_some(r)
}

pub fn pow(base: Expr, exp: Expr) -> Expr {
    if exp.is_zero() {
        return Expr::one();
    }
    if exp.is_one() {
        return base;
    }
    if base.is_one() {
        return Expr::one();
    }
    if let (Some(b), Some(e)) = (base.as_num(), exp.as_num()) {
        if e.is_integer() {
            if let Some(k) = e.to_integer().to_i64() {
                if let Some(v) = rational_pow(b, k) {
                    return Expr::num(v);
                }
            }
        } else if b.is_positive() {
            // Exact roots of perfect powers, e.g. 4^(1/2) = 2.
            if let Some(q) = e.denom().to_u32() {
                if let (Some(n), Some(d)) = (int_root(b.numer(), q), int_root(b.denom(), q)) {
                    if let Some(p) = e.numer().to_i64() {
                        if let Some(v) = rational_pow(&BigRational::new(n, d), p) {
                            return Expr::num(v);
                        }
                    }
                }
            }
        }
        return Expr::from_kind(Kind::Pow(base, exp));
    }
    if base.is_zero() {
        if let Some(e) = exp.as_num() {
            if e.is_positive() {
                return Expr::zero();
            }
        }
        return Expr::from_kind(Kind::Pow(base, exp));
    }
    let exp_is_int = exp.as_num().is_some_and(|e| e.is_integer());
    match base.kind() {
        Kind::Pow(b, e) if exp_is_int => pow(b.clone(), mul([e.clone(), exp])),
        Kind::Mul(fs) if exp_is_int => mul(fs.iter().map(|f| pow(f.clone(), exp.clone()))),
        _ => Expr::from_kind(Kind::Pow(base, exp)),
    }
}

pub fn func(f: Func, arg: Expr) -> Expr {
    if let Some(r) = arg.as_num() {
        if r.is_zero() {
            match f {
                Func::Exp | Func::Cos | Func::Cosh => return Expr::one(),
                Func::Sin | Func::Tan | Func::Sinh | Func::Tanh => return Expr::zero(),
                Func::Ln => {}
            }
        }
        if r.is_one() && f == Func::Ln {
            return Expr::zero();
        }
    }
    match (f, arg.kind()) {
        (Func::Ln, Kind::Func(Func::Exp, inner)) => inner.clone(),
        (Func::Exp, Kind::Func(Func::Ln, inner)) => inner.clone(),
        _ => Expr::from_kind(Kind::Func(f, arg)),
    }
}

impl Expr {
    pub fn add_all(terms: impl IntoIterator<Item = Expr>) -> Expr {
        add(terms)
    }

    pub fn mul_all(factors: impl IntoIterator<Item = Expr>) -> Expr {
        mul(factors)
    }

    pub fn pow(&self, exp: impl Into<Expr>) -> Expr {
        pow(self.clone(), exp.into())
    }

    pub fn powi(&self, k: i64) -> Expr {
        pow(self.clone(), Expr::int(k))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn sqrt(&self) -> Expr {
        pow(self.clone(), Expr::rational(1, 2))
    }

    pub fn apply(&self, f: Func) -> Expr {
        func(f, self.clone())
    }

    pub fn exp(&self) -> Expr {
        self.apply(Func::Exp)
    }

    pub fn ln(&self) -> Expr {
        self.apply(Func::Ln)
    }

    pub fn sin(&self) -> Expr {
        self.apply(Func::Sin)
    }

    pub fn cos(&self) -> Expr {
        self.apply(Func::Cos)
    }

    pub fn tan(&self) -> Expr {
        self.apply(Func::Tan)
    }

    pub fn sinh(&self) -> Expr {
        self.apply(Func::Sinh)
    }

    pub fn cosh(&self) -> Expr {
        self.apply(Func::Cosh)
    }

    pub fn tanh(&self) -> Expr {
        self.apply(Func::Tanh)
    }

    /// Structural substitution of variables or constants, re-canonicalizing on the way up.
    pub fn substitute(&self, map: &HashMap<super::Symbol, Expr>) -> Expr {
        let mut memo = HashMap::new();
        self.subst_rec(map, &mut memo)
    }

    fn subst_rec(&self, map: &HashMap<super::Symbol, Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.node_id()) {
            return e.clone();
        }
        let out = match self.kind() {
            Kind::Num(_) => self.clone(),
            Kind::Const(s) | Kind::Var(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Kind::Add(ts) => add(ts.iter().map(|t| t.subst_rec(map, memo))),
            Kind::Mul(fs) => mul(fs.iter().map(|t| t.subst_rec(map, memo))),
            Kind::Pow(b, e) => pow(b.subst_rec(map, memo), e.subst_rec(map, memo)),
            Kind::Func(f, a) => func(*f, a.subst_rec(map, memo)),
        };
        memo.insert(self.node_id(), out.clone());
        out
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<BigRational> for Expr {
    fn from(v: BigRational) -> Self {
        Expr::num(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl $tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::int(rhs))
            }
        }
        impl $tr<i64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::int(rhs))
            }
        }
    };
}

binop!(Add, add, |a, b| add([a, b]));
binop!(Sub, sub, |a, b| add([a, mul([Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| mul([a, b]));
binop!(Div, div, |a, b| mul([a, pow(b, Expr::int(-1))]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        mul([Expr::int(-1), self])
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        mul([Expr::int(-1), self.clone()])
    }
}

impl num_traits::Zero for Expr {
    fn zero() -> Self {
        Expr::zero()
    }
    fn is_zero(&self) -> bool {
        Expr::is_zero(self)
    }
}

impl num_traits::One for Expr {
    fn one() -> Self {
        Expr::one()
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Self {
        add(iter)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Self {
        mul(iter)
    }
}

macro_rules! int_lhs {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::int(self).$m(rhs)
            }
        }
        impl $tr<&Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::int(self).$m(rhs)
            }
        }
    };
}

int_lhs!(Add, add);
int_lhs!(Sub, sub);
int_lhs!(Mul, mul);
int_lhs!(Div, div);

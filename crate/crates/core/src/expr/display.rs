//! Infix printer whose output parses back to the same expression.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Kind};

// Binding strength of the printed form of a node.
const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_NEG: u8 = 3;
const P_POW: u8 = 4;
const P_ATOM: u8 = 5;

fn num_prec(r: &BigRational) -> u8 {
    if r.is_negative() {
        P_NEG
    } else if r.is_integer() {
        P_ATOM
    } else {
        P_MUL
    }
}

fn prec(e: &Expr) -> u8 {
    match e.kind() {
        Kind::Num(r) => num_prec(r),
        Kind::Const(_) | Kind::Var(_) | Kind::Func(..) => P_ATOM,
        Kind::Add(_) => P_ADD,
        Kind::Mul(fs) => {
            if fs[0].as_num().is_some_and(|c| c.is_negative()) {
                P_NEG
            } else {
                P_MUL
            }
        }
        Kind::Pow(_, x) => {
            if x.as_num().is_some_and(|r| r.is_negative()) {
                P_MUL
            } else {
                P_POW
            }
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Write a product of non-numeric factors, moving negative numeric powers
/// into a denominator.
fn write_factors(f: &mut fmt::Formatter<'_>, coef: Option<&BigRational>, fs: &[Expr]) -> fmt::Result {
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for x in fs {
        match x.kind() {
            Kind::Pow(b, e) if e.as_num().is_some_and(|r| r.is_negative()) => {
                den.push(b.pow(Expr::num(-e.as_num().unwrap().clone())));
            }
            _ => num.push(x.clone()),
        }
    }
    let (c_num, c_den) = match coef {
        Some(c) => (c.numer().clone(), c.denom().clone()),
        None => (1.into(), 1.into()),
    };
    let mut first = true;
    if c_num != 1.into() || num.is_empty() {
        write!(f, "{c_num}")?;
        first = false;
    }
    for x in &num {
        if !first {
            f.write_str("*")?;
        }
        wrap(f, x, P_POW)?;
        first = false;
    }
    if c_den != 1.into() || !den.is_empty() {
        f.write_str("/")?;
        let count = den.len() + usize::from(c_den != 1.into());
        if count > 1 {
            f.write_str("(")?;
        }
        let mut first = true;
        if c_den != 1.into() {
            write!(f, "{c_den}")?;
            first = false;
        }
        for x in &den {
            if !first {
                f.write_str("*")?;
            }
            wrap(f, x, P_POW)?;
            first = false;
        }
        if count > 1 {
            f.write_str(")")?;
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Num(r) => write_num(f, r),
            Kind::Const(s) | Kind::Var(s) => write!(f, "{s}"),
            Kind::Func(func, a) => write!(f, "{}({a})", func.name()),
            Kind::Pow(b, e) => {
                if let Some(r) = e.as_num() {
                    if r.is_negative() {
                        return write_factors(f, None, std::slice::from_ref(self));
                    }
                    if *r == BigRational::new(1.into(), 2.into()) {
                        return write!(f, "sqrt({b})");
                    }
                }
                wrap(f, b, P_ATOM)?;
                f.write_str("^")?;
                wrap(f, e, P_ATOM)
            }
            Kind::Mul(fs) => match fs[0].as_num() {
                Some(c) if c.is_negative() => {
                    f.write_str("-")?;
                    let c = -c;
                    if c.is_one() && fs.len() == 2 && prec(&fs[1]) < P_MUL {
                        return wrap(f, &fs[1], P_MUL);
                    }
                    write_factors(f, Some(&c), &fs[1..])
                }
                Some(c) => write_factors(f, Some(c), &fs[1..]),
                None => write_factors(f, None, fs),
            },
            Kind::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    let negated = match t.kind() {
                        Kind::Num(r) if r.is_negative() => Some(Expr::num(-r.clone())),
                        Kind::Mul(fs) if fs[0].as_num().is_some_and(|c| c.is_negative()) => Some(-t),
                        _ => None,
                    };
                    match (i, negated) {
                        (0, _) => write!(f, "{t}")?,
                        (_, Some(n)) => {
                            f.write_str(" - ")?;
                            wrap(f, &n, P_MUL)?;
                        }
                        (_, None) => write!(f, " + {t}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

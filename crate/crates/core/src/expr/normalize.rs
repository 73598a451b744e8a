//! Rational normalization and probabilistic zero testing.

use std::collections::HashMap;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::build::{add, mul, pow};
use super::eval::Bindings;
use super::{Expr, Kind, Symbol};

/// Number of random points used by the numeric zero test.
pub const ZERO_TEST_POINTS: usize = 25;
/// Relative threshold of the numeric zero test.
pub const ZERO_TEST_THRESHOLD: f64 = 1e-10;

const EXPAND_BUDGET: usize = 4000;
const MAX_EXPAND_POWER: i64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroVerdict {
    SymbolicallyZero,
    NumericallyZero,
    Nonzero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("inconclusive zero test: only {valid} of {needed} sample points passed the domain guards")]
pub struct InconclusiveZeroTest {
    pub valid: usize,
    pub needed: usize,
}

/// Sampling context for [`ZeroTest::check`]: a coordinate box and constant values.
#[derive(Debug, Clone)]
pub struct ZeroTest {
    pub domain: Vec<(Symbol, f64, f64)>,
    pub consts: HashMap<Symbol, f64>,
    pub seed: u64,
    pub points: usize,
}

impl ZeroTest {
    pub fn new(domain: Vec<(Symbol, f64, f64)>) -> Self {
        ZeroTest { domain, consts: HashMap::new(), seed: 42, points: ZERO_TEST_POINTS }
    }

    pub fn with_const(mut self, name: impl Into<Symbol>, v: f64) -> Self {
        self.consts.insert(name.into(), v);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Normalize `e` and decide whether it vanishes identically on the box.
    pub fn check(&self, e: &Expr) -> Result<(Expr, ZeroVerdict), InconclusiveZeroTest> {
        let normal = e.normalize();
        if normal.is_zero() {
            return Ok((normal, ZeroVerdict::SymbolicallyZero));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut valid = 0;
        let mut attempts = 0;
        while valid < self.points && attempts < 10 * self.points {
            attempts += 1;
            let mut b = Bindings::new();
            for (s, v) in &self.consts {
                b.set_const(*s, *v);
            }
            for (s, lo, hi) in &self.domain {
                b.set_var(*s, if hi > lo { rng.gen_range(*lo..*hi) } else { *lo });
            }
            let (Ok(v), Ok(scale)) = (e.eval(&b), e.term_scale(&b)) else {
                continue;
            };
            valid += 1;
            if v.abs() > ZERO_TEST_THRESHOLD * (1.0 + scale) {
                return Ok((normal, ZeroVerdict::Nonzero));
            }
        }
        if valid < self.points {
            return Err(InconclusiveZeroTest { valid, needed: self.points });
        }
        Ok((normal, ZeroVerdict::NumericallyZero))
    }
}

impl Expr {
    /// Distribute products over sums and expand small positive integer powers
    /// of sums. Returns `None` if the result would exceed the term budget.
    pub fn expand(&self) -> Option<Expr> {
        self.expand_within(EXPAND_BUDGET)
    }

    /// As [`Expr::expand`] with an explicit term budget.
    pub fn expand_within(&self, budget: usize) -> Option<Expr> {
        let mut memo = HashMap::new();
        self.expand_rec(budget, &mut memo)
    }

    fn expand_rec(&self, budget: usize, memo: &mut HashMap<usize, Expr>) -> Option<Expr> {
        if let Some(e) = memo.get(&self.node_id()) {
            return Some(e.clone());
        }
        let out = match self.kind() {
            Kind::Num(_) | Kind::Const(_) | Kind::Var(_) => self.clone(),
            Kind::Add(ts) => {
                let mut v = Vec::with_capacity(ts.len());
                for t in ts {
                    v.push(t.expand_rec(budget, memo)?);
                }
                add(v)
            }
            Kind::Mul(fs) => {
                let mut acc = Expr::one();
                for f in fs {
                    acc = distribute(&acc, &f.expand_rec(budget, memo)?, budget)?;
                }
                acc
            }
            Kind::Pow(b, e) => {
                let b = b.expand_rec(budget, memo)?;
                let e = e.expand_rec(budget, memo)?;
                match (b.kind(), e.as_integer()) {
                    (Kind::Add(_), Some(k)) if (2..=MAX_EXPAND_POWER).contains(&k) => {
                        let mut acc = b.clone();
                        for _ in 1..k {
                            acc = distribute(&acc, &b, budget)?;
                        }
                        acc
                    }
                    _ => pow(b, e),
                }
            }
            Kind::Func(f, a) => super::build::func(*f, a.expand_rec(budget, memo)?),
        };
        memo.insert(self.node_id(), out.clone());
        Some(out)
    }

    /// Split into numerator and denominator over a common denominator.
    pub fn together(&self) -> (Expr, Expr) {
        match self.kind() {
            Kind::Add(ts) => {
                let mut num = Expr::zero();
                let mut den = Expr::one();
                for t in ts {
                    let (n, d) = t.together();
                    if d == den {
                        num = add([num, n]);
                    } else {
                        num = add([mul([num, d.clone()]), mul([n, den.clone()])]);
                        den = mul([den, d]);
                    }
                }
                (num, den)
            }
            Kind::Mul(fs) => {
                let mut nums = Vec::with_capacity(fs.len());
                let mut dens = Vec::new();
                for f in fs {
                    let (n, d) = f.together();
                    nums.push(n);
                    dens.push(d);
                }
                (mul(nums), mul(dens))
            }
            Kind::Pow(b, e) => match e.as_num() {
                Some(r) if r.is_negative() => {
                    let pos = Expr::num(-r.clone());
                    if r.is_integer() {
                        let (n, d) = b.together();
                        (pow(d, pos.clone()), pow(n, pos))
                    } else {
                        (Expr::one(), pow(b.clone(), pos))
                    }
                }
                _ => (self.clone(), Expr::one()),
            },
            _ => (self.clone(), Expr::one()),
        }
    }

    /// Rationally normalized form: expanded numerator over expanded denominator.
    /// Falls back to `self` when expansion exceeds its budget.
    pub fn normalize(&self) -> Expr {
        self.normalize_within(EXPAND_BUDGET)
    }

    /// As [`Expr::normalize`] with an explicit term budget for the expansions.
    pub fn normalize_within(&self, budget: usize) -> Expr {
        let (n, d) = self.together();
        let Some(n) = n.expand_within(budget) else {
            return self.clone();
        };
        if n.is_zero() {
            return n;
        }
        let d = d.expand_within(budget).unwrap_or(d);
        if d.is_one() {
            n
        } else {
            n / d
        }
    }

    /// Number of top-level additive terms.
    pub fn term_count(&self) -> usize {
        match self.kind() {
            Kind::Add(ts) => ts.len(),
            _ => 1,
        }
    }
}

fn terms(e: &Expr) -> Vec<Expr> {
    match e.kind() {
        Kind::Add(ts) => ts.clone(),
        _ => vec![e.clone()],
    }
}

fn distribute(a: &Expr, b: &Expr, budget: usize) -> Option<Expr> {
    let ta = terms(a);
    let tb = terms(b);
    if ta.len() * tb.len() > budget {
        return None;
    }
    let mut out = Vec::with_capacity(ta.len() * tb.len());
    for x in &ta {
        for y in &tb {
            out.push(mul([x.clone(), y.clone()]));
        }
    }
    let r = add(out);
    (r.term_count() <= budget).then_some(r)
}

/// Shorthand for a zero test over a box where every listed variable ranges over `[lo, hi]`.
pub fn is_zero_on(e: &Expr, vars: &[&str], lo: f64, hi: f64) -> Result<ZeroVerdict, InconclusiveZeroTest> {
    let domain = vars.iter().map(|v| (Symbol::new(v), lo, hi)).collect();
    ZeroTest::new(domain).check(e).map(|(_, v)| v)
}

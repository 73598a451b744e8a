use std::collections::HashMap;

use super::build::{add, func, mul, pow};
use super::{Expr, Func, Kind, Symbol};

type Memo = HashMap<usize, (Expr, Expr)>;

/// Derivative memo that outlives a single [`Expr::diff_cached`] call. Entries
/// keep their source node alive so node ids cannot be recycled.
#[derive(Default)]
pub struct DiffCache {
    memos: HashMap<Symbol, Memo>,
}

impl DiffCache {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Expr {
    /// Exact partial derivative with respect to `var`. Constants differentiate to zero.
    pub fn diff(&self, var: impl Into<Symbol>) -> Expr {
        let var = var.into();
        let mut memo = HashMap::new();
        self.diff_rec(var, &mut memo)
    }

    /// Derivative reusing the memo in `cache`, so subterms shared between
    /// many expressions are differentiated once.
    pub fn diff_cached(&self, var: impl Into<Symbol>, cache: &mut DiffCache) -> Expr {
        let var = var.into();
        self.diff_rec(var, cache.memos.entry(var).or_default())
    }

    /// Repeated partial derivative, one variable per entry of `vars`.
    pub fn diff_many(&self, vars: &[Symbol]) -> Expr {
        vars.iter().fold(self.clone(), |e, v| e.diff(*v))
    }

    fn diff_rec(&self, var: Symbol, memo: &mut Memo) -> Expr {
        if !self.may_depend_on(var) {
            return Expr::zero();
        }
        if let Some((_, d)) = memo.get(&self.node_id()) {
            return d.clone();
        }
        let d = match self.kind() {
            Kind::Num(_) | Kind::Const(_) => Expr::zero(),
            Kind::Var(s) => {
                if *s == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Add(ts) => add(ts.iter().map(|t| t.diff_rec(var, memo))),
            Kind::Mul(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for i in 0..fs.len() {
                    let di = fs[i].diff_rec(var, memo);
                    if di.is_zero() {
                        continue;
                    }
                    let mut parts: Vec<Expr> = Vec::with_capacity(fs.len());
                    for (j, f) in fs.iter().enumerate() {
                        parts.push(if i == j { di.clone() } else { f.clone() });
                    }
                    terms.push(mul(parts));
                }
                add(terms)
            }
            Kind::Pow(b, e) => {
                let db = b.diff_rec(var, memo);
                if !e.may_depend_on(var) {
                    if db.is_zero() {
                        Expr::zero()
                    } else {
                        let e_minus_one = add([e.clone(), Expr::int(-1)]);
                        mul([e.clone(), pow(b.clone(), e_minus_one), db])
                    }
                } else {
                    let de = e.diff_rec(var, memo);
                    let log_part = mul([de, func(Func::Ln, b.clone())]);
                    let base_part = mul([e.clone(), db, pow(b.clone(), Expr::int(-1))]);
                    mul([self.clone(), add([log_part, base_part])])
                }
            }
            Kind::Func(f, a) => {
                let da = a.diff_rec(var, memo);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match f {
                        Func::Exp => self.clone(),
                        Func::Ln => pow(a.clone(), Expr::int(-1)),
                        Func::Sin => func(Func::Cos, a.clone()),
                        Func::Cos => mul([Expr::int(-1), func(Func::Sin, a.clone())]),
                        Func::Tan => add([Expr::one(), pow(self.clone(), Expr::int(2))]),
                        Func::Sinh => func(Func::Cosh, a.clone()),
                        Func::Cosh => func(Func::Sinh, a.clone()),
                        Func::Tanh => add([Expr::one(), mul([Expr::int(-1), pow(self.clone(), Expr::int(2))])]),
                    };
                    mul([outer, da])
                }
            }
        };
        memo.insert(self.node_id(), (self.clone(), d.clone()));
        d
    }
}

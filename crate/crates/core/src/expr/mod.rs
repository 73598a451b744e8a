//! Immutable symbolic expressions over coordinates and named constants.
//!
//! Every constructor goes through the smart constructors in [`build`], which
//! keep sums and products flattened, collect like terms and fold exact
//! rational arithmetic. Nodes are reference counted and carry a structural
//! hash, so large derivative DAGs share subtrees and compare cheaply.

pub(crate) mod build;
mod diff;
mod display;
mod eval;
mod normalize;
mod symbol;
mod tape;

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub use diff::DiffCache;
pub use eval::{Bindings, EvalError, DEN_GUARD};
pub use normalize::{is_zero_on, InconclusiveZeroTest, ZeroTest, ZeroVerdict, ZERO_TEST_POINTS, ZERO_TEST_THRESHOLD};
pub use symbol::Symbol;
pub use tape::Tape;

use symbol::fnv1a;

/// Elementary unary functions. Square roots are stored as powers with exponent 1/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Kind {
    Num(BigRational),
    Const(Symbol),
    Var(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Func(Func, Expr),
}

#[derive(Debug)]
pub(crate) struct Node {
    kind: Kind,
    hash: u64,
    vars: u64,
}

/// A shared, immutable expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

/// Borrowed view of an expression node, for code that walks the tree.
#[derive(Debug)]
pub enum View<'a> {
    Num(&'a BigRational),
    Const(Symbol),
    Var(Symbol),
    Add(&'a [Expr]),
    Mul(&'a [Expr]),
    Pow(&'a Expr, &'a Expr),
    Func(Func, &'a Expr),
}

fn mix(h: u64, v: u64) -> u64 {
    (h ^ v.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2))
        .wrapping_mul(0x1000_0000_01b3)
}

fn hash_bigint(v: &BigInt) -> u64 {
    let (sign, digits) = v.to_u64_digits();
    let mut h = match sign {
        num_bigint::Sign::Minus => 1,
        num_bigint::Sign::NoSign => 2,
        num_bigint::Sign::Plus => 3,
    };
    for d in digits {
        h = mix(h, d);
    }
    h
}

impl Expr {
    pub(crate) fn from_kind(kind: Kind) -> Expr {
        let (hash, vars) = match &kind {
            Kind::Num(r) => (mix(mix(11, hash_bigint(r.numer())), hash_bigint(r.denom())), 0),
            Kind::Const(s) => (mix(13, s.stable_hash()), 0),
            Kind::Var(s) => (mix(17, s.stable_hash()), s.mask_bit()),
            Kind::Add(ts) => ts.iter().fold((19, 0), |(h, v), t| (mix(h, t.0.hash), v | t.0.vars)),
            Kind::Mul(fs) => fs.iter().fold((23, 0), |(h, v), t| (mix(h, t.0.hash), v | t.0.vars)),
            Kind::Pow(b, e) => (mix(mix(29, b.0.hash), e.0.hash), b.0.vars | e.0.vars),
            Kind::Func(f, a) => (mix(mix(31, fnv1a(f.name().as_bytes())), a.0.hash), a.0.vars),
        };
        Expr(Arc::new(Node { kind, hash, vars }))
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn view(&self) -> View<'_> {
        match &self.0.kind {
            Kind::Num(r) => View::Num(r),
            Kind::Const(s) => View::Const(*s),
            Kind::Var(s) => View::Var(*s),
            Kind::Add(ts) => View::Add(ts),
            Kind::Mul(fs) => View::Mul(fs),
            Kind::Pow(b, e) => View::Pow(b, e),
            Kind::Func(f, a) => View::Func(*f, a),
        }
    }

    pub(crate) fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    // ---- leaves -------------------------------------------------------

    pub fn num(r: BigRational) -> Expr {
        Expr::from_kind(Kind::Num(r))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// A coordinate or other independent variable.
    pub fn var(name: impl Into<Symbol>) -> Expr {
        Expr::from_kind(Kind::Var(name.into()))
    }

    /// A named constant (parameter); differentiates to zero.
    pub fn constant(name: impl Into<Symbol>) -> Expr {
        Expr::from_kind(Kind::Const(name.into()))
    }

    // ---- queries ------------------------------------------------------

    pub fn as_num(&self) -> Option<&BigRational> {
        match &self.0.kind {
            Kind::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_one())
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_num().filter(|r| r.is_integer()).and_then(|r| r.to_integer().to_i64())
    }

    /// Cheap mask test. False is exact; true may be a false positive when two
    /// variable names share a mask bit.
    pub fn may_depend_on(&self, var: Symbol) -> bool {
        self.0.vars & var.mask_bit() != 0
    }

    /// Exact dependency test.
    pub fn depends_on(&self, var: Symbol) -> bool {
        if self.0.vars & var.mask_bit() == 0 {
            return false;
        }
        match &self.0.kind {
            Kind::Num(_) | Kind::Const(_) => false,
            Kind::Var(s) => *s == var,
            Kind::Add(ts) | Kind::Mul(ts) => ts.iter().any(|t| t.depends_on(var)),
            Kind::Pow(b, e) => b.depends_on(var) || e.depends_on(var),
            Kind::Func(_, a) => a.depends_on(var),
        }
    }

    /// True when no coordinate/state variable appears (only numbers and constants).
    pub fn is_constant(&self) -> bool {
        self.0.vars == 0
    }

    /// Free symbols split into (variables, constants), each sorted.
    pub fn free_symbols(&self) -> (Vec<Symbol>, Vec<Symbol>) {
        let mut vars = Vec::new();
        let mut consts = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.node_id()) {
                continue;
            }
            match &e.0.kind {
                Kind::Num(_) => {}
                Kind::Const(s) => consts.push(*s),
                Kind::Var(s) => vars.push(*s),
                Kind::Add(ts) | Kind::Mul(ts) => stack.extend(ts.iter().cloned()),
                Kind::Pow(b, x) => {
                    stack.push(b.clone());
                    stack.push(x.clone());
                }
                Kind::Func(_, a) => stack.push(a.clone()),
            }
        }
        vars.sort();
        vars.dedup();
        consts.sort();
        consts.dedup();
        (vars, consts)
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.node_id()) {
                continue;
            }
            match &e.0.kind {
                Kind::Add(ts) | Kind::Mul(ts) => stack.extend(ts.iter().cloned()),
                Kind::Pow(b, x) => {
                    stack.push(b.clone());
                    stack.push(x.clone());
                }
                Kind::Func(_, a) => stack.push(a.clone()),
                _ => {}
            }
        }
        seen.len()
    }

    fn rank(&self) -> u8 {
        match &self.0.kind {
            Kind::Num(_) => 0,
            Kind::Const(_) => 1,
            Kind::Var(_) => 2,
            Kind::Func(..) => 3,
            Kind::Pow(..) => 4,
            Kind::Mul(_) => 5,
            Kind::Add(_) => 6,
        }
    }

    fn structurally_equal(&self, other: &Expr) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.vars != other.0.vars {
            return false;
        }
        match (&self.0.kind, &other.0.kind) {
            (Kind::Num(a), Kind::Num(b)) => a == b,
            (Kind::Const(a), Kind::Const(b)) | (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::Add(a), Kind::Add(b)) | (Kind::Mul(a), Kind::Mul(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.structurally_equal(y))
            }
            (Kind::Pow(a, x), Kind::Pow(b, y)) => a.structurally_equal(b) && x.structurally_equal(y),
            (Kind::Func(f, a), Kind::Func(g, b)) => f == g && a.structurally_equal(b),
            _ => false,
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.structurally_equal(other)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical ordering: numbers, constants, variables, functions, powers, products, sums.
/// Atoms order by value or name; composite nodes by structural hash with a
/// structural tie-break.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let r = self.rank().cmp(&other.rank());
        if r != Ordering::Equal {
            return r;
        }
        match (&self.0.kind, &other.0.kind) {
            (Kind::Num(a), Kind::Num(b)) => a.cmp(b),
            (Kind::Const(a), Kind::Const(b)) | (Kind::Var(a), Kind::Var(b)) => a.cmp(b),
            (Kind::Func(f, a), Kind::Func(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            (Kind::Pow(a, x), Kind::Pow(b, y)) => a.cmp(b).then_with(|| x.cmp(y)),
            (Kind::Add(a), Kind::Add(b)) | (Kind::Mul(a), Kind::Mul(b)) => {
                match self.0.hash.cmp(&other.0.hash) {
                    Ordering::Equal => {
                        for (x, y) in a.iter().zip(b) {
                            let c = x.cmp(y);
                            if c != Ordering::Equal {
                                return c;
                            }
                        }
                        a.len().cmp(&b.len())
                    }
                    c => c,
                }
            }
            _ => Ordering::Equal,
        }
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({self})")
    }
}

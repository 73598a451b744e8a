//! Straight-line evaluation program for many expressions sharing subterms.

use std::collections::HashMap;

use super::eval::{apply_func, apply_pow, num_value, Bindings, EvalError};
use super::{Expr, Func, Kind, Symbol};
use crate::scalar::Real;

#[derive(Debug, Clone)]
enum Op {
    Lit(f64),
    Var(u32),
    Const(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Pow(u32, u32),
    Func(Func, u32),
}

/// Compiled form of a list of expressions with common subexpressions merged.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    args: Vec<u32>,
    outputs: Vec<u32>,
    vars: Vec<Symbol>,
    consts: Vec<Symbol>,
}

struct Compiler<'a> {
    ops: Vec<Op>,
    args: Vec<u32>,
    by_ptr: HashMap<usize, u32>,
    by_value: HashMap<Expr, u32>,
    var_slot: &'a HashMap<Symbol, u32>,
    consts: Vec<Symbol>,
    const_slot: HashMap<Symbol, u32>,
}

impl Compiler<'_> {
    fn emit(&mut self, e: &Expr) -> Result<u32, EvalError> {
        if let Some(&i) = self.by_ptr.get(&e.node_id()) {
            return Ok(i);
        }
        if let Some(&i) = self.by_value.get(e) {
            self.by_ptr.insert(e.node_id(), i);
            return Ok(i);
        }
        let op = match e.kind() {
            Kind::Num(r) => Op::Lit(num_value::<f64>(r)),
            Kind::Var(s) => match self.var_slot.get(s) {
                Some(&k) => Op::Var(k),
                None => Op::Const(self.const_index(*s)),
            },
            Kind::Const(s) => match self.var_slot.get(s) {
                Some(&k) => Op::Var(k),
                None => Op::Const(self.const_index(*s)),
            },
            Kind::Add(ts) | Kind::Mul(ts) => {
                let mut idx = Vec::with_capacity(ts.len());
                for t in ts {
                    idx.push(self.emit(t)?);
                }
                let start = self.args.len() as u32;
                self.args.extend(idx);
                let end = self.args.len() as u32;
                if matches!(e.kind(), Kind::Add(_)) {
                    Op::Add(start, end)
                } else {
                    Op::Mul(start, end)
                }
            }
            Kind::Pow(b, x) => {
                let bi = self.emit(b)?;
                let xi = self.emit(x)?;
                Op::Pow(bi, xi)
            }
            Kind::Func(f, a) => {
                let ai = self.emit(a)?;
                Op::Func(*f, ai)
            }
        };
        let i = self.ops.len() as u32;
        self.ops.push(op);
        self.by_ptr.insert(e.node_id(), i);
        self.by_value.insert(e.clone(), i);
        Ok(i)
    }

    fn const_index(&mut self, s: Symbol) -> u32 {
        if let Some(&k) = self.const_slot.get(&s) {
            return k;
        }
        let k = self.consts.len() as u32;
        self.consts.push(s);
        self.const_slot.insert(s, k);
        k
    }
}

impl Tape {
    /// Compile `exprs`; symbols listed in `vars` become positional inputs, every
    /// other symbol becomes a named constant (see [`Tape::consts`]).
    pub fn compile(exprs: &[Expr], vars: &[Symbol]) -> Tape {
        let var_slot: HashMap<Symbol, u32> = vars.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let mut c = Compiler {
            ops: Vec::new(),
            args: Vec::new(),
            by_ptr: HashMap::new(),
            by_value: HashMap::new(),
            var_slot: &var_slot,
            consts: Vec::new(),
            const_slot: HashMap::new(),
        };
        let mut outputs = Vec::with_capacity(exprs.len());
        for e in exprs {
            outputs.push(c.emit(e).expect("tape compilation is total"));
        }
        Tape { ops: c.ops, args: c.args, outputs, vars: vars.to_vec(), consts: c.consts }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    /// Constants the tape expects, in slot order.
    pub fn consts(&self) -> &[Symbol] {
        &self.consts
    }

    /// Evaluate every output. `scratch` is reused between calls to avoid allocation.
    pub fn eval_into<T: Real>(
        &self,
        vars: &[T],
        consts: &[T],
        scratch: &mut Vec<T>,
        out: &mut Vec<T>,
    ) -> Result<(), EvalError> {
        if vars.len() < self.vars.len() {
            return Err(EvalError::UnboundSymbol(self.vars[vars.len()].name().to_string()));
        }
        if consts.len() < self.consts.len() {
            return Err(EvalError::UnboundSymbol(self.consts[consts.len()].name().to_string()));
        }
        scratch.clear();
        scratch.reserve(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Lit(v) => T::lit(*v),
                Op::Var(k) => vars[*k as usize],
                Op::Const(k) => consts[*k as usize],
                Op::Add(s, e) => {
                    let mut acc = T::zero();
                    for a in &self.args[*s as usize..*e as usize] {
                        acc = acc + scratch[*a as usize];
                    }
                    acc
                }
                Op::Mul(s, e) => {
                    let mut acc = T::one();
                    for a in &self.args[*s as usize..*e as usize] {
                        acc = acc * scratch[*a as usize];
                    }
                    acc
                }
                Op::Pow(b, x) => apply_pow(scratch[*b as usize], scratch[*x as usize])?,
                Op::Func(f, a) => apply_func(*f, scratch[*a as usize])?,
            };
            if !v.is_finite() {
                return Err(EvalError::DomainViolation("non-finite intermediate".into()));
            }
            scratch.push(v);
        }
        out.clear();
        out.extend(self.outputs.iter().map(|i| scratch[*i as usize]));
        Ok(())
    }

    pub fn eval<T: Real>(&self, vars: &[T], consts: &[T]) -> Result<Vec<T>, EvalError> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.eval_into(vars, consts, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Evaluate with every symbol looked up in `b` (variables first).
    pub fn eval_bindings<T: Real>(&self, b: &Bindings<T>) -> Result<Vec<T>, EvalError> {
        let lookup = |s: &Symbol| {
            b.var(*s).or_else(|| b.constant(*s)).ok_or_else(|| EvalError::UnboundSymbol(s.name().to_string()))
        };
        let vars = self.vars.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
        let consts = self.consts.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
        self.eval(&vars, &consts)
    }

    /// Resolve constant slots from `values` by name.
    pub fn const_values<T: Real>(&self, values: &HashMap<Symbol, T>) -> Result<Vec<T>, EvalError> {
        self.consts
            .iter()
            .map(|s| values.get(s).copied().ok_or_else(|| EvalError::UnboundSymbol(s.name().to_string())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Bindings;

    #[test]
    fn shares_subterms_and_matches_tree_eval() {
        let x = Expr::var("x");
        let c = Expr::constant("c");
        let u = (&x * &c + 1).exp();
        let a = &u * &u + &x;
        let b = u.ln() / (&x + 2);
        let tape = Tape::compile(&[a.clone(), b.clone()], &[Symbol::new("x")]);
        let out = tape.eval(&[0.3f64], &[2.0]).unwrap();
        let bind = Bindings::new().with_var("x", 0.3).with_const("c", 2.0);
        assert!((out[0] - a.eval(&bind).unwrap()).abs() < 1e-14);
        assert!((out[1] - b.eval(&bind).unwrap()).abs() < 1e-14);
        assert!(tape.len() < a.dag_size() + b.dag_size());
    }

    #[test]
    fn guards_apply_on_tape() {
        let x = Expr::var("x");
        let tape = Tape::compile(&[x.ln()], &[Symbol::new("x")]);
        assert!(matches!(tape.eval(&[-1.0f64], &[]), Err(EvalError::DomainViolation(_))));
    }
}

use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::{ConstDecl, DslError, FuncDecl, ManifoldSpec};
use crate::expr::{Expr, Func, Symbol};

/// Names that cannot be redeclared.
const RESERVED: &[&str] = &[
    "exp", "ln", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt", "diff", "manifold", "dim", "coords",
    "domain", "const", "func", "lambda", "metric", "diag", "in",
];

#[derive(Default)]
struct Scope {
    coords: Vec<Symbol>,
    consts: HashMap<String, Symbol>,
    funcs: HashMap<String, FuncDecl>,
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> &'a Token {
        let t = self.peek();
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_op(&self, c: char) -> bool {
        self.peek().tok == Tok::Op(c)
    }

    fn expect_op(&mut self, c: char) -> Result<(), DslError> {
        let t = self.next();
        if t.tok == Tok::Op(c) {
            Ok(())
        } else {
            Err(syntax(t, format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<(String, &'a Token), DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t)),
            _ => Err(syntax(t, "expected a name".into())),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            _ => Err(syntax(t, format!("expected `{kw}`"))),
        }
    }

    fn end(&mut self) -> Result<(), DslError> {
        let t = self.peek();
        if t.tok == Tok::Eof {
            Ok(())
        } else {
            Err(syntax(t, "unexpected trailing input".into()))
        }
    }
}

fn syntax(t: &Token, msg: String) -> DslError {
    let msg = match &t.tok {
        Tok::Eof => format!("{msg}, found end of line"),
        _ => msg,
    };
    DslError::Syntax { line: t.line, col: t.col, msg }
}

fn dim_err(t: &Token, msg: String) -> DslError {
    DslError::DimensionMismatch { line: t.line, col: t.col, msg }
}

impl Scope {
    fn expr(&self, c: &mut Cursor) -> Result<Expr, DslError> {
        let mut acc = self.term(c)?;
        loop {
            if c.at_op('+') {
                c.next();
                acc = acc + self.term(c)?;
            } else if c.at_op('-') {
                c.next();
                acc = acc - self.term(c)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&self, c: &mut Cursor) -> Result<Expr, DslError> {
        let mut acc = self.unary(c)?;
        loop {
            if c.at_op('*') {
                c.next();
                acc = acc * self.unary(c)?;
            } else if c.at_op('/') {
                c.next();
                acc = acc / self.unary(c)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&self, c: &mut Cursor) -> Result<Expr, DslError> {
        if c.at_op('-') {
            c.next();
            return Ok(-self.unary(c)?);
        }
        if c.at_op('+') {
            c.next();
            return self.unary(c);
        }
        self.power(c)
    }

    // Right associative; the exponent may carry its own unary minus.
    fn power(&self, c: &mut Cursor) -> Result<Expr, DslError> {
        let base = self.atom(c)?;
        if c.at_op('^') {
            c.next();
            let exp = self.unary(c)?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn args(&self, c: &mut Cursor) -> Result<Vec<Expr>, DslError> {
        c.expect_op('(')?;
        let mut out = vec![self.expr(c)?];
        while c.at_op(',') {
            c.next();
            out.push(self.expr(c)?);
        }
        c.expect_op(')')?;
        Ok(out)
    }

    fn atom(&self, c: &mut Cursor) -> Result<Expr, DslError> {
        let t = c.next();
        match &t.tok {
            Tok::Num(r) => Ok(Expr::num(r.clone())),
            Tok::Op('(') => {
                let e = self.expr(c)?;
                c.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let call = c.at_op('(');
                if call {
                    return self.call(c, name, t);
                }
                if let Some(s) = self.coords.iter().find(|s| &*s.name() == name.as_str()) {
                    return Ok(Expr::var(*s));
                }
                if let Some(s) = self.consts.get(name) {
                    return Ok(Expr::constant(*s));
                }
                Err(DslError::UndeclaredSymbol { line: t.line, col: t.col, name: name.clone() })
            }
            _ => Err(syntax(t, "expected an expression".into())),
        }
    }

    fn call(&self, c: &mut Cursor, name: &str, t: &Token) -> Result<Expr, DslError> {
        let args = self.args(c)?;
        let arity = |k: usize| -> Result<(), DslError> {
            if args.len() == k {
                Ok(())
            } else {
                Err(syntax(t, format!("`{name}` takes {k} argument(s), got {}", args.len())))
            }
        };
        if let Some(f) = Func::from_name(name) {
            arity(1)?;
            return Ok(args[0].apply(f));
        }
        match name {
            "sqrt" => {
                arity(1)?;
                Ok(args[0].sqrt())
            }
            "diff" => {
                arity(2)?;
                match args[1].view() {
                    crate::expr::View::Var(s) => Ok(args[0].diff(s)),
                    _ => Err(syntax(t, "second argument of `diff` must be a coordinate".into())),
                }
            }
            _ => {
                let f = self
                    .funcs
                    .get(name)
                    .ok_or_else(|| DslError::UndeclaredSymbol { line: t.line, col: t.col, name: name.to_string() })?;
                arity(f.params.len())?;
                let map: HashMap<Symbol, Expr> = f.params.iter().copied().zip(args).collect();
                Ok(f.body.substitute(&map))
            }
        }
    }

    fn check_fresh(&self, name: &str, t: &Token) -> Result<(), DslError> {
        if RESERVED.contains(&name)
            || self.consts.contains_key(name)
            || self.funcs.contains_key(name)
            || self.coords.iter().any(|s| &*s.name() == name)
        {
            return Err(syntax(t, format!("`{name}` is reserved or already declared")));
        }
        Ok(())
    }
}

fn number(c: &mut Cursor) -> Result<f64, DslError> {
    let neg = if c.at_op('-') {
        c.next();
        true
    } else {
        false
    };
    let t = c.next();
    match &t.tok {
        Tok::Num(r) => {
            let v = num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
            Ok(if neg { -v } else { v })
        }
        _ => Err(syntax(t, "expected a number".into())),
    }
}

/// Parse a single expression against the coordinates, constants and
/// functions of an existing spec.
pub(crate) fn parse_expr_in(spec: &ManifoldSpec, text: &str) -> Result<Expr, DslError> {
    let scope = Scope {
        coords: spec.coords.clone(),
        consts: spec.consts.iter().map(|c| (c.name.name().to_string(), c.name)).collect(),
        funcs: spec.funcs.iter().map(|f| (f.name.clone(), f.clone())).collect(),
    };
    let toks = tokenize(text, 1)?;
    let mut c = Cursor { toks: &toks, pos: 0 };
    let e = scope.expr(&mut c)?;
    if c.peek().tok != Tok::Eof {
        return Err(syntax(c.peek(), "unexpected trailing input".into()));
    }
    Ok(e)
}

pub(crate) fn parse(text: &str) -> Result<ManifoldSpec, DslError> {
    let mut scope = Scope::default();
    let mut name: Option<String> = None;
    let mut dim: Option<(usize, Token)> = None;
    let mut domain: Vec<Option<(f64, f64)>> = Vec::new();
    let mut consts: Vec<ConstDecl> = Vec::new();
    let mut funcs: Vec<FuncDecl> = Vec::new();
    let mut lambda: Option<Expr> = None;
    let mut entries: HashMap<(usize, usize), (Expr, Token)> = HashMap::new();
    let mut diagonal = false;
    let mut metric_seen = false;
    let mut last_line = 1;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let body = raw.split('#').next().unwrap_or("");
        if let Some(rest) = body.trim_start().strip_prefix("manifold") {
            if rest.starts_with(char::is_whitespace) {
                let n = rest.trim();
                if n.is_empty() || n.contains(char::is_whitespace) {
                    let col = raw.find("manifold").unwrap_or(0) + 1;
                    return Err(DslError::Syntax { line: line_no, col, msg: "expected a single manifold name".into() });
                }
                name = Some(n.to_string());
                continue;
            }
        }
        let toks = tokenize(raw, line_no)?;
        if toks[0].tok == Tok::Eof {
            continue;
        }
        let mut c = Cursor { toks: &toks, pos: 0 };
        let (kw, kw_tok) = c.ident()?;
        let needs_coords = |t: &Token| -> Result<(), DslError> {
            if scope.coords.is_empty() {
                Err(syntax(t, "`coords` must come before this statement".into()))
            } else {
                Ok(())
            }
        };
        match kw.as_str() {
            "dim" => {
                let t = c.next();
                match &t.tok {
                    Tok::Num(r) if r.is_integer() => {
                        let n = num_traits::ToPrimitive::to_usize(&r.to_integer()).unwrap_or(0);
                        if n < 2 {
                            return Err(dim_err(t, "dimension must be at least 2".into()));
                        }
                        dim = Some((n, t.clone()));
                    }
                    _ => return Err(syntax(t, "expected an integer dimension".into())),
                }
            }
            "coords" => {
                if !scope.coords.is_empty() {
                    return Err(syntax(kw_tok, "duplicate `coords`".into()));
                }
                while let Tok::Ident(_) = c.peek().tok {
                    let (n, t) = c.ident()?;
                    scope.check_fresh(&n, t)?;
                    scope.coords.push(Symbol::new(&n));
                }
                if scope.coords.is_empty() {
                    return Err(syntax(c.peek(), "expected coordinate names".into()));
                }
                if let Some((n, _)) = &dim {
                    if *n != scope.coords.len() {
                        return Err(dim_err(kw_tok, format!("dim {n} but {} coordinates", scope.coords.len())));
                    }
                }
                domain = vec![None; scope.coords.len()];
            }
            "domain" => {
                needs_coords(kw_tok)?;
                let (n, t) = c.ident()?;
                let k = scope
                    .coords
                    .iter()
                    .position(|s| *s.name() == *n)
                    .ok_or_else(|| DslError::UndeclaredSymbol { line: t.line, col: t.col, name: n.clone() })?;
                c.keyword("in")?;
                c.expect_op('[')?;
                let lo = number(&mut c)?;
                c.expect_op(',')?;
                let hi = number(&mut c)?;
                c.expect_op(']')?;
                domain[k] = Some((lo, hi));
            }
            "const" => {
                let (n, t) = c.ident()?;
                scope.check_fresh(&n, t)?;
                let value = if c.at_op('=') {
                    c.next();
                    let saved = std::mem::take(&mut scope.coords);
                    let v = scope.expr(&mut c);
                    scope.coords = saved;
                    Some(v?)
                } else {
                    None
                };
                let s = Symbol::new(&n);
                scope.consts.insert(n, s);
                consts.push(ConstDecl { name: s, value });
            }
            "func" => {
                let (n, t) = c.ident()?;
                scope.check_fresh(&n, t)?;
                c.expect_op('(')?;
                let mut params = Vec::new();
                loop {
                    let (p, pt) = c.ident()?;
                    let s = scope
                        .coords
                        .iter()
                        .find(|s| *s.name() == *p)
                        .copied()
                        .ok_or_else(|| DslError::UndeclaredSymbol { line: pt.line, col: pt.col, name: p.clone() })?;
                    params.push(s);
                    if c.at_op(',') {
                        c.next();
                    } else {
                        break;
                    }
                }
                c.expect_op(')')?;
                c.expect_op('=')?;
                let body = scope.expr(&mut c)?;
                let f = FuncDecl { name: n.clone(), params, body };
                scope.funcs.insert(n, f.clone());
                funcs.push(f);
            }
            "lambda" => {
                needs_coords(kw_tok)?;
                c.expect_op('=')?;
                lambda = Some(scope.expr(&mut c)?);
            }
            "metric" => {
                needs_coords(kw_tok)?;
                let n = scope.coords.len();
                let t = c.next();
                match &t.tok {
                    Tok::Ident(s) if s == "diag" => {
                        if metric_seen {
                            return Err(syntax(t, "metric already given".into()));
                        }
                        c.expect_op(':')?;
                        let mut items = vec![scope.expr(&mut c)?];
                        while c.at_op(',') {
                            c.next();
                            items.push(scope.expr(&mut c)?);
                        }
                        if items.len() != n {
                            return Err(dim_err(t, format!("diag has {} entries, expected {n}", items.len())));
                        }
                        for (i, e) in items.into_iter().enumerate() {
                            entries.insert((i, i), (e, t.clone()));
                        }
                        diagonal = true;
                    }
                    Tok::Ident(s) if s == "g" => {
                        if diagonal {
                            return Err(syntax(t, "metric already given as diag".into()));
                        }
                        let mut idx = [0usize; 2];
                        for slot in &mut idx {
                            c.expect_op('[')?;
                            let it = c.next();
                            let v = match &it.tok {
                                Tok::Num(r) if r.is_integer() => {
                                    num_traits::ToPrimitive::to_usize(&r.to_integer()).unwrap_or(0)
                                }
                                _ => return Err(syntax(it, "expected an index".into())),
                            };
                            if v < 1 || v > n {
                                return Err(dim_err(it, format!("index {v} outside 1..={n}")));
                            }
                            *slot = v - 1;
                            c.expect_op(']')?;
                        }
                        c.expect_op('=')?;
                        let e = scope.expr(&mut c)?;
                        let key = (idx[0].min(idx[1]), idx[0].max(idx[1]));
                        if entries.contains_key(&key) {
                            return Err(syntax(t, format!("entry g[{}][{}] given twice", idx[0] + 1, idx[1] + 1)));
                        }
                        entries.insert(key, (e, t.clone()));
                    }
                    _ => return Err(syntax(t, "expected `diag:` or `g[i][j] =`".into())),
                }
                metric_seen = true;
            }
            _ => return Err(syntax(kw_tok, format!("unknown statement `{kw}`"))),
        }
        c.end()?;
    }

    let eof = Token { tok: Tok::Eof, line: last_line, col: 1 };
    if scope.coords.is_empty() {
        return Err(syntax(&eof, "missing `coords`".into()));
    }
    let n = scope.coords.len();
    if let Some((d, t)) = &dim {
        if *d != n {
            return Err(dim_err(t, format!("dim {d} but {n} coordinates")));
        }
    }
    if !metric_seen {
        return Err(syntax(&eof, "missing `metric`".into()));
    }
    let mut metric = vec![vec![Expr::zero(); n]; n];
    for ((i, j), (e, _)) in entries {
        metric[i][j] = e.clone();
        metric[j][i] = e;
    }
    Ok(ManifoldSpec {
        name: name.unwrap_or_else(|| "unnamed".into()),
        coords: scope.coords,
        domain: domain.into_iter().map(|d| d.unwrap_or((-1.0, 1.0))).collect(),
        consts,
        funcs,
        lambda,
        metric,
        diagonal,
    })
}

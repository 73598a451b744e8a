//! The `.rfm` manifold definition format.
//!
//! ```text
//! manifold sphere2
//! dim 2
//! coords th ph
//! domain th in [0.2, 2.9]
//! metric diag: 1, sin(th)^2
//! ```

mod lexer;
mod parser;

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr, Symbol};
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared symbol `{name}` at {line}:{col}")]
    UndeclaredSymbol { line: usize, col: usize, name: String },
    #[error("dimension mismatch at {line}:{col}: {msg}")]
    DimensionMismatch { line: usize, col: usize, msg: String },
}

impl DslError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            DslError::Syntax { line, col, .. }
            | DslError::UndeclaredSymbol { line, col, .. }
            | DslError::DimensionMismatch { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("metric is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("metric not positive definite at {rejected} of {probes} probe points")]
    NotPositiveDefinite { rejected: usize, probes: usize },
    #[error("empty domain for coordinate `{0}`")]
    EmptyDomain(String),
    #[error("constant `{0}` has no value")]
    UnboundConstant(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub name: Symbol,
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDecl {
    pub name: String,
    pub params: Vec<Symbol>,
    pub body: Expr,
}

/// A chart with a metric. Function declarations are kept for reference but
/// are already inlined into `metric` and `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub name: String,
    pub coords: Vec<Symbol>,
    pub domain: Vec<(f64, f64)>,
    pub consts: Vec<ConstDecl>,
    pub funcs: Vec<FuncDecl>,
    pub lambda: Option<Expr>,
    pub metric: Vec<Vec<Expr>>,
    pub diagonal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub probes: usize,
    pub rejected: usize,
}

impl ValidationReport {
    pub fn rejected_fraction(&self) -> f64 {
        self.rejected as f64 / self.probes.max(1) as f64
    }
}

/// Hex SHA-256 of `text`.
pub fn fingerprint(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse_manifold(text: &str) -> Result<ManifoldSpec, DslError> {
    parser::parse(text)
}

/// Parse one expression in the scope of `spec` (its coordinates, constants and functions).
pub fn parse_expression(spec: &ManifoldSpec, text: &str) -> Result<Expr, DslError> {
    parser::parse_expr_in(spec, text)
}

impl ManifoldSpec {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Numeric values of constants, evaluated in declaration order.
    pub fn const_values(&self) -> Result<HashMap<Symbol, f64>, ValidationError> {
        let mut b = Bindings::<f64>::new();
        let mut out = HashMap::new();
        for c in &self.consts {
            let v = c.value.as_ref().ok_or_else(|| ValidationError::UnboundConstant(c.name.name().to_string()))?;
            let v = v.eval(&b)?;
            b.set_const(c.name, v);
            out.insert(c.name, v);
        }
        Ok(out)
    }

    /// Bindings holding every constant plus the given coordinate values.
    pub fn bindings(&self, point: &[f64]) -> Result<Bindings<f64>, ValidationError> {
        let mut b = Bindings::new();
        for (s, v) in self.const_values()? {
            b.set_const(s, v);
        }
        for (s, v) in self.coords.iter().zip(point) {
            b.set_var(*s, *v);
        }
        Ok(b)
    }

    pub fn metric_at(&self, point: &[f64]) -> Result<Mat<f64>, ValidationError> {
        let b = self.bindings(point)?;
        let n = self.dim();
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.metric[i][j].eval(&b)?;
            }
        }
        Ok(m)
    }

    /// Replace the value of a declared constant (or declare it).
    pub fn set_const(&mut self, name: &str, value: Expr) {
        let s = Symbol::new(name);
        match self.consts.iter_mut().find(|c| c.name == s) {
            Some(c) => c.value = Some(value),
            None => self.consts.push(ConstDecl { name: s, value: Some(value) }),
        }
    }

    /// The same chart with every metric entry multiplied by `k`.
    pub fn scaled(&self, k: Expr) -> ManifoldSpec {
        let mut out = self.clone();
        for row in &mut out.metric {
            for e in row.iter_mut() {
                *e = &k * &*e;
            }
        }
        out
    }

    /// Canonical text: functions inlined, entries in canonical form.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        let n = self.dim();
        let _ = writeln!(s, "manifold {}", self.name);
        let _ = writeln!(s, "dim {n}");
        let names: Vec<String> = self.coords.iter().map(|c| c.name().to_string()).collect();
        let _ = writeln!(s, "coords {}", names.join(" "));
        for (c, (lo, hi)) in names.iter().zip(&self.domain) {
            let _ = writeln!(s, "domain {c} in [{lo:?}, {hi:?}]");
        }
        for c in &self.consts {
            match &c.value {
                Some(v) => {
                    let _ = writeln!(s, "const {} = {v}", c.name);
                }
                None => {
                    let _ = writeln!(s, "const {}", c.name);
                }
            }
        }
        if let Some(l) = &self.lambda {
            let _ = writeln!(s, "lambda = {l}");
        }
        if self.diagonal && self.is_diagonal() {
            let d: Vec<String> = (0..n).map(|i| self.metric[i][i].to_string()).collect();
            let _ = writeln!(s, "metric diag: {}", d.join(", "));
        } else {
            for i in 0..n {
                for j in i..n {
                    if i == j || !self.metric[i][j].is_zero() {
                        let _ = writeln!(s, "metric g[{}][{}] = {}", i + 1, j + 1, self.metric[i][j]);
                    }
                }
            }
        }
        s
    }

    /// Content hash of the canonical text.
    pub fn spec_hash(&self) -> String {
        fingerprint(&self.pretty())
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.metric[i][j].is_zero()))
    }

    /// Symmetry check, then positive definiteness and evaluability at seeded probes.
    pub fn validate(&self, n_probe: usize, seed: u64) -> Result<ValidationReport, ValidationError> {
        validate_spec(self, n_probe, seed)
    }
}

pub fn validate_spec(s: &ManifoldSpec, n_probe: usize, seed: u64) -> Result<ValidationReport, ValidationError> {
    let n = s.dim();
    for i in 0..n {
        for j in 0..i {
            if s.metric[i][j] != s.metric[j][i] {
                return Err(ValidationError::NotSymmetric(i, j));
            }
        }
    }
    for (c, (lo, hi)) in s.coords.iter().zip(&s.domain) {
        if !(hi > lo) {
            return Err(ValidationError::EmptyDomain(c.name().to_string()));
        }
    }
    s.const_values()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = 0;
    for _ in 0..n_probe {
        let p: Vec<f64> = s.domain.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect();
        let ok = match s.metric_at(&p) {
            Ok(m) => {
                m.cholesky().is_some()
                    && s.lambda.as_ref().is_none_or(|l| s.bindings(&p).ok().and_then(|b| l.eval(&b).ok()).is_some())
            }
            Err(ValidationError::Eval(_)) => false,
            Err(e) => return Err(e),
        };
        if !ok {
            rejected += 1;
        }
    }
    if 2 * rejected > n_probe {
        return Err(ValidationError::NotPositiveDefinite { rejected, probes: n_probe });
    }
    Ok(ValidationReport { probes: n_probe, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plane() {
        let s = parse_manifold("dim 2\ncoords x y\nmetric diag: 1, 1\n").unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.domain, vec![(-1.0, 1.0); 2]);
        assert_eq!(s.validate(20, 1).unwrap().rejected, 0);
    }

    #[test]
    fn inlines_functions() {
        let text = "manifold m4\ndim 4\ncoords x1 x2 x3 x4\nfunc f(x1) = x1^2\nfunc q(x4) = 1/(x4 + 1)^2\n\
                    metric diag: 1, f(x1)*q(x4), f(x1)*q(x4), f(x1)*q(x4)\n";
        let s = parse_manifold(text).unwrap();
        let x1 = Expr::var("x1");
        let x4 = Expr::var("x4");
        assert_eq!(s.metric[1][1], x1.powi(2) / (x4 + 1).powi(2));
    }

    #[test]
    fn error_classes_carry_positions() {
        let e = parse_manifold("dim 2\ncoords x y\nmetric diag: 1, x5\n").unwrap_err();
        assert!(matches!(e, DslError::UndeclaredSymbol { line: 3, col: 17, .. }), "{e:?}");
        let e = parse_manifold("dim 2\ncoords x y\nmetric diag: 1, (x\n").unwrap_err();
        assert!(matches!(e, DslError::Syntax { line: 3, .. }), "{e:?}");
        let e = parse_manifold("dim 3\ncoords x y z\nmetric diag: 1, 1\n").unwrap_err();
        assert!(matches!(e, DslError::DimensionMismatch { line: 3, col: 8, .. }), "{e:?}");
        let e = parse_manifold("dim 3\ncoords x y\nmetric diag: 1, 1\n").unwrap_err();
        assert!(matches!(e, DslError::DimensionMismatch { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn indefinite_metric_rejected() {
        let s = parse_manifold("dim 2\ncoords x y\nmetric diag: 1, -1\n").unwrap();
        assert!(matches!(s.validate(10, 0), Err(ValidationError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn precedence() {
        let s = parse_manifold("dim 2\ncoords x y\nmetric diag: -x^2 + 2^3^2 - 2*x^-1, 2^-1*y\n").unwrap();
        let x = Expr::var("x");
        assert_eq!(s.metric[0][0], -x.powi(2) + 512 - 2 * x.recip());
        assert_eq!(s.metric[1][1], Expr::var("y") / 2);
    }

    #[test]
    fn general_entries_and_builtin_diff() {
        let text = "dim 2\ncoords x y\nconst a = 0.25\nmetric g[1][1] = 1\nmetric g[2][1] = a*x\nmetric g[2][2] = diff(x^3, x)\n";
        let s = parse_manifold(text).unwrap();
        assert_eq!(s.metric[0][1], s.metric[1][0]);
        assert_eq!(s.metric[1][1], 3 * Expr::var("x").powi(2));
        let again = parse_manifold(&s.pretty()).unwrap();
        assert_eq!(again.pretty(), s.pretty());
        assert!(!s.is_diagonal());
    }

    #[test]
    fn sphere_round_trip_and_hash() {
        let text = "manifold sphere2\ndim 2\ncoords th ph\ndomain th in [0.2, 2.9]\nmetric diag: 1, sin(th)^2  # round\n";
        let s = parse_manifold(text).unwrap();
        let p = s.pretty();
        let s2 = parse_manifold(&p).unwrap();
        assert_eq!(s2.pretty(), p);
        assert_eq!(s.spec_hash(), s2.spec_hash());
        assert_eq!(s.spec_hash().len(), 64);
    }

    #[test]
    fn empty_domain_rejected() {
        let s = parse_manifold("dim 2\ncoords x y\ndomain x in [1, 1]\nmetric diag: 1, 1\n").unwrap();
        assert!(matches!(s.validate(5, 0), Err(ValidationError::EmptyDomain(_))));
    }
}

//! Per-point numeric curvature from metric jets.
//!
//! A [`MetricJet`] holds g and its partial derivatives at one point. Exact
//! jets come from symbolically differentiated metric entries compiled into a
//! [`Tape`]; approximate jets come from finite differences. Either way the
//! contraction code below turns them into a [`PointGeometry`], which is what
//! every condition check consumes.

use crate::dsl::{ManifoldSpec, ValidationError};
use crate::expr::{EvalError, Expr, Symbol, Tape};
use crate::linalg::Mat;
use crate::scalar::Real;
use crate::tensor::ricci_sign;

/// g_{ij} and partial derivatives up to order 2 or 3, as full (symmetric) arrays.
/// Layout: `g[i*n+j]`, `dg[(i*n+j)*n+a]`, `d2g[((i*n+j)*n+a)*n+b]`, ...
#[derive(Debug, Clone)]
pub struct MetricJet<T> {
    pub n: usize,
    pub g: Vec<T>,
    pub dg: Vec<T>,
    pub d2g: Vec<T>,
    pub d3g: Option<Vec<T>>,
}

/// A scalar λ with partial derivatives (`d3` optional).
#[derive(Debug, Clone)]
pub struct ScalarJet<T> {
    pub value: T,
    pub d: Vec<T>,
    pub d2: Vec<T>,
    pub d3: Option<Vec<T>>,
}

/// λ with its covariant Hessian λ_{;ij} and, when available, λ_{;ijk}.
#[derive(Debug, Clone)]
pub struct LambdaGeometry<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Mat<T>,
    pub dhess: Option<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct PointGeometry<T> {
    pub n: usize,
    pub point: Vec<T>,
    pub g: Mat<T>,
    pub ginv: Mat<T>,
    /// Γ^k_{ij} at `[(k*n+i)*n+j]`.
    pub christoffel: Vec<T>,
    /// ∂_aΓ^k_{ij} at `[((k*n+i)*n+j)*n+a]`.
    pub dchristoffel: Option<Vec<T>>,
    /// R^ℓ_{ijk}.
    pub riemann_up: Vec<T>,
    /// R_{hijk} = g_{kℓ}R^ℓ_{hij}.
    pub riemann: Vec<T>,
    /// R_{hijk;a}.
    pub driemann: Option<Vec<T>>,
    pub ricci: Mat<T>,
    /// Ri_{ij;a} at `[(i*n+j)*n+a]`.
    pub dricci: Option<Vec<T>>,
    pub sc: T,
    /// sc_{;a}.
    pub dsc: Option<Vec<T>>,
    pub lambda: Option<LambdaGeometry<T>>,
}

#[inline]
fn i3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

#[inline]
fn i4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

#[inline]
fn i5(n: usize, a: usize, b: usize, c: usize, d: usize, e: usize) -> usize {
    (((a * n + b) * n + c) * n + d) * n + e
}

impl<T: Real> PointGeometry<T> {
    /// Contract a metric jet into curvature. Returns `None` if g is not positive definite.
    pub fn from_jet(point: Vec<T>, jet: &MetricJet<T>, lambda: Option<&ScalarJet<T>>, sign: T) -> Option<Self> {
        let n = jet.n;
        let g = Mat::from_fn(n, |i, j| jet.g[i * n + j]);
        g.cholesky()?;
        let ginv = g.inverse()?;
        let dg = |i: usize, j: usize, a: usize| jet.dg[i3(n, i, j, a)];
        let d2g = |i: usize, j: usize, a: usize, b: usize| jet.d2g[i4(n, i, j, a, b)];

        // ∂_a g^{ij} = −g^{ik} ∂_a g_{kl} g^{lj}
        let mut dginv = vec![T::zero(); n * n * n];
        for a in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = T::zero();
                    for k in 0..n {
                        for l in 0..n {
                            s = s + ginv[(i, k)] * dg(k, l, a) * ginv[(l, j)];
                        }
                    }
                    dginv[i3(n, i, j, a)] = -s;
                }
            }
        }
        // First kind Γ_{l,ij} and its derivatives.
        let first = |l: usize, i: usize, j: usize| (dg(j, l, i) + dg(i, l, j) - dg(i, j, l)) * T::lit(0.5);
        let dfirst =
            |l: usize, i: usize, j: usize, a: usize| (d2g(j, l, i, a) + d2g(i, l, j, a) - d2g(i, j, l, a)) * T::lit(0.5);

        let mut gam = vec![T::zero(); n * n * n];
        let mut dgam = vec![T::zero(); n * n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = T::zero();
                    for l in 0..n {
                        s = s + ginv[(k, l)] * first(l, i, j);
                    }
                    gam[i3(n, k, i, j)] = s;
                    for a in 0..n {
                        let mut s = T::zero();
                        for l in 0..n {
                            s = s + dginv[i3(n, k, l, a)] * first(l, i, j) + ginv[(k, l)] * dfirst(l, i, j, a);
                        }
                        dgam[i4(n, k, i, j, a)] = s;
                    }
                }
            }
        }
        let gm = |k: usize, i: usize, j: usize| gam[i3(n, k, i, j)];
        let dgm = |k: usize, i: usize, j: usize, a: usize| dgam[i4(n, k, i, j, a)];

        let mut rup = vec![T::zero(); n.pow(4)];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut s = dgm(l, j, k, i) - dgm(l, i, k, j);
                        for m in 0..n {
                            s = s + gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                        }
                        rup[i4(n, l, i, j, k)] = s;
                    }
                }
            }
        }
        let mut rlow = vec![T::zero(); n.pow(4)];
        for h in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut s = T::zero();
                        for l in 0..n {
                            s = s + g[(k, l)] * rup[i4(n, l, h, i, j)];
                        }
                        rlow[i4(n, h, i, j, k)] = s;
                    }
                }
            }
        }
        let ricci = Mat::from_fn(n, |j, k| {
            let mut s = T::zero();
            for i in 0..n {
                s = s + rup[i4(n, i, i, j, k)];
            }
            sign * s
        });
        let mut sc = T::zero();
        for j in 0..n {
            for k in 0..n {
                sc = sc + ginv[(j, k)] * ricci[(j, k)];
            }
        }

        let mut geo = PointGeometry {
            n,
            point,
            g,
            ginv,
            christoffel: gam.clone(),
            dchristoffel: Some(dgam.clone()),
            riemann_up: rup,
            riemann: rlow,
            driemann: None,
            ricci,
            dricci: None,
            sc,
            dsc: None,
            lambda: None,
        };

        if let Some(d3g) = &jet.d3g {
            geo.third_order(jet, d3g, &dginv, sign);
        }
        if let Some(l) = lambda {
            geo.lambda = Some(geo.lambda_geometry(l));
        }
        Some(geo)
    }

    fn third_order(&mut self, jet: &MetricJet<T>, d3g: &[T], dginv: &[T], sign: T) {
        let n = self.n;
        let ginv = &self.ginv;
        let dg = |i: usize, j: usize, a: usize| jet.dg[i3(n, i, j, a)];
        let d2g = |i: usize, j: usize, a: usize, b: usize| jet.d2g[i4(n, i, j, a, b)];
        let d3 = |i: usize, j: usize, a: usize, b: usize, c: usize| d3g[i5(n, i, j, a, b, c)];

        // ∂_a∂_b g^{ij} = −(∂_b g^{ik} ∂_a g_{kl} g^{lj} + g^{ik} ∂_ab g_{kl} g^{lj} + g^{ik} ∂_a g_{kl} ∂_b g^{lj})
        let mut d2ginv = vec![T::zero(); n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let mut s = T::zero();
                        for k in 0..n {
                            for l in 0..n {
                                s = s + dginv[i3(n, i, k, b)] * dg(k, l, a) * ginv[(l, j)]
                                    + ginv[(i, k)] * d2g(k, l, a, b) * ginv[(l, j)]
                                    + ginv[(i, k)] * dg(k, l, a) * dginv[i3(n, l, j, b)];
                            }
                        }
                        d2ginv[i4(n, i, j, a, b)] = -s;
                    }
                }
            }
        }
        let first = |l: usize, i: usize, j: usize| (dg(j, l, i) + dg(i, l, j) - dg(i, j, l)) * T::lit(0.5);
        let dfirst =
            |l: usize, i: usize, j: usize, a: usize| (d2g(j, l, i, a) + d2g(i, l, j, a) - d2g(i, j, l, a)) * T::lit(0.5);
        let d2first = |l: usize, i: usize, j: usize, a: usize, b: usize| {
            (d3(j, l, i, a, b) + d3(i, l, j, a, b) - d3(i, j, l, a, b)) * T::lit(0.5)
        };
        let mut d2gam = vec![T::zero(); n.pow(5)];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            let mut s = T::zero();
                            for l in 0..n {
                                s = s + d2ginv[i4(n, k, l, a, b)] * first(l, i, j)
                                    + dginv[i3(n, k, l, a)] * dfirst(l, i, j, b)
                                    + dginv[i3(n, k, l, b)] * dfirst(l, i, j, a)
                                    + ginv[(k, l)] * d2first(l, i, j, a, b);
                            }
                            d2gam[i5(n, k, i, j, a, b)] = s;
                        }
                    }
                }
            }
        }
        let gam = &self.christoffel;
        let dgam = self.dchristoffel.as_ref().expect("first derivatives present");
        let gm = |k: usize, i: usize, j: usize| gam[i3(n, k, i, j)];
        let dgm = |k: usize, i: usize, j: usize, a: usize| dgam[i4(n, k, i, j, a)];
        let d2gm = |k: usize, i: usize, j: usize, a: usize, b: usize| d2gam[i5(n, k, i, j, a, b)];

        // ∂_a R^ℓ_{ijk}
        let mut drup = vec![T::zero(); n.pow(5)];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for a in 0..n {
                            let mut s = d2gm(l, j, k, i, a) - d2gm(l, i, k, j, a);
                            for m in 0..n {
                                s = s + dgm(l, i, m, a) * gm(m, j, k) + gm(l, i, m) * dgm(m, j, k, a)
                                    - dgm(l, j, m, a) * gm(m, i, k)
                                    - gm(l, j, m) * dgm(m, i, k, a);
                            }
                            drup[i5(n, l, i, j, k, a)] = s;
                        }
                    }
                }
            }
        }
        // ∇_a R_{hijk}
        let rup = &self.riemann_up;
        let rlow = &self.riemann;
        let g = &self.g;
        let mut drlow = vec![T::zero(); n.pow(5)];
        for h in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for a in 0..n {
                            let mut s = T::zero();
                            for l in 0..n {
                                s = s + dg(k, l, a) * rup[i4(n, l, h, i, j)] + g[(k, l)] * drup[i5(n, l, h, i, j, a)];
                            }
                            for m in 0..n {
                                s = s - gm(m, a, h) * rlow[i4(n, m, i, j, k)]
                                    - gm(m, a, i) * rlow[i4(n, h, m, j, k)]
                                    - gm(m, a, j) * rlow[i4(n, h, i, m, k)]
                                    - gm(m, a, k) * rlow[i4(n, h, i, j, m)];
                            }
                            drlow[i5(n, h, i, j, k, a)] = s;
                        }
                    }
                }
            }
        }
        // ∇_a Ri_{jk}
        let ricci = &self.ricci;
        let mut dri = vec![T::zero(); n.pow(3)];
        let mut pri = vec![T::zero(); n.pow(3)];
        for j in 0..n {
            for k in 0..n {
                for a in 0..n {
                    let mut p = T::zero();
                    for i in 0..n {
                        p = p + drup[i5(n, i, i, j, k, a)];
                    }
                    p = sign * p;
                    pri[i3(n, j, k, a)] = p;
                    let mut s = p;
                    for m in 0..n {
                        s = s - gm(m, a, j) * ricci[(m, k)] - gm(m, a, k) * ricci[(j, m)];
                    }
                    dri[i3(n, j, k, a)] = s;
                }
            }
        }
        let mut dsc = vec![T::zero(); n];
        for (a, out) in dsc.iter_mut().enumerate() {
            let mut s = T::zero();
            for j in 0..n {
                for k in 0..n {
                    s = s + dginv[i3(n, j, k, a)] * ricci[(j, k)] + ginv[(j, k)] * pri[i3(n, j, k, a)];
                }
            }
            *out = s;
        }
        self.driemann = Some(drlow);
        self.dricci = Some(dri);
        self.dsc = Some(dsc);
    }

    /// Covariant Hessian (and its covariant derivative when third partials are known).
    pub fn lambda_geometry(&self, l: &ScalarJet<T>) -> LambdaGeometry<T> {
        let n = self.n;
        let gm = |k: usize, i: usize, j: usize| self.christoffel[i3(n, k, i, j)];
        let hess = Mat::from_fn(n, |i, j| {
            let mut s = l.d2[i * n + j];
            for m in 0..n {
                s = s - gm(m, i, j) * l.d[m];
            }
            s
        });
        let dhess = match (&l.d3, &self.dchristoffel) {
            (Some(d3), Some(dgam)) => {
                let mut out = vec![T::zero(); n.pow(3)];
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            // ∂_k H_ij
                            let mut s = d3[i3(n, i, j, k)];
                            for m in 0..n {
                                s = s - dgam[i4(n, m, i, j, k)] * l.d[m] - gm(m, i, j) * l.d2[m * n + k];
                            }
                            for m in 0..n {
                                s = s - gm(m, k, i) * hess[(m, j)] - gm(m, k, j) * hess[(i, m)];
                            }
                            out[i3(n, i, j, k)] = s;
                        }
                    }
                }
                Some(out)
            }
            _ => None,
        };
        LambdaGeometry { value: l.value, grad: l.d.clone(), hess, dhess }
    }

    /// T_{ij;a} (layout `[(i*n+j)*n+a]`) with the magnitude of its additive
    /// terms ∂_aT_{ij}, Γ^m_{ai}T_{mj} and Γ^m_{aj}T_{im}, so that residuals
    /// built from covariant derivatives normalize against cancellation inside them.
    pub fn covariant_terms(&self, t: &[T], dt: &[T]) -> Vec<Acc<T>> {
        let n = self.n;
        let gm = |k: usize, i: usize, j: usize| self.christoffel[i3(n, k, i, j)];
        let mut out = Vec::with_capacity(n.pow(3));
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    let (mut conn, mut conn_abs) = (T::zero(), T::zero());
                    for m in 0..n {
                        let u = gm(m, a, i) * t[m * n + j];
                        let v = gm(m, a, j) * t[i * n + m];
                        conn = conn + u + v;
                        conn_abs = conn_abs + u.abs() + v.abs();
                    }
                    let v = dt[i3(n, i, j, a)];
                    out.push(Acc { sum: v, scale: (v + conn).abs() + conn_abs });
                }
            }
        }
        out
    }

    pub fn dricci_terms(&self) -> Vec<Acc<T>> {
        self.covariant_terms(self.ricci.as_slice(), self.dricci())
    }

    /// Ri^i_j as a matrix: (g⁻¹Ri)_{ij}.
    pub fn ricci_mixed(&self) -> Mat<T> {
        self.ginv.matmul(&self.ricci)
    }

    /// |Ri|² = Ri_{ij}Ri^{ij}.
    pub fn ricci_norm_sq(&self) -> T {
        let m = self.ricci_mixed();
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s = s + m[(i, j)] * m[(j, i)];
            }
        }
        s
    }

    /// g(v, w) for one-forms v, w.
    pub fn form_dot(&self, v: &[T], w: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s = s + self.ginv[(i, j)] * v[i] * w[j];
            }
        }
        s
    }

    pub fn form_norm(&self, v: &[T]) -> T {
        self.form_dot(v, v).max(T::zero()).sqrt()
    }

    pub fn dricci(&self) -> &[T] {
        self.dricci.as_deref().expect("geometry built without third-order jets")
    }

    pub fn dsc(&self) -> &[T] {
        self.dsc.as_deref().expect("geometry built without third-order jets")
    }
}

/// Running sum that also tracks the magnitude of its terms, for normalized residuals.
#[derive(Debug, Clone, Copy, Default)]
pub struct Acc<T> {
    pub sum: T,
    pub scale: T,
}

impl<T: Real> Acc<T> {
    pub fn new() -> Self {
        Acc { sum: T::zero(), scale: T::zero() }
    }

    #[inline]
    pub fn push(&mut self, t: T) {
        self.sum = self.sum + t;
        self.scale = self.scale + t.abs();
    }

    /// Fold in another accumulator scaled by `k`.
    #[inline]
    pub fn push_acc(&mut self, o: &Acc<T>, k: T) {
        self.sum = self.sum + k * o.sum;
        self.scale = self.scale + k.abs() * o.scale;
    }

    #[inline]
    pub fn normalized(&self) -> T {
        self.sum.abs() / (T::one() + self.scale)
    }
}

/// |Σ terms| / (1 + Σ|terms|).
#[inline]
pub fn normalized<T: Real>(terms: &[T]) -> T {
    let mut s = T::zero();
    let mut a = T::zero();
    for t in terms {
        s = s + *t;
        a = a + t.abs();
    }
    s.abs() / (T::one() + a)
}

/// Compiled exact jets of a spec's metric (and λ) up to third order.
pub struct GeometryEvaluator {
    n: usize,
    tape: Tape,
    consts: Vec<f64>,
    has_lambda: bool,
    sign: f64,
    order: usize,
}

fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn sorted_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..n {
            cur.push(a);
            rec(n, k, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Expressions for f and all partial derivatives up to `order`, for sorted index tuples.
fn derivative_exprs(f: &Expr, coords: &[Symbol], order: usize) -> Vec<Expr> {
    let n = coords.len();
    let mut out = vec![f.clone()];
    let mut prev: Vec<(Vec<usize>, Expr)> = vec![(Vec::new(), f.clone())];
    for _ in 0..order {
        let mut next = Vec::new();
        for (idx, e) in &prev {
            let start = idx.last().copied().unwrap_or(0);
            for (a, x) in coords.iter().enumerate().skip(start) {
                let mut j = idx.clone();
                j.push(a);
                next.push((j, e.diff(*x)));
            }
        }
        out.extend(next.iter().map(|(_, e)| e.clone()));
        prev = next;
    }
    debug_assert_eq!(out.len(), (0..=order).map(|k| sorted_tuples(n, k).len()).sum::<usize>());
    out
}

/// Scatter values for sorted tuples into a full symmetric array of rank `k`.
fn scatter<T: Real>(n: usize, k: usize, vals: &[T]) -> Vec<T> {
    let tuples = sorted_tuples(n, k);
    let mut out = vec![T::zero(); n.pow(k as u32)];
    for (t, v) in tuples.iter().zip(vals) {
        permute_fill(n, t, *v, &mut out);
    }
    out
}

fn permute_fill<T: Copy>(n: usize, t: &[usize], v: T, out: &mut [T]) {
    fn rec<T: Copy>(n: usize, rest: &mut Vec<usize>, cur: &mut Vec<usize>, v: T, out: &mut [T]) {
        if rest.is_empty() {
            let off = cur.iter().fold(0, |acc, i| acc * n + i);
            out[off] = v;
            return;
        }
        for p in 0..rest.len() {
            let x = rest.remove(p);
            cur.push(x);
            rec(n, rest, cur, v, out);
            cur.pop();
            rest.insert(p, x);
        }
    }
    rec(n, &mut t.to_vec(), &mut Vec::new(), v, out);
}

impl GeometryEvaluator {
    /// Exact jets up to third order (needed for ∇Ri and ∇R).
    pub fn new(spec: &ManifoldSpec) -> Result<Self, ValidationError> {
        Self::with_order(spec, 3)
    }

    pub fn with_order(spec: &ManifoldSpec, order: usize) -> Result<Self, ValidationError> {
        let n = spec.dim();
        let mut exprs = Vec::new();
        for (i, j) in sym_pairs(n) {
            exprs.extend(derivative_exprs(&spec.metric[i][j], &spec.coords, order));
        }
        if let Some(l) = &spec.lambda {
            exprs.extend(derivative_exprs(l, &spec.coords, order));
        }
        let tape = Tape::compile(&exprs, &spec.coords);
        let values = spec.const_values()?;
        let consts = tape.const_values(&values)?;
        Ok(GeometryEvaluator {
            n,
            tape,
            consts,
            has_lambda: spec.lambda.is_some(),
            sign: ricci_sign() as f64,
            order,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Evaluate the metric jet (and λ jet) at a point.
    pub fn jets<T: Real>(&self, point: &[T]) -> Result<(MetricJet<T>, Option<ScalarJet<T>>), EvalError> {
        let n = self.n;
        let consts: Vec<T> = self.consts.iter().map(|v| T::lit(*v)).collect();
        let vals = self.tape.eval(point, &consts)?;
        let per: Vec<usize> = (0..=self.order).map(|k| sorted_tuples(n, k).len()).collect();
        let block: usize = per.iter().sum();
        let pairs = sym_pairs(n);
        let mut g = vec![T::zero(); n * n];
        let mut dg = vec![T::zero(); n.pow(3)];
        let mut d2g = vec![T::zero(); n.pow(4)];
        let mut d3g = if self.order >= 3 { Some(vec![T::zero(); n.pow(5)]) } else { None };
        for (p, (i, j)) in pairs.iter().enumerate() {
            let base = &vals[p * block..(p + 1) * block];
            let mut off = 0;
            let orders: Vec<Vec<T>> = per
                .iter()
                .map(|len| {
                    let s = base[off..off + len].to_vec();
                    off += len;
                    s
                })
                .collect();
            for (ii, jj) in [(*i, *j), (*j, *i)] {
                g[ii * n + jj] = orders[0][0];
                let d1 = scatter(n, 1, &orders[1]);
                for a in 0..n {
                    dg[i3(n, ii, jj, a)] = d1[a];
                }
                if self.order >= 2 {
                    let d2 = scatter(n, 2, &orders[2]);
                    for a in 0..n * n {
                        d2g[(ii * n + jj) * n * n + a] = d2[a];
                    }
                }
                if let Some(d3g) = &mut d3g {
                    let d3 = scatter(n, 3, &orders[3]);
                    for a in 0..n.pow(3) {
                        d3g[(ii * n + jj) * n.pow(3) + a] = d3[a];
                    }
                }
            }
        }
        let lambda = if self.has_lambda {
            let base = &vals[pairs.len() * block..];
            let mut off = 0;
            let orders: Vec<Vec<T>> = per
                .iter()
                .map(|len| {
                    let s = base[off..off + len].to_vec();
                    off += len;
                    s
                })
                .collect();
            Some(ScalarJet {
                value: orders[0][0],
                d: scatter(n, 1, &orders[1]),
                d2: if self.order >= 2 { scatter(n, 2, &orders[2]) } else { vec![T::zero(); n * n] },
                d3: (self.order >= 3).then(|| scatter(n, 3, &orders[3])),
            })
        } else {
            None
        };
        Ok((MetricJet { n, g, dg, d2g, d3g }, lambda))
    }

    /// Full point geometry, or `None` if the metric is not positive definite there.
    pub fn at<T: Real>(&self, point: &[T]) -> Result<Option<PointGeometry<T>>, EvalError> {
        let (jet, lambda) = self.jets(point)?;
        Ok(PointGeometry::from_jet(point.to_vec(), &jet, lambda.as_ref(), T::lit(self.sign)))
    }
}

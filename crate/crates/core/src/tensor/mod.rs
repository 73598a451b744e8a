//! Symbolic tensor fields on a single chart and the curvature stack of a metric.
//!
//! Conventions: Γ^k_{ij} is stored as `[k, i, j]`,
//! R^ℓ_{ijk} = ∂_iΓ^ℓ_{jk} − ∂_jΓ^ℓ_{ik} + Γ^ℓ_{im}Γ^m_{jk} − Γ^ℓ_{jm}Γ^m_{ik},
//! Ri_{jk} = R^i_{ijk} and R_{hijk} = g_{kℓ}R^ℓ_{hij}. Covariant derivatives
//! append their index last.

use std::sync::OnceLock;

use thiserror::Error;

use crate::dsl::ManifoldSpec;
use crate::expr::{Bindings, DiffCache, EvalError, Expr, Symbol, Tape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("metric is singular")]
    SingularMetric,
    #[error("index position {0} out of range")]
    IndexOutOfRange(usize),
    #[error("dimension {0} too low")]
    DimensionTooLow(usize),
    #[error("tensor is not symmetric")]
    NotSymmetric,
    #[error("index positions have the wrong variance")]
    WrongVariance,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

/// Dense array of components; index `[i0, i1, ...]` lives at `Σ i_k n^(r-1-k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    n: usize,
    slots: Vec<Slot>,
    comps: Vec<Expr>,
}

/// All multi-indices of rank `r` over `0..n`, in storage order.
pub fn multi_indices(n: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(r as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; r];
        for p in (0..r).rev() {
            idx[p] = k % n;
            k /= n;
        }
        idx
    })
}

impl TensorField {
    pub fn from_fn(n: usize, slots: Vec<Slot>, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let comps = multi_indices(n, slots.len()).map(|i| f(&i)).collect();
        TensorField { n, slots, comps }
    }

    pub fn zeros(n: usize, slots: Vec<Slot>) -> Self {
        Self::from_fn(n, slots, |_| Expr::zero())
    }

    pub fn scalar(e: Expr, n: usize) -> Self {
        TensorField { n, slots: Vec::new(), comps: vec![e] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// (contravariant, covariant) counts.
    pub fn valence(&self) -> (usize, usize) {
        let up = self.slots.iter().filter(|s| **s == Slot::Up).count();
        (up, self.slots.len() - up)
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.offset(idx)]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        TensorField { n: self.n, slots: self.slots.clone(), comps: self.comps.iter().map(f).collect() }
    }

    pub fn eval(&self, b: &Bindings<f64>) -> Result<Vec<f64>, EvalError> {
        Tape::compile(&self.comps, &[]).eval_bindings(b)
    }

    pub fn is_symmetric_pair(&self, a: usize, b: usize) -> bool {
        multi_indices(self.n, self.rank()).all(|i| {
            let mut j = i.clone();
            j.swap(a, b);
            self.get(&i) == self.get(&j)
        })
    }
}

/// Christoffel symbols, Riemann, Ricci and scalar curvature of a metric.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub coords: Vec<Symbol>,
    pub metric: TensorField,
    pub inverse: TensorField,
    pub christoffel: TensorField,
    pub riemann: TensorField,
    pub riemann_lowered: TensorField,
    pub ricci: TensorField,
    pub scalar: Expr,
}

// Normalization is kept cheap: expansions beyond a small budget are skipped
// and the unnormalized (but canonical) form is retained.
const TIDY_BUDGET: usize = 200;
const TIDY_MAX_NODES: usize = 300;

fn tidy(e: Expr) -> Expr {
    if e.dag_size() > TIDY_MAX_NODES {
        return e;
    }
    let n = e.normalize_within(TIDY_BUDGET);
    if n.dag_size() <= 2 * e.dag_size() {
        n
    } else {
        e
    }
}

fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Expr>> =
            (1..n).map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c].clone()).collect()).collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        terms.push(sign * &m[0][j] * determinant(&minor));
    }
    Expr::add_all(terms)
}

/// Symbolic inverse by the adjugate formula (entrywise for diagonal matrices).
pub fn symbolic_inverse(m: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>, TensorError> {
    let n = m.len();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[i][j].is_zero()));
    if diagonal {
        if m.iter().enumerate().any(|(i, r)| r[i].is_zero()) {
            return Err(TensorError::SingularMetric);
        }
        return Ok((0..n)
            .map(|i| (0..n).map(|j| if i == j { m[i][i].recip() } else { Expr::zero() }).collect())
            .collect());
    }
    let det = tidy(determinant(m));
    if det.is_zero() {
        return Err(TensorError::SingularMetric);
    }
    let inv_det = det.recip();
    let mut out = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Expr>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| m[r][c].clone()).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            out[i][j] = tidy(sign * determinant(&minor)) * &inv_det;
        }
    }
    Ok(out)
}

/// Sign applied to the Ricci contraction so that the unit round sphere has
/// positive scalar curvature. Computed once.
pub fn ricci_sign() -> i64 {
    static SIGN: OnceLock<i64> = OnceLock::new();
    *SIGN.get_or_init(|| {
        let th = Expr::var("calibration_theta");
        let metric = vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), th.sin().powi(2)]];
        let coords = [Symbol::new("calibration_theta"), Symbol::new("calibration_phi")];
        let pack = build_pack(&coords, metric, 1).expect("sphere metric is regular");
        let b = Bindings::new().with_var("calibration_theta", 1.0).with_var("calibration_phi", 0.0);
        let sc = pack.scalar.eval(&b).expect("sphere curvature evaluates");
        if sc > 0.0 {
            1
        } else {
            -1
        }
    })
}

fn build_pack(coords: &[Symbol], metric: Vec<Vec<Expr>>, sign: i64) -> Result<CurvaturePack, TensorError> {
    let n = coords.len();
    let inv = symbolic_inverse(&metric)?;
    let dg: Vec<Vec<Vec<Expr>>> =
        (0..n).map(|i| (0..n).map(|j| coords.iter().map(|x| metric[i][j].diff(*x)).collect()).collect()).collect();
    // First kind Γ_{l,ij} = ½(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}).
    let first = |l: usize, i: usize, j: usize| -> Expr {
        (&dg[j][l][i] + &dg[i][l][j] - &dg[i][j][l]) * Expr::rational(1, 2)
    };
    let christoffel = TensorField::from_fn(n, vec![Slot::Up, Slot::Down, Slot::Down], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        tidy(Expr::add_all((0..n).filter(|l| !inv[k][*l].is_zero()).map(|l| &inv[k][l] * first(l, i, j))))
    });
    let gam = |k: usize, i: usize, j: usize| christoffel.get(&[k, i, j]);
    let mut cache = DiffCache::new();
    let riemann = TensorField::from_fn(n, vec![Slot::Up, Slot::Down, Slot::Down, Slot::Down], |ix| {
        let (l, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        if i == j {
            return Expr::zero();
        }
        let mut terms =
            vec![gam(l, j, k).diff_cached(coords[i], &mut cache), -gam(l, i, k).diff_cached(coords[j], &mut cache)];
        for m in 0..n {
            terms.push(gam(l, i, m) * gam(m, j, k));
            terms.push(-(gam(l, j, m) * gam(m, i, k)));
        }
        tidy(Expr::add_all(terms))
    });
    let riemann_lowered = TensorField::from_fn(n, vec![Slot::Down; 4], |ix| {
        let (h, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        tidy(Expr::add_all((0..n).map(|l| &metric[k][l] * riemann.get(&[l, h, i, j]))))
    });
    let ricci = TensorField::from_fn(n, vec![Slot::Down, Slot::Down], |ix| {
        tidy(sign * Expr::add_all((0..n).map(|i| riemann.get(&[i, i, ix[0], ix[1]]).clone())))
    });
    let scalar = tidy(Expr::add_all(
        multi_indices(n, 2).map(|ix| &inv[ix[0]][ix[1]] * ricci.get(&ix)),
    ));
    let metric_t = TensorField::from_fn(n, vec![Slot::Down, Slot::Down], |ix| metric[ix[0]][ix[1]].clone());
    let inverse = TensorField::from_fn(n, vec![Slot::Up, Slot::Up], |ix| inv[ix[0]][ix[1]].clone());
    Ok(CurvaturePack {
        coords: coords.to_vec(),
        metric: metric_t,
        inverse,
        christoffel,
        riemann,
        riemann_lowered,
        ricci,
        scalar,
    })
}

/// Full symbolic curvature stack of a spec.
pub fn curvature_pack(s: &ManifoldSpec) -> Result<CurvaturePack, TensorError> {
    build_pack(&s.coords, s.metric.clone(), ricci_sign())
}

/// Curvature stack of an arbitrary metric matrix on the given coordinates.
pub fn curvature_of(coords: &[Symbol], metric: Vec<Vec<Expr>>) -> Result<CurvaturePack, TensorError> {
    build_pack(coords, metric, ricci_sign())
}

/// ∇T with the new covariant index appended last.
pub fn covariant_derivative(t: &TensorField, pack: &CurvaturePack) -> TensorField {
    let n = t.n;
    let r = t.rank();
    let mut slots = t.slots.clone();
    slots.push(Slot::Down);
    let mut cache = DiffCache::new();
    TensorField::from_fn(n, slots, |ix| {
        let a = ix[r];
        let base = &ix[..r];
        let mut terms = vec![t.get(base).diff_cached(pack.coords[a], &mut cache)];
        let mut j = base.to_vec();
        for p in 0..r {
            for m in 0..n {
                j[p] = m;
                let g = match t.slots[p] {
                    Slot::Up => pack.christoffel.get(&[base[p], a, m]).clone(),
                    Slot::Down => -pack.christoffel.get(&[m, a, base[p]]),
                };
                if !g.is_zero() {
                    terms.push(g * t.get(&j));
                }
            }
            j[p] = base[p];
        }
        Expr::add_all(terms)
    })
}

fn check_pos(t: &TensorField, p: usize) -> Result<(), TensorError> {
    if p >= t.rank() {
        Err(TensorError::IndexOutOfRange(p))
    } else {
        Ok(())
    }
}

/// Lower the index at position `p` with g.
pub fn lower(t: &TensorField, p: usize, pack: &CurvaturePack) -> Result<TensorField, TensorError> {
    check_pos(t, p)?;
    if t.slots[p] != Slot::Up {
        return Err(TensorError::WrongVariance);
    }
    Ok(contract_slot(t, p, &pack.metric, Slot::Down))
}

/// Raise the index at position `p` with g⁻¹.
pub fn raise(t: &TensorField, p: usize, pack: &CurvaturePack) -> Result<TensorField, TensorError> {
    check_pos(t, p)?;
    if t.slots[p] != Slot::Down {
        return Err(TensorError::WrongVariance);
    }
    Ok(contract_slot(t, p, &pack.inverse, Slot::Up))
}

fn contract_slot(t: &TensorField, p: usize, m: &TensorField, new: Slot) -> TensorField {
    let n = t.n;
    let mut slots = t.slots.clone();
    slots[p] = new;
    TensorField::from_fn(n, slots, |ix| {
        let mut j = ix.to_vec();
        Expr::add_all((0..n).filter_map(|k| {
            let c = m.get(&[ix[p], k]);
            if c.is_zero() {
                return None;
            }
            j[p] = k;
            Some(c * t.get(&j))
        }))
    })
}

/// Contract positions `a` and `b` using g or g⁻¹ as their variance requires.
pub fn trace(t: &TensorField, a: usize, b: usize, pack: &CurvaturePack) -> Result<TensorField, TensorError> {
    check_pos(t, a)?;
    check_pos(t, b)?;
    if a == b {
        return Err(TensorError::IndexOutOfRange(b));
    }
    let n = t.n;
    let weight = |i: usize, j: usize| -> Expr {
        match (t.slots[a], t.slots[b]) {
            (Slot::Down, Slot::Down) => pack.inverse.get(&[i, j]).clone(),
            (Slot::Up, Slot::Up) => pack.metric.get(&[i, j]).clone(),
            _ => {
                if i == j {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
        }
    };
    let keep: Vec<usize> = (0..t.rank()).filter(|p| *p != a && *p != b).collect();
    let slots = keep.iter().map(|p| t.slots[*p]).collect();
    Ok(TensorField::from_fn(n, slots, |ix| {
        let mut full = vec![0; t.rank()];
        for (k, p) in keep.iter().enumerate() {
            full[*p] = ix[k];
        }
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = weight(i, j);
                if w.is_zero() {
                    continue;
                }
                full[a] = i;
                full[b] = j;
                terms.push(w * t.get(&full));
            }
        }
        Expr::add_all(terms)
    }))
}

/// Pointwise squared norm |T|², the full contraction of T with itself.
pub fn norm_squared(t: &TensorField, pack: &CurvaturePack) -> Expr {
    let n = t.n;
    let r = t.rank();
    let mut down = t.clone();
    for p in 0..r {
        if down.slots[p] == Slot::Up {
            down = contract_slot(&down, p, &pack.metric, Slot::Down);
        }
    }
    let mut up = down.clone();
    for p in 0..r {
        up = contract_slot(&up, p, &pack.inverse, Slot::Up);
    }
    Expr::add_all(multi_indices(n, r).map(|ix| down.get(&ix) * up.get(&ix)))
}

#[cfg(test)]
mod tests;

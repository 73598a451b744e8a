//! Schouten, Cotton and Weyl tensors, div(W) and the Bianchi operator.

use thiserror::Error;

use crate::expr::Expr;
use crate::geometry::{Acc, PointGeometry};
use crate::scalar::Real;
use crate::tensor::{covariant_derivative, CurvaturePack, Slot, TensorError, TensorField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassicalError {
    #[error("dimension {0} too low for the Schouten tensor")]
    DimensionTooLow(usize),
    #[error("tensor is not symmetric")]
    NotSymmetric,
    #[error("geometry lacks third-order data")]
    MissingDerivatives,
}

/// Schouten, Cotton and Weyl data at one point. Every component is an
/// [`Acc`] so residuals built from them can be normalized.
#[derive(Debug, Clone)]
pub struct ClassicalPack<T> {
    pub n: usize,
    pub schouten: Vec<T>,
    /// C_{ijk} at `[(i*n+j)*n+k]`.
    pub cotton: Vec<Acc<T>>,
    /// W_{hijk}; all zero when n = 3.
    pub weyl: Vec<T>,
    /// g^{hℓ}W_{hijk;ℓ} at `[(i*n+j)*n+k]`; empty when n = 3.
    pub div_weyl: Vec<Acc<T>>,
}

pub fn schouten<T: Real>(p: &PointGeometry<T>) -> Result<Vec<T>, ClassicalError> {
    let n = p.n;
    if n < 3 {
        return Err(ClassicalError::DimensionTooLow(n));
    }
    let k = p.sc / T::lit((2 * n - 2) as f64);
    Ok((0..n * n).map(|ij| p.ricci.as_slice()[ij] - k * p.g.as_slice()[ij]).collect())
}

/// S_{ij;k} as accumulated terms.
fn schouten_derivative<T: Real>(p: &PointGeometry<T>, dri: &[Acc<T>], i: usize, j: usize, k: usize) -> Acc<T> {
    let n = p.n;
    let mut a = Acc::new();
    a.push_acc(&dri[(i * n + j) * n + k], T::one());
    a.push(-p.dsc()[k] * p.g[(i, j)] / T::lit((2 * n - 2) as f64));
    a
}

pub fn cotton<T: Real>(p: &PointGeometry<T>) -> Result<Vec<Acc<T>>, ClassicalError> {
    let n = p.n;
    if n < 3 {
        return Err(ClassicalError::DimensionTooLow(n));
    }
    if p.dricci.is_none() {
        return Err(ClassicalError::MissingDerivatives);
    }
    let dri = p.dricci_terms();
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut c = schouten_derivative(p, &dri, i, j, k);
                c.push_acc(&schouten_derivative(p, &dri, i, k, j), -T::one());
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn r4(n: usize, h: usize, i: usize, j: usize, k: usize) -> usize {
    ((h * n + i) * n + j) * n + k
}

pub fn weyl<T: Real>(p: &PointGeometry<T>) -> Vec<T> {
    let n = p.n;
    let mut w = vec![T::zero(); n.pow(4)];
    if n < 4 {
        return w;
    }
    let g = &p.g;
    let ri = &p.ricci;
    let a = p.sc / T::lit(((n - 1) * (n - 2)) as f64);
    let b = T::one() / T::lit((n - 2) as f64);
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    w[r4(n, h, i, j, k)] = p.riemann[r4(n, h, i, j, k)]
                        + a * (g[(h, k)] * g[(i, j)] - g[(h, j)] * g[(i, k)])
                        - b * (ri[(h, k)] * g[(i, j)] - ri[(h, j)] * g[(i, k)] + ri[(i, j)] * g[(h, k)]
                            - ri[(i, k)] * g[(h, j)]);
                }
            }
        }
    }
    w
}

/// div(W)_{ijk} = g^{hℓ}W_{hijk;ℓ}, using ∇g = 0 to differentiate the Weyl formula termwise.
pub fn div_weyl<T: Real>(p: &PointGeometry<T>) -> Result<Vec<Acc<T>>, ClassicalError> {
    let n = p.n;
    if n < 4 {
        return Ok(Vec::new());
    }
    let (Some(dr), Some(dri), Some(dsc)) = (&p.driemann, &p.dricci, &p.dsc) else {
        return Err(ClassicalError::MissingDerivatives);
    };
    let g = &p.g;
    let a = T::one() / T::lit(((n - 1) * (n - 2)) as f64);
    let b = T::one() / T::lit((n - 2) as f64);
    let dri = |i: usize, j: usize, l: usize| dri[(i * n + j) * n + l];
    let mut out = Vec::with_capacity(n.pow(3));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = Acc::new();
                for h in 0..n {
                    for l in 0..n {
                        let ghl = p.ginv[(h, l)];
                        if ghl == T::zero() {
                            continue;
                        }
                        acc.push(ghl * dr[r4(n, h, i, j, k) * n + l]);
                        acc.push(ghl * a * dsc[l] * (g[(h, k)] * g[(i, j)] - g[(h, j)] * g[(i, k)]));
                        acc.push(-ghl * b * dri(h, k, l) * g[(i, j)]);
                        acc.push(ghl * b * dri(h, j, l) * g[(i, k)]);
                        acc.push(-ghl * b * dri(i, j, l) * g[(h, k)]);
                        acc.push(ghl * b * dri(i, k, l) * g[(h, j)]);
                    }
                }
                out.push(acc);
            }
        }
    }
    Ok(out)
}

pub fn classical_at<T: Real>(p: &PointGeometry<T>) -> Result<ClassicalPack<T>, ClassicalError> {
    Ok(ClassicalPack { n: p.n, schouten: schouten(p)?, cotton: cotton(p)?, weyl: weyl(p), div_weyl: div_weyl(p)? })
}

/// Worst normalized |div(W) − ((n−3)/(n−2))C| at a point (zero for n = 3).
pub fn div_weyl_residual<T: Real>(p: &PointGeometry<T>) -> Result<T, ClassicalError> {
    let n = p.n;
    if n < 4 {
        return Ok(T::zero());
    }
    let dw = div_weyl(p)?;
    let c = cotton(p)?;
    let k = T::lit((n - 3) as f64 / (n - 2) as f64);
    let mut worst = T::zero();
    for (d, c) in dw.iter().zip(&c) {
        let mut r = *d;
        r.push_acc(c, -k);
        worst = worst.max(r.normalized());
    }
    Ok(worst)
}

/// B(T)_k = 2g^{ij}T_{ik;j} − g^{ij}T_{ij;k} for symmetric T with ∇T at `[(i*n+j)*n+k]`.
pub fn bianchi_operator<T: Real>(
    p: &PointGeometry<T>,
    t: &[T],
    dt: &[T],
) -> Result<Vec<Acc<T>>, ClassicalError> {
    let n = p.n;
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (t[i * n + j], t[j * n + i]);
            if (a - b).abs() > T::lit(1e-9) * (T::one() + a.abs() + b.abs()) {
                return Err(ClassicalError::NotSymmetric);
            }
        }
    }
    let dts = p.covariant_terms(t, dt);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Acc::new();
        for i in 0..n {
            for j in 0..n {
                let gij = p.ginv[(i, j)];
                if gij == T::zero() {
                    continue;
                }
                acc.push_acc(&dts[(i * n + k) * n + j], T::lit(2.0) * gij);
                acc.push_acc(&dts[(i * n + j) * n + k], -gij);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Symbolic Schouten and Cotton tensors.
pub fn schouten_cotton(pack: &CurvaturePack) -> Result<(TensorField, TensorField), TensorError> {
    let n = pack.metric.dim();
    if n < 3 {
        return Err(TensorError::DimensionTooLow(n));
    }
    let k = &pack.scalar / Expr::int((2 * n - 2) as i64);
    let s = TensorField::from_fn(n, vec![Slot::Down, Slot::Down], |ix| pack.ricci.get(ix) - &k * pack.metric.get(ix));
    let ds = covariant_derivative(&s, pack);
    let c = TensorField::from_fn(n, vec![Slot::Down; 3], |ix| ds.get(&[ix[0], ix[1], ix[2]]) - ds.get(&[ix[0], ix[2], ix[1]]));
    Ok((s, c))
}

/// Symbolic Weyl tensor (explicit zero for n = 3).
pub fn weyl_symbolic(pack: &CurvaturePack) -> TensorField {
    let n = pack.metric.dim();
    if n < 4 {
        return TensorField::zeros(n, vec![Slot::Down; 4]);
    }
    let a = &pack.scalar / Expr::int(((n - 1) * (n - 2)) as i64);
    let b = Expr::rational(1, (n - 2) as i64);
    let g = |i: usize, j: usize| pack.metric.get(&[i, j]);
    let ri = |i: usize, j: usize| pack.ricci.get(&[i, j]);
    TensorField::from_fn(n, vec![Slot::Down; 4], |ix| {
        let (h, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        pack.riemann_lowered.get(ix) + &a * (g(h, k) * g(i, j) - g(h, j) * g(i, k))
            - &b * (ri(h, k) * g(i, j) - ri(h, j) * g(i, k) + ri(i, j) * g(h, k) - ri(i, k) * g(h, j))
    })
}

#[cfg(test)]
mod tests;

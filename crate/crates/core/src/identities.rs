//! Curvature identities evaluated pointwise as normalized residuals. They hold
//! for every metric, so they check the curvature pipeline itself.

use crate::geometry::{normalized, PointGeometry};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityResiduals {
    pub second_bianchi: f64,
    pub contracted_bianchi: f64,
    pub first_bianchi: f64,
    pub ricci_identity: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.second_bianchi.max(self.contracted_bianchi).max(self.first_bianchi).max(self.ricci_identity)
    }

    pub fn merge(&mut self, o: &IdentityResiduals) {
        self.second_bianchi = self.second_bianchi.max(o.second_bianchi);
        self.contracted_bianchi = self.contracted_bianchi.max(o.contracted_bianchi);
        self.first_bianchi = self.first_bianchi.max(o.first_bianchi);
        self.ricci_identity = self.ricci_identity.max(o.ricci_identity);
    }
}

fn idx4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

/// R_{hijk;ℓ} + R_{hikℓ;j} + R_{hiℓj;k} over h < i and distinct j < k < ℓ.
pub fn second_bianchi<T: Real>(p: &PointGeometry<T>) -> T {
    let n = p.n;
    let Some(dr) = &p.driemann else {
        return T::zero();
    };
    let at = |h: usize, i: usize, j: usize, k: usize, a: usize| dr[idx4(n, h, i, j, k) * n + a];
    let mut worst = T::zero();
    for h in 0..n {
        for i in h + 1..n {
            for j in 0..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        let r = normalized(&[at(h, i, j, k, l), at(h, i, k, l, j), at(h, i, l, j, k)]);
                        worst = worst.max(r);
                    }
                }
            }
        }
    }
    worst
}

/// sc_{;k} − 2g^{ij}Ri_{ik;j}.
pub fn contracted_bianchi<T: Real>(p: &PointGeometry<T>) -> T {
    let n = p.n;
    let (Some(dri), Some(dsc)) = (&p.dricci, &p.dsc) else {
        return T::zero();
    };
    let mut worst = T::zero();
    let mut terms = Vec::with_capacity(n * n + 1);
    for k in 0..n {
        terms.clear();
        terms.push(dsc[k]);
        for i in 0..n {
            for j in 0..n {
                terms.push(-T::lit(2.0) * p.ginv[(i, j)] * dri[(i * n + k) * n + j]);
            }
        }
        worst = worst.max(normalized(&terms));
    }
    worst
}

/// R_{hijk} + R_{ijhk} + R_{jhik}.
pub fn first_bianchi<T: Real>(p: &PointGeometry<T>) -> T {
    let n = p.n;
    let r = &p.riemann;
    let mut worst = T::zero();
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = [r[idx4(n, h, i, j, k)], r[idx4(n, i, j, h, k)], r[idx4(n, j, h, i, k)]];
                    worst = worst.max(normalized(&t));
                }
            }
        }
    }
    worst
}

/// Probe one-form ω_i = 1 + (i+1)·x_{(i+1) mod n}: value and constant partials ∂_jω_i.
fn probe<T: Real>(p: &PointGeometry<T>) -> (Vec<T>, Vec<T>) {
    let n = p.n;
    let mut w = vec![T::zero(); n];
    let mut dw = vec![T::zero(); n * n];
    for i in 0..n {
        let c = T::lit((i + 1) as f64);
        let a = (i + 1) % n;
        w[i] = T::one() + c * p.point[a];
        dw[i * n + a] = c;
    }
    (w, dw)
}

/// ω_{k;ij} − ω_{k;ji} − ω_ℓR^ℓ_{ijk} for the probe form.
pub fn ricci_identity<T: Real>(p: &PointGeometry<T>) -> T {
    let n = p.n;
    let Some(dgam) = &p.dchristoffel else {
        return T::zero();
    };
    let gam = |k: usize, i: usize, j: usize| p.christoffel[(k * n + i) * n + j];
    let (w, dw) = probe(p);
    // ω_{k;i}
    let first = |k: usize, i: usize| {
        let mut s = dw[k * n + i];
        for m in 0..n {
            s = s - gam(m, i, k) * w[m];
        }
        s
    };
    // ω_{k;ij}, returned as its additive terms.
    let second = |k: usize, i: usize, j: usize| -> Vec<T> {
        let mut t = Vec::with_capacity(4 * n);
        for m in 0..n {
            t.push(-dgam[((m * n + i) * n + k) * n + j] * w[m]);
            t.push(-gam(m, i, k) * dw[m * n + j]);
            t.push(-gam(m, j, k) * first(m, i));
            t.push(-gam(m, j, i) * first(k, m));
        }
        t
    };
    let mut worst = T::zero();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut terms = second(k, i, j);
                terms.extend(second(k, j, i).into_iter().map(|v| -v));
                for l in 0..n {
                    terms.push(-w[l] * p.riemann_up[idx4(n, l, i, j, k)]);
                }
                worst = worst.max(normalized(&terms));
            }
        }
    }
    worst
}

pub fn residuals<T: Real>(p: &PointGeometry<T>) -> IdentityResiduals {
    IdentityResiduals {
        second_bianchi: second_bianchi(p).to_f64_lossy(),
        contracted_bianchi: contracted_bianchi(p).to_f64_lossy(),
        first_bianchi: first_bianchi(p).to_f64_lossy(),
        ricci_identity: ricci_identity(p).to_f64_lossy(),
    }
}

/// Worst identity residuals of a spec over the given points. Points where the
/// metric is not positive definite are skipped.
pub fn identity_residuals(
    s: &crate::dsl::ManifoldSpec,
    points: &[Vec<f64>],
) -> Result<IdentityResiduals, crate::dsl::ValidationError> {
    let ev = crate::geometry::GeometryEvaluator::new(s)?;
    let mut out = IdentityResiduals::default();
    for p in points {
        if let Some(geo) = ev.at(p)? {
            out.merge(&residuals(&geo));
        }
    }
    Ok(out)
}

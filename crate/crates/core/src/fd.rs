//! Finite-difference curvature.
//!
//! Serves two purposes: an oracle for the symbolic pipeline that shares no
//! differentiation code with it, and the only geometry source for metrics
//! known just numerically (integrated ODE trajectories). Jets up to second
//! order come from fourth-order central differences of g; ∇Ri, ∇sc and ∇∇∇λ come from
//! five-point differences of the FD curvature with an outer step of 10h.

use thiserror::Error;

use crate::conditions::{run_on_sample, ConditionError, ConditionId, ConditionReport, GeometrySample};
use crate::dsl::{ManifoldSpec, ValidationError};
use crate::expr::{EvalError, Tape};
use crate::geometry::{MetricJet, PointGeometry, ScalarJet};
use crate::linalg::Mat;
use crate::sampling::{sample_points, SamplingConfig, SamplingError};
use crate::tensor::ricci_sign;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("point is {distance:.3e} from the boundary in coordinate {coord}, stencil needs {needed:.3e}")]
    BoundaryTooClose { coord: usize, distance: f64, needed: f64 },
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

/// Ratio of the outer (derivative-of-curvature) step to the inner step.
pub const OUTER_FACTOR: f64 = 10.0;

/// A metric (and optional λ) that can be evaluated pointwise.
pub trait MetricField {
    fn dim(&self) -> usize;
    fn domain(&self) -> Vec<(f64, f64)>;
    fn has_lambda(&self) -> bool;
    /// Row-major g and λ at `x`.
    fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, Option<f64>), FdError>;
}

/// Compiled metric entries of a spec, values only.
pub struct SpecField {
    n: usize,
    domain: Vec<(f64, f64)>,
    tape: Tape,
    consts: Vec<f64>,
    has_lambda: bool,
}

impl SpecField {
    pub fn new(spec: &ManifoldSpec) -> Result<Self, ValidationError> {
        let mut exprs: Vec<_> = spec.metric.iter().flatten().cloned().collect();
        exprs.extend(spec.lambda.clone());
        let tape = Tape::compile(&exprs, &spec.coords);
        let consts = tape.const_values(&spec.const_values()?)?;
        Ok(SpecField { n: spec.dim(), domain: spec.domain.clone(), tape, consts, has_lambda: spec.lambda.is_some() })
    }
}

impl MetricField for SpecField {
    fn dim(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        self.domain.clone()
    }

    fn has_lambda(&self) -> bool {
        self.has_lambda
    }

    fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, Option<f64>), FdError> {
        let mut v = self.tape.eval(x, &self.consts)?;
        let l = self.has_lambda.then(|| v.pop()).flatten();
        Ok((v, l))
    }
}

/// Default inner step 1e−4·(1 + |x|).
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Inner step of the verification pipeline, 5e−4·(1 + |x|). Third
/// derivatives divide roundoff in FD Ricci by the outer step, so this trades
/// a little truncation error for much less noise.
pub fn pipeline_step(x: &[f64]) -> f64 {
    5.0 * default_step(x)
}

fn check_margin(domain: &[(f64, f64)], x: &[f64], needed: f64) -> Result<(), FdError> {
    for (coord, (xi, (lo, hi))) in x.iter().zip(domain).enumerate() {
        let distance = (xi - lo).min(hi - xi);
        if distance < needed {
            return Err(FdError::BoundaryTooClose { coord, distance, needed });
        }
    }
    Ok(())
}

/// Offsets and weights of the fourth-order central first difference (÷12h).
const D1: [(f64, f64); 4] = [(1.0, 8.0), (-1.0, -8.0), (2.0, -1.0), (-2.0, 1.0)];

/// Second-order jets of g and λ from fourth-order central differences.
pub fn fd_jets(field: &dyn MetricField, x: &[f64], h: f64) -> Result<(MetricJet<f64>, Option<ScalarJet<f64>>), FdError> {
    let n = field.dim();
    let nn = n * n;
    let at = |shift: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for (a, s) in shift {
            y[*a] += s * h;
        }
        field.eval(&y).map(|(g, l)| {
            let mut v = g;
            v.push(l.unwrap_or(0.0));
            v
        })
    };
    // component nn holds λ
    let c = at(&[])?;
    let mut d1 = vec![vec![0.0; nn + 1]; n];
    let mut d2 = vec![vec![vec![0.0; nn + 1]; n]; n];
    for a in 0..n {
        let v: Vec<Vec<f64>> = D1.iter().map(|(s, _)| at(&[(a, *s)])).collect::<Result<_, _>>()?;
        for k in 0..=nn {
            d1[a][k] = D1.iter().zip(&v).map(|((_, w), f)| w * f[k]).sum::<f64>() / (12.0 * h);
            d2[a][a][k] = (16.0 * (v[0][k] + v[1][k]) - (v[2][k] + v[3][k]) - 30.0 * c[k]) / (12.0 * h * h);
        }
        for b in a + 1..n {
            let mut acc = vec![0.0; nn + 1];
            for (sa, wa) in D1 {
                for (sb, wb) in D1 {
                    let f = at(&[(a, sa), (b, sb)])?;
                    for k in 0..=nn {
                        acc[k] += wa * wb * f[k];
                    }
                }
            }
            for k in 0..=nn {
                let v = acc[k] / (144.0 * h * h);
                d2[a][b][k] = v;
                d2[b][a][k] = v;
            }
        }
    }
    let mut dg = vec![0.0; nn * n];
    let mut d2g = vec![0.0; nn * n * n];
    for k in 0..nn {
        for a in 0..n {
            dg[k * n + a] = d1[a][k];
            for b in 0..n {
                d2g[(k * n + a) * n + b] = d2[a][b][k];
            }
        }
    }
    let lambda = field.has_lambda().then(|| ScalarJet {
        value: c[nn],
        d: (0..n).map(|a| d1[a][nn]).collect(),
        d2: (0..nn).map(|ab| d2[ab / n][ab % n][nn]).collect(),
        d3: None,
    });
    Ok((MetricJet { n, g: c[..nn].to_vec(), dg, d2g, d3g: None }, lambda))
}

/// Christoffel symbols, Riemann, Ricci and sc at `x` from central
/// differences of g with step `h` (default [`default_step`]).
pub fn fd_curvature_oracle(field: &dyn MetricField, x: &[f64], h: Option<f64>) -> Result<PointGeometry<f64>, FdError> {
    let h = h.unwrap_or_else(|| default_step(x));
    check_margin(&field.domain(), x, 2.0 * h)?;
    oracle_unchecked(field, x, h)
}

fn oracle_unchecked(field: &dyn MetricField, x: &[f64], h: f64) -> Result<PointGeometry<f64>, FdError> {
    let (jet, lambda) = fd_jets(field, x, h)?;
    PointGeometry::from_jet(x.to_vec(), &jet, lambda.as_ref(), ricci_sign() as f64)
        .ok_or_else(|| FdError::NotPositiveDefinite(x.to_vec()))
}

/// Five-point central difference from values at x ± H and x ± 2H.
fn five_point(p1: f64, m1: f64, p2: f64, m2: f64, step: f64) -> f64 {
    (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step)
}

/// ∇T_{ij;a} = ∂_aT_{ij} − Γ^m_{ai}T_{mj} − Γ^m_{aj}T_{im}, with `partial[a]` = ∂_aT.
fn covariant(p: &PointGeometry<f64>, t: &Mat<f64>, partial: &[Mat<f64>]) -> Vec<f64> {
    let n = p.n;
    let gm = |k: usize, i: usize, j: usize| p.christoffel[(k * n + i) * n + j];
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                let mut s = partial[a][(i, j)];
                for m in 0..n {
                    s -= gm(m, a, i) * t[(m, j)] + gm(m, a, j) * t[(i, m)];
                }
                out[(i * n + j) * n + a] = s;
            }
        }
    }
    out
}

/// Full geometry at `x`, including ∇Ri, ∇sc and (with λ) λ_{;ijk}. The
/// outer derivatives use a five-point stencil with step 10h.
pub fn fd_geometry(field: &dyn MetricField, x: &[f64], h: Option<f64>) -> Result<PointGeometry<f64>, FdError> {
    let h = h.unwrap_or_else(|| default_step(x));
    let outer = OUTER_FACTOR * h;
    check_margin(&field.domain(), x, 2.0 * outer + 2.0 * h)?;
    let n = field.dim();
    let mut p = oracle_unchecked(field, x, h)?;
    // stencil[a] = geometry at x + s·e_a for s = H, −H, 2H, −2H
    let stencil = (0..n)
        .map(|a| {
            [outer, -outer, 2.0 * outer, -2.0 * outer]
                .iter()
                .map(|s| {
                    let mut y = x.to_vec();
                    y[a] += s;
                    oracle_unchecked(field, &y, h)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let partial = |get: &dyn Fn(&PointGeometry<f64>) -> &Mat<f64>| -> Vec<Mat<f64>> {
        stencil
            .iter()
            .map(|q| Mat::from_fn(n, |i, j| five_point(get(&q[0])[(i, j)], get(&q[1])[(i, j)], get(&q[2])[(i, j)], get(&q[3])[(i, j)], outer)))
            .collect()
    };
    p.dricci = Some(covariant(&p, &p.ricci, &partial(&|q| &q.ricci)));
    p.dsc = Some(stencil.iter().map(|q| five_point(q[0].sc, q[1].sc, q[2].sc, q[3].sc, outer)).collect());
    if let Some(l) = &p.lambda {
        let dh = covariant(&p, &l.hess, &partial(&|q| &q.lambda.as_ref().expect("λ at every stencil point").hess));
        p.lambda.as_mut().unwrap().dhess = Some(dh);
    }
    Ok(p)
}

/// Tolerances for verdicts drawn from FD geometry.
pub fn numeric_config() -> SamplingConfig {
    SamplingConfig { tol: 1e-4, guard: 1e-8, cluster_tol: 1e-5, ..SamplingConfig::default() }
}

/// FD geometry at seeded points, inner step [`pipeline_step`] unless given.
/// The sampling box is shrunk so every stencil stays inside the domain.
pub fn fd_sample(field: &dyn MetricField, cfg: &SamplingConfig, h: Option<f64>) -> Result<GeometrySample, FdError> {
    let domain = cfg.effective_domain(&field.domain());
    let reach = domain.iter().map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2)).sum::<f64>().sqrt();
    let margin = (2.0 * OUTER_FACTOR + 2.0) * h.unwrap_or(5e-4 * (1.0 + reach)) * 1.01;
    let inner: Vec<(f64, f64)> = domain.iter().map(|(lo, hi)| (lo + margin, hi - margin)).collect();
    let s = sample_points(&inner, cfg, |x| fd_geometry(field, x, Some(h.unwrap_or_else(|| pipeline_step(x)))).ok())?;
    Ok(GeometrySample { points: s.accepted, skipped: s.skipped })
}

/// Run one condition on FD geometry (see [`numeric_config`] for tolerances).
pub fn verify_numeric_metric(
    field: &dyn MetricField,
    id: ConditionId,
    cfg: &SamplingConfig,
) -> Result<ConditionReport, FdError> {
    let sample = fd_sample(field, cfg, None)?;
    Ok(run_on_sample(id, &sample, cfg)?)
}

#[cfg(test)]
mod tests;

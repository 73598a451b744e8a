use serde::{Deserialize, Serialize};

use super::{geometry_sample, ricci_norm, ConditionError, ConditionId, ConditionReport, EigenStructure, GeometrySample, Verdict};
use crate::dsl::ManifoldSpec;
use crate::expr::Expr;
use crate::geometry::{Acc, GeometryEvaluator, PointGeometry};
use crate::linalg::Mat;
use crate::sampling::SamplingConfig;

/// Worst-case structure residuals of a Ricci recurrent metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub points: usize,
    /// max |λ_sorted − {0 ×(n−2), sc/2 ×2}| / (1 + |sc|)
    pub eigen: f64,
    /// Ri^k_iRi^i_ℓ − ½sc·Ri^k_ℓ, normalized
    pub ricci_square: f64,
    /// |sc² − 2|Ri|²| / sc²
    pub scalar_norm: f64,
    /// |Ri·β − (sc/2)β| / |β|
    pub ricci_beta: f64,
}

impl StructureReport {
    pub fn max(&self) -> f64 {
        self.eigen.max(self.ricci_square).max(self.scalar_norm).max(self.ricci_beta)
    }
}

pub fn rr_structure_check(
    report: &ConditionReport,
    sample: &GeometrySample,
    cfg: &SamplingConfig,
) -> Result<StructureReport, ConditionError> {
    if report.id != ConditionId::Rr || report.verdict != Verdict::Holds {
        return Err(ConditionError::PreconditionNotRR);
    }
    let mut out = StructureReport { points: 0, eigen: 0.0, ricci_square: 0.0, scalar_norm: 0.0, ricci_beta: 0.0 };
    for p in &sample.points {
        let n = p.n;
        if ricci_norm(p) < cfg.guard || p.sc.abs() < cfg.guard {
            continue;
        }
        out.points += 1;
        let half = 0.5 * p.sc;
        if let Some(es) = EigenStructure::of(p, cfg.cluster_tol) {
            let mut expected = vec![0.0; n - 2];
            expected.extend([half, half]);
            expected.sort_by(f64::total_cmp);
            for (v, e) in es.values.iter().zip(&expected) {
                out.eigen = out.eigen.max((v - e).abs() / (1.0 + p.sc.abs()));
            }
        }
        let m = p.ricci_mixed();
        for i in 0..n {
            for j in 0..n {
                let mut a = Acc::new();
                for k in 0..n {
                    a.push(m[(i, k)] * m[(k, j)]);
                }
                a.push(-half * m[(i, j)]);
                out.ricci_square = out.ricci_square.max(a.normalized());
            }
        }
        out.scalar_norm = out.scalar_norm.max((p.sc * p.sc - 2.0 * p.ricci_norm_sq()).abs() / (p.sc * p.sc));
        let beta: Vec<f64> = p.dsc().iter().map(|d| d / p.sc).collect();
        let bn = p.form_norm(&beta);
        if bn > 0.0 {
            let rb = p.ricci.matvec(&p.ginv.matvec(&beta));
            let diff: Vec<f64> = rb.iter().zip(&beta).map(|(r, b)| r - half * b).collect();
            out.ricci_beta = out.ricci_beta.max(p.form_norm(&diff) / bn);
        }
    }
    Ok(out)
}

/// ĝ = e^{2λ}g, carrying λ along.
pub fn conformal_spec(s: &ManifoldSpec) -> Result<ManifoldSpec, ConditionError> {
    let lambda = s.lambda.clone().ok_or(ConditionError::MissingLambda)?;
    let factor = (Expr::int(2) * lambda).exp();
    let mut hat = s.clone();
    hat.name = format!("{}-conformal", s.name);
    hat.metric = s.metric.iter().map(|row| row.iter().map(|e| if e.is_zero() { e.clone() } else { &factor * e }).collect()).collect();
    Ok(hat)
}

/// Ricci of e^{2λ}g from the geometry of g:
/// Ri − (n−2)(λ_{;ij} − λ_{;i}λ_{;j}) − (Δλ + (n−2)|∇λ|²)g.
pub fn conformal_ricci_at(p: &PointGeometry<f64>) -> Result<Mat<f64>, ConditionError> {
    let l = p.lambda.as_ref().ok_or(ConditionError::MissingLambda)?;
    let n = p.n;
    let k = n as f64 - 2.0;
    let lap: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| p.ginv[(i, j)] * l.hess[(i, j)]).sum();
    let grad2 = p.form_dot(&l.grad, &l.grad);
    Ok(Mat::from_fn(n, |i, j| {
        p.ricci[(i, j)] - k * (l.hess[(i, j)] - l.grad[i] * l.grad[j]) - (lap + k * grad2) * p.g[(i, j)]
    }))
}

#[derive(Debug, Clone)]
pub struct ConformalComparison {
    pub hat: ManifoldSpec,
    pub points: usize,
    /// max |direct − formula| / (1 + |direct|) over components and points
    pub max_difference: f64,
}

/// Compare the conformal Ricci formula against direct curvature of ĝ.
pub fn conformal_ricci(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<ConformalComparison, ConditionError> {
    let hat = conformal_spec(s)?;
    let sample = geometry_sample(s, cfg)?;
    let ev = GeometryEvaluator::with_order(&hat, 2)?;
    let mut worst = 0.0f64;
    let mut points = 0;
    for p in &sample.points {
        let formula = conformal_ricci_at(p)?;
        let Some(direct) = ev.at::<f64>(&p.point)? else { continue };
        points += 1;
        for (d, f) in direct.ricci.as_slice().iter().zip(formula.as_slice()) {
            worst = worst.max((d - f).abs() / (1.0 + d.abs()));
        }
    }
    Ok(ConformalComparison { hat, points, max_difference: worst })
}

/// Codimension C(n−r+1, 2) of symmetric n×n matrices of rank ≤ r.
pub fn sym_rank_codim(n: usize, r: usize) -> Result<usize, ConditionError> {
    if r > n {
        return Err(ConditionError::InvalidRank { n, r });
    }
    let m = n - r + 1;
    Ok(m * (m - 1) / 2)
}

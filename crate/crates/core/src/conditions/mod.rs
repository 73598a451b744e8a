//! Residual checks for the five curvature conditions, with recovery of the
//! associated one-forms and quasi-Einstein data.
//!
//! Every check consumes a [`GeometrySample`], so exact (symbolic jet) and
//! approximate (finite-difference) geometries go through the same code.

mod structure;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::{bianchi_operator, cotton, ClassicalError};
use crate::dsl::{ManifoldSpec, ValidationError};
use crate::expr::EvalError;
use crate::geometry::{Acc, GeometryEvaluator, PointGeometry};
use crate::linalg::{cluster, generalized_eigen, Mat};
use crate::sampling::{sample_points, SamplingConfig, SamplingError};

pub use structure::{conformal_ricci, conformal_spec, rr_structure_check, sym_rank_codim, ConformalComparison, StructureReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "PRS")]
    Prs,
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "QE1")]
    Qe1,
    #[serde(rename = "QE2")]
    Qe2,
}

impl ConditionId {
    pub const ALL: [ConditionId; 5] = [ConditionId::Rr, ConditionId::Prs, ConditionId::Co, ConditionId::Qe1, ConditionId::Qe2];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::Rr => "RR",
            ConditionId::Prs => "PRS",
            ConditionId::Co => "CO",
            ConditionId::Qe1 => "QE1",
            ConditionId::Qe2 => "QE2",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConditionId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown condition '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "holds" => Ok(Verdict::Holds),
            "fails" => Ok(Verdict::Fails),
            "inconclusive" => Ok(Verdict::Inconclusive),
            _ => Err(format!("unknown verdict '{s}'")),
        }
    }
}

/// A one-form sampled at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSample {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
}

/// Eigenvalues of g⁻¹Ri at a point, grouped into clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<FormSample>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<FormSample>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<FormSample>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen: Option<Vec<EigenSummary>>,
    /// Secondary residuals keyed by name (e.g. "nri_parallel", "ricci_alpha").
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<(String, f64)>,
}

impl Recovered {
    pub fn check(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub points_used: usize,
    pub points_skipped: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub verdict: Verdict,
    pub recovered: Option<Recovered>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("Ricci tensor vanishes at every sample point")]
    RicciVanishes,
    #[error("spec declares no lambda")]
    MissingLambda,
    #[error("geometry lacks third-order data")]
    MissingDerivatives,
    #[error("dimension {0} too low")]
    DimensionTooLow(usize),
    #[error("structure check needs a holding RR report")]
    PreconditionNotRR,
    #[error("rank {r} invalid for dimension {n}")]
    InvalidRank { n: usize, r: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<ClassicalError> for ConditionError {
    fn from(e: ClassicalError) -> Self {
        match e {
            ClassicalError::DimensionTooLow(n) => ConditionError::DimensionTooLow(n),
            ClassicalError::NotSymmetric | ClassicalError::MissingDerivatives => ConditionError::MissingDerivatives,
        }
    }
}

/// Geometry at the accepted sample points, plus the count of requested points
/// that never produced a valid geometry.
#[derive(Debug, Clone)]
pub struct GeometrySample {
    pub points: Vec<PointGeometry<f64>>,
    pub skipped: usize,
}

impl GeometrySample {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.n)
    }

    fn requested(&self) -> usize {
        self.points.len() + self.skipped
    }
}

/// Evaluate exact geometry at seeded points. Points where g is not positive
/// definite or an expression leaves its domain are resampled.
pub fn geometry_sample(spec: &ManifoldSpec, cfg: &SamplingConfig) -> Result<GeometrySample, ConditionError> {
    let ev = GeometryEvaluator::new(spec)?;
    geometry_sample_with(&ev, &cfg.effective_domain(&spec.domain), cfg)
}

pub fn geometry_sample_with(
    ev: &GeometryEvaluator,
    domain: &[(f64, f64)],
    cfg: &SamplingConfig,
) -> Result<GeometrySample, ConditionError> {
    let s = sample_points(domain, cfg, |x| ev.at(x).ok().flatten())?;
    Ok(GeometrySample { points: s.accepted, skipped: s.skipped })
}

/// Per-point residuals of one condition before the verdict is drawn.
struct Tally {
    residuals: Vec<f64>,
    skipped: usize,
}

impl Tally {
    fn new() -> Self {
        Tally { residuals: Vec::new(), skipped: 0 }
    }
}

fn max_normalized<'a>(accs: impl IntoIterator<Item = &'a Acc<f64>>) -> f64 {
    accs.into_iter().fold(0.0, |m, a| m.max(a.normalized()))
}

fn ricci_norm(p: &PointGeometry<f64>) -> f64 {
    p.ricci_norm_sq().abs().sqrt()
}

fn form_at(p: &PointGeometry<f64>, value: Vec<f64>) -> FormSample {
    FormSample { point: p.point.clone(), value }
}

fn ensure_ricci(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<(), ConditionError> {
    if !sample.points.is_empty() && sample.points.iter().all(|p| ricci_norm(p) < cfg.guard) {
        return Err(ConditionError::RicciVanishes);
    }
    Ok(())
}

fn ensure_third_order(sample: &GeometrySample) -> Result<(), ConditionError> {
    if sample.points.iter().any(|p| p.dricci.is_none() || p.dsc.is_none()) {
        return Err(ConditionError::MissingDerivatives);
    }
    Ok(())
}

/// Draw the verdict. `extra` carries a failure reason from condition-specific
/// requirements beyond the residual.
fn finish(
    id: ConditionId,
    sample: &GeometrySample,
    tally: Tally,
    cfg: &SamplingConfig,
    extra: Option<String>,
    recovered: Option<Recovered>,
    mut notes: Vec<String>,
) -> ConditionReport {
    let used = tally.residuals.len();
    let skipped = sample.skipped + tally.skipped;
    let max = tally.residuals.iter().copied().fold(0.0, f64::max);
    let mean = if used == 0 { 0.0 } else { tally.residuals.iter().sum::<f64>() / used as f64 };
    let verdict = if used == 0 || 2 * skipped > sample.requested() {
        notes.push(format!("{skipped} of {} points skipped", sample.requested()));
        Verdict::Inconclusive
    } else if max < cfg.tol && extra.is_none() {
        Verdict::Holds
    } else {
        if let Some(reason) = extra {
            notes.push(reason);
        }
        Verdict::Fails
    };
    let recovered = if verdict == Verdict::Holds { recovered } else { None };
    ConditionReport { id, points_used: used, points_skipped: skipped, max_residual: max, mean_residual: mean, verdict, recovered, notes }
}

fn nonzero_fraction_ok(nonzero: usize, total: usize) -> bool {
    total > 0 && 10 * nonzero >= 9 * total
}


/// ∇Ri = β⊗Ri, tested through P_{ijk} = sc·Ri_{ij;k} − sc_{;k}Ri_{ij}.
pub fn rr_check_sample(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    ensure_ricci(sample, cfg)?;
    ensure_third_order(sample)?;
    let mut tally = Tally::new();
    let mut betas = Vec::new();
    let mut nonzero = 0;
    let mut nri = 0.0f64;
    for p in &sample.points {
        let n = p.n;
        let rn = ricci_norm(p);
        if rn < cfg.guard || p.sc.abs() < cfg.guard {
            tally.skipped += 1;
            continue;
        }
        let (dri, dsc) = (p.dricci(), p.dsc());
        let terms = p.dricci_terms();
        let mut worst = 0.0f64;
        // Ri^{ab}Ri_{ab;k}
        let m = p.ginv.matmul(&p.ricci).matmul(&p.ginv);
        let dnorm: Vec<f64> = (0..n)
            .map(|k| (0..n * n).map(|ab| m.as_slice()[ab] * dri[ab * n + k]).sum())
            .collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut a = Acc::new();
                    a.push_acc(&terms[(i * n + j) * n + k], p.sc);
                    a.push(-dsc[k] * p.ricci[(i, j)]);
                    worst = worst.max(a.normalized());
                    let mut q = Acc::new();
                    q.push_acc(&terms[(i * n + j) * n + k], rn * rn);
                    q.push(-p.ricci[(i, j)] * dnorm[k]);
                    nri = nri.max(q.normalized());
                }
            }
        }
        tally.residuals.push(worst);
        let beta: Vec<f64> = dsc.iter().map(|d| d / p.sc).collect();
        if p.form_norm(&beta) > cfg.tol {
            nonzero += 1;
        }
        betas.push(form_at(p, beta));
    }
    let extra = (!nonzero_fraction_ok(nonzero, betas.len())).then(|| "beta vanishes".to_string());
    let recovered = Recovered { beta: Some(betas), checks: vec![("nri_parallel".into(), nri)], ..Default::default() };
    Ok(finish(ConditionId::Rr, sample, tally, cfg, extra, Some(recovered), Vec::new()))
}

/// Pseudo Ricci symmetry through Q_{ijk} = 2sc·Ri_{ij;k} − 2sc_{;k}Ri_{ij} − sc_{;i}Ri_{kj} − sc_{;j}Ri_{ik}.
pub fn prs_check_sample(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    ensure_ricci(sample, cfg)?;
    ensure_third_order(sample)?;
    let mut tally = Tally::new();
    let mut alphas = Vec::new();
    let mut nonzero = 0;
    let mut sc_skips = 0;
    let (mut ricci_alpha, mut alpha_vs_sc) = (0.0f64, 0.0f64);
    for p in &sample.points {
        let n = p.n;
        let rn = ricci_norm(p);
        if rn < cfg.guard {
            tally.skipped += 1;
            continue;
        }
        if p.sc.abs() < cfg.guard {
            tally.skipped += 1;
            sc_skips += 1;
            continue;
        }
        let (dri, dsc) = (p.dricci(), p.dsc());
        let terms = p.dricci_terms();
        let two = 2.0;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut a = Acc::new();
                    a.push_acc(&terms[(i * n + j) * n + k], two * p.sc);
                    a.push(-two * dsc[k] * p.ricci[(i, j)]);
                    a.push(-dsc[i] * p.ricci[(k, j)]);
                    a.push(-dsc[j] * p.ricci[(i, k)]);
                    worst = worst.max(a.normalized());
                }
            }
        }
        tally.residuals.push(worst);
        // α = ¼∇ln|Ri|² = ½Ri^{ab}Ri_{ab;k}/|Ri|²
        let m = p.ginv.matmul(&p.ricci).matmul(&p.ginv);
        let alpha: Vec<f64> = (0..n)
            .map(|k| 0.5 * (0..n * n).map(|ab| m.as_slice()[ab] * dri[ab * n + k]).sum::<f64>() / (rn * rn))
            .collect();
        let an = p.form_norm(&alpha);
        if an > cfg.tol {
            nonzero += 1;
            let ra = p.ricci.matvec(&p.ginv.matvec(&alpha));
            ricci_alpha = ricci_alpha.max(p.form_norm(&ra) / (rn * an));
        }
        if p.sc.abs() > 1e-6 {
            let diff: Vec<f64> = alpha.iter().zip(dsc).map(|(a, d)| a - 0.5 * d / p.sc).collect();
            alpha_vs_sc = alpha_vs_sc.max(p.form_norm(&diff) / (1.0 + an));
        }
        alphas.push(form_at(p, alpha));
    }
    let extra = (!nonzero_fraction_ok(nonzero, alphas.len())).then(|| "alpha vanishes".to_string());
    let mut notes = Vec::new();
    if sc_skips > 0 {
        notes.push(format!("{sc_skips} points skipped with vanishing scalar curvature"));
    }
    let recovered = Recovered {
        alpha: Some(alphas),
        checks: vec![("ricci_alpha".into(), ricci_alpha), ("alpha_vs_half_dlog_sc".into(), alpha_vs_sc)],
        ..Default::default()
    };
    Ok(finish(ConditionId::Prs, sample, tally, cfg, extra, Some(recovered), notes))
}

/// Vanishing Cotton tensor.
pub fn cotton_check_sample(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    ensure_third_order(sample)?;
    let mut tally = Tally::new();
    for p in &sample.points {
        tally.residuals.push(max_normalized(&cotton(p)?));
    }
    Ok(finish(ConditionId::Co, sample, tally, cfg, None, None, Vec::new()))
}

/// Max normalized 2×2 minor of T = Ri − a·g.
pub fn rank_one_residual(ricci: &Mat<f64>, g: &Mat<f64>, a: f64) -> f64 {
    let n = ricci.n();
    let t = Mat::from_fn(n, |i, j| ricci[(i, j)] - a * g[(i, j)]);
    let mut worst = 0.0f64;
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..n {
                for l in j + 1..n {
                    let mut acc = Acc::new();
                    acc.push(t[(i, j)] * t[(k, l)]);
                    acc.push(-t[(i, l)] * t[(k, j)]);
                    worst = worst.max(acc.normalized());
                }
            }
        }
    }
    worst
}

/// Eigenstructure of g⁻¹Ri with its clustering.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    pub values: Vec<f64>,
    pub clusters: Vec<std::ops::Range<usize>>,
    /// Eigenvectors as columns (contravariant).
    pub vectors: Mat<f64>,
}

impl EigenStructure {
    pub fn of(p: &PointGeometry<f64>, cluster_tol: f64) -> Option<Self> {
        let (values, vectors) = generalized_eigen(&p.ricci, &p.g)?;
        let clusters = cluster(&values, cluster_tol);
        Some(EigenStructure { values, clusters, vectors })
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|r| r.len()).collect()
    }

    pub fn cluster_mean(&self, c: usize) -> f64 {
        let r = self.clusters[c].clone();
        self.values[r.clone()].iter().sum::<f64>() / r.len() as f64
    }

    pub fn summary(&self) -> EigenSummary {
        EigenSummary { values: self.values.clone(), multiplicities: self.multiplicities() }
    }
}

/// Per-point quasi-Einstein data from the eigen method.
struct QeFit {
    a: f64,
    mu_index: usize,
    residual: f64,
}

/// Clusters {a × (n−1), μ}; with a tie (n = 2) the candidate with the smaller
/// minor residual wins.
fn qe_fit(p: &PointGeometry<f64>, es: &EigenStructure) -> Option<QeFit> {
    let n = p.n;
    if es.clusters.len() != 2 {
        return None;
    }
    (0..2)
        .filter(|&c| es.clusters[c].len() == n - 1)
        .map(|c| {
            let a = es.cluster_mean(c);
            let mu_index = es.clusters[1 - c].start;
            QeFit { a, mu_index, residual: rank_one_residual(&p.ricci, &p.g, a) }
        })
        .min_by(|x, y| x.residual.total_cmp(&y.residual))
}

/// Minor method alone: best rank-one residual over every eigenvalue as a
/// candidate for a, and whether T = Ri − a·g is nonzero there.
fn minor_method(p: &PointGeometry<f64>, es: &EigenStructure, cfg: &SamplingConfig) -> (f64, bool) {
    let scale = 1.0 + p.ricci.max_abs();
    es.values
        .iter()
        .map(|&a| {
            let t = Mat::from_fn(p.n, |i, j| p.ricci[(i, j)] - a * p.g[(i, j)]);
            (rank_one_residual(&p.ricci, &p.g, a), t.max_abs() > cfg.cluster_tol * scale)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap_or((f64::INFINITY, false))
}

/// Ri − a·g of rank one, via eigen clustering cross-checked against 2×2 minors.
pub fn qe_rank_check_sample(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    ensure_ricci(sample, cfg)?;
    let mut tally = Tally::new();
    let (mut a_s, mut b_s, mut omegas, mut eigen) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut bad_structure, mut einstein, mut disagree) = (0, 0, 0);
    for p in &sample.points {
        let n = p.n;
        if ricci_norm(p) < cfg.guard {
            tally.skipped += 1;
            continue;
        }
        let Some(es) = EigenStructure::of(p, cfg.cluster_tol) else {
            tally.skipped += 1;
            continue;
        };
        let (minor_res, minor_nonzero) = minor_method(p, &es, cfg);
        let minor_ok = minor_res < cfg.tol && minor_nonzero;
        eigen.push(es.summary());
        match qe_fit(p, &es) {
            Some(fit) => {
                tally.residuals.push(fit.residual);
                if minor_ok != (fit.residual < cfg.tol) {
                    disagree += 1;
                }
                let v: Vec<f64> = (0..n).map(|i| es.vectors[(i, fit.mu_index)]).collect();
                let mut w = p.g.matvec(&v);
                let norm = p.form_norm(&w);
                let sign = w.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m }).signum();
                for x in &mut w {
                    *x *= sign / norm;
                }
                a_s.push(fit.a);
                b_s.push(p.sc - n as f64 * fit.a);
                omegas.push(form_at(p, w));
            }
            None => {
                if es.clusters.len() == 1 {
                    einstein += 1;
                }
                bad_structure += 1;
                tally.residuals.push(minor_res);
                if minor_ok {
                    disagree += 1;
                }
            }
        }
    }
    let mut notes = Vec::new();
    if disagree > 0 {
        notes.push(format!("eigen and minor methods disagree at {disagree} points"));
    }
    let extra = if einstein > 0 && einstein == bad_structure {
        Some("Einstein: b=0".to_string())
    } else if bad_structure > 0 {
        Some(format!("eigenvalue clusters not of type (n-1, 1) at {bad_structure} points"))
    } else {
        None
    };
    let recovered =
        Recovered { a: Some(a_s), b: Some(b_s), omega: Some(omegas), eigen: Some(eigen), ..Default::default() };
    Ok(finish(ConditionId::Qe1, sample, tally, cfg, extra, Some(recovered), notes))
}

/// Ri = (n−2)∇∇λ, plus the Bianchi operator of ∇∇λ as a necessary condition.
pub fn qe_hessian_check_sample(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    let mut tally = Tally::new();
    let mut bianchi = 0.0f64;
    for p in &sample.points {
        let n = p.n;
        let l = p.lambda.as_ref().ok_or(ConditionError::MissingLambda)?;
        let k = n as f64 - 2.0;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut a = Acc::new();
                a.push(p.ricci[(i, j)]);
                a.push(-k * l.hess[(i, j)]);
                worst = worst.max(a.normalized());
            }
        }
        tally.residuals.push(worst);
        if let Some(dh) = &l.dhess {
            bianchi = bianchi.max(max_normalized(&bianchi_operator(p, l.hess.as_slice(), dh)?));
        }
    }
    let recovered = Recovered { checks: vec![("bianchi_hessian".into(), bianchi)], ..Default::default() };
    Ok(finish(ConditionId::Qe2, sample, tally, cfg, None, Some(recovered), Vec::new()))
}

pub fn check_sample(id: ConditionId, sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    match id {
        ConditionId::Rr => rr_check_sample(sample, cfg),
        ConditionId::Prs => prs_check_sample(sample, cfg),
        ConditionId::Co => cotton_check_sample(sample, cfg),
        ConditionId::Qe1 => qe_rank_check_sample(sample, cfg),
        ConditionId::Qe2 => qe_hessian_check_sample(sample, cfg),
    }
}

/// Like [`check_sample`], but a Ricci-flat sample is reported as failing
/// instead of raising [`ConditionError::RicciVanishes`].
pub fn run_on_sample(id: ConditionId, sample: &GeometrySample, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    match check_sample(id, sample, cfg) {
        Err(ConditionError::RicciVanishes) => Ok(ConditionReport {
            id,
            points_used: 0,
            points_skipped: sample.requested(),
            max_residual: 0.0,
            mean_residual: 0.0,
            verdict: Verdict::Fails,
            recovered: None,
            notes: vec!["Ricci tensor vanishes".into()],
        }),
        r => r,
    }
}

pub fn rr_check(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    rr_check_sample(&geometry_sample(s, cfg)?, cfg)
}

pub fn prs_check(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    prs_check_sample(&geometry_sample(s, cfg)?, cfg)
}

pub fn cotton_check(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    if s.dim() < 3 {
        return Err(ConditionError::DimensionTooLow(s.dim()));
    }
    cotton_check_sample(&geometry_sample(s, cfg)?, cfg)
}

pub fn qe_rank_check(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    qe_rank_check_sample(&geometry_sample(s, cfg)?, cfg)
}

pub fn qe_hessian_check(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<ConditionReport, ConditionError> {
    if s.lambda.is_none() {
        return Err(ConditionError::MissingLambda);
    }
    qe_hessian_check_sample(&geometry_sample(s, cfg)?, cfg)
}

/// Run the condition checks that apply to a sample: all five when λ is
/// present, otherwise all but QE2. Vanishing Ricci counts as failing.
pub fn classify_sample(sample: &GeometrySample, cfg: &SamplingConfig) -> Result<Vec<ConditionReport>, ConditionError> {
    let has_lambda = sample.points.first().is_some_and(|p| p.lambda.is_some());
    ConditionId::ALL
        .into_iter()
        .filter(|id| *id != ConditionId::Qe2 || has_lambda)
        .filter(|id| *id != ConditionId::Co || sample.dim() >= 3)
        .map(|id| run_on_sample(id, sample, cfg))
        .collect()
}

pub fn classify(s: &ManifoldSpec, cfg: &SamplingConfig) -> Result<Vec<ConditionReport>, ConditionError> {
    classify_sample(&geometry_sample(s, cfg)?, cfg)
}

/// Cross-condition consistency notes for a classify run in dimension `n`.
pub fn consistency_notes(reports: &[ConditionReport], n: usize) -> Vec<String> {
    let verdict = |id| reports.iter().find(|r| r.id == id).map(|r| r.verdict);
    let holds = |id| verdict(id) == Some(Verdict::Holds);
    let mut notes = Vec::new();
    if holds(ConditionId::Rr) {
        let ok = !holds(ConditionId::Co);
        notes.push(format!("RR excludes CO: {}", if ok { "consistent" } else { "VIOLATED" }));
        let ok = !holds(ConditionId::Prs);
        notes.push(format!("RR excludes PRS: {}", if ok { "consistent" } else { "VIOLATED" }));
        if n == 3 {
            let ok = holds(ConditionId::Qe1);
            notes.push(format!("RR in dimension 3 implies QE1: {}", if ok { "consistent" } else { "VIOLATED" }));
        } else {
            let ok = !holds(ConditionId::Qe1);
            notes.push(format!("RR in dimension > 3 excludes QE1: {}", if ok { "consistent" } else { "VIOLATED" }));
        }
    }
    notes
}

#[cfg(test)]
mod tests;

//! Seeded point sampling over a coordinate box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("empty domain for coordinate {0}")]
    EmptyDomain(usize),
    #[error("sampling needs at least one point")]
    NoPoints,
    #[error("tolerance must be positive")]
    BadTolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
    /// Threshold below which sc, |Ri| and denominators count as vanishing.
    pub guard: f64,
    /// Relative gap below which eigenvalues of g⁻¹Ri are merged.
    pub cluster_tol: f64,
    /// Per-coordinate replacement for the spec domain.
    pub domain: Vec<Option<(f64, f64)>>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { points: 50, seed: 42, tol: 1e-8, guard: 1e-10, cluster_tol: 1e-6, domain: Vec::new() }
    }
}

impl SamplingConfig {
    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.points == 0 {
            return Err(SamplingError::NoPoints);
        }
        if !(self.tol > 0.0) {
            return Err(SamplingError::BadTolerance);
        }
        Ok(())
    }

    /// The spec domain with overrides applied.
    pub fn effective_domain(&self, spec_domain: &[(f64, f64)]) -> Vec<(f64, f64)> {
        spec_domain
            .iter()
            .enumerate()
            .map(|(i, d)| self.domain.get(i).copied().flatten().unwrap_or(*d))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled<P> {
    pub accepted: Vec<P>,
    /// Requested points that could not be filled within the attempt budget.
    pub skipped: usize,
}

/// Draw up to `10 * cfg.points` uniform points from `domain`, keeping those
/// `accept` maps to `Some`, until `cfg.points` are collected.
pub fn sample_points<P>(
    domain: &[(f64, f64)],
    cfg: &SamplingConfig,
    mut accept: impl FnMut(&[f64]) -> Option<P>,
) -> Result<Sampled<P>, SamplingError> {
    cfg.validate()?;
    for (i, (lo, hi)) in domain.iter().enumerate() {
        if !(hi > lo) {
            return Err(SamplingError::EmptyDomain(i));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut accepted = Vec::with_capacity(cfg.points);
    let mut x = vec![0.0; domain.len()];
    for _ in 0..10 * cfg.points {
        if accepted.len() == cfg.points {
            break;
        }
        for (xi, (lo, hi)) in x.iter_mut().zip(domain) {
            *xi = rng.gen_range(*lo..*hi);
        }
        if let Some(p) = accept(&x) {
            accepted.push(p);
        }
    }
    let skipped = cfg.points - accepted.len();
    Ok(Sampled { accepted, skipped })
}

/// Uniform points with no acceptance test.
pub fn uniform_points(domain: &[(f64, f64)], cfg: &SamplingConfig) -> Result<Vec<Vec<f64>>, SamplingError> {
    Ok(sample_points(domain, cfg, |x| Some(x.to_vec()))?.accepted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        let cfg = SamplingConfig::default().with_points(1);
        let d = [(0.0, 1.0), (0.0, 1.0)];
        let a = uniform_points(&d, &cfg).unwrap();
        assert_eq!(a, uniform_points(&d, &cfg).unwrap());
        assert_ne!(a, uniform_points(&d, &cfg.clone().with_seed(7)).unwrap());
        assert!(a[0].iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn empty_interval_is_rejected() {
        let cfg = SamplingConfig::default();
        assert_eq!(sample_points(&[(0.0, 1.0), (2.0, 2.0)], &cfg, |_| Some(())), Err(SamplingError::EmptyDomain(1)));
        assert_eq!(uniform_points(&[(0.0, 1.0)], &cfg.clone().with_points(0)), Err(SamplingError::NoPoints));
    }

    #[test]
    fn rejected_points_are_resampled_then_counted() {
        let cfg = SamplingConfig::default().with_points(20);
        let half = sample_points(&[(0.0, 1.0)], &cfg, |x| (x[0] < 0.5).then_some(())).unwrap();
        assert_eq!((half.accepted.len(), half.skipped), (20, 0));
        let none = sample_points(&[(0.0, 1.0)], &cfg, |_| None::<()>).unwrap();
        assert_eq!(none.skipped, 20);
    }

    #[test]
    fn overrides_replace_domain() {
        let cfg = SamplingConfig { domain: vec![None, Some((5.0, 6.0))], ..Default::default() };
        assert_eq!(cfg.effective_domain(&[(0.0, 1.0), (0.0, 1.0)]), vec![(0.0, 1.0), (5.0, 6.0)]);
    }
}

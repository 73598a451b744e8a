use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::ManifoldSpec;

pub use crate::corpus::random_perturbation as cubic_perturbation;

pub fn sample(s: &ManifoldSpec, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| s.domain.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect()).collect()
}

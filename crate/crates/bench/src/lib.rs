//! Fixtures shared by the benchmarks.

use ssrbell_core::sampling::{random_fixed_number_pure, rng_from_seed};
use ssrbell_core::{PureState, Result};

/// Seeded pure reference with fixed total number `n`.
pub fn fixed_reference(n: usize, seed: u64) -> Result<PureState> {
    random_fixed_number_pure(&mut rng_from_seed(seed), n)
}

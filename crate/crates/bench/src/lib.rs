//! Fixtures shared by the criterion benches.

use uplift_core::data::{pool_outcome_sets, pool_treatment_sets, PooledWSet, PooledZSet};
use uplift_core::synthetic::{generate, SyntheticConfig, SyntheticData};

/// Synthetic instance with `n` pooled samples of each label kind.
pub fn instance(n: usize, seed: u64) -> SyntheticData {
    let config = SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    }
    .with_pooled_sizes(n, n);
    generate(&config).expect("default synthetic config is valid")
}

pub fn pooled(data: &SyntheticData) -> (PooledZSet, PooledWSet) {
    let zs = pool_outcome_sets(&data.outcome_sets[0], &data.outcome_sets[1]).expect("sources 1, 2");
    let ws = pool_treatment_sets(&data.treatment_sets[0], &data.treatment_sets[1]).expect("sources 1, 2");
    (zs, ws)
}

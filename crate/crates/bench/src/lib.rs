//! Fixtures shared by the benchmarks.

use mupir_core::{MessageSet, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Single-database configurations with `S` users, paired with random messages.
pub fn fixture(messages: usize, sources: usize, seed: u64) -> (SystemConfig, MessageSet) {
    let config = SystemConfig::single_database(messages, sources).expect("valid sizes");
    let l = mupir_core::block_length(sources, messages).expect("block length fits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (config, MessageSet::random(messages, l, &mut rng))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

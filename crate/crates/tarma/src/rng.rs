//! Deterministic random number streams.
//!
//! Every stochastic routine in the crate owns a ChaCha stream derived
//! from (seed, stream index), so replicate-level parallelism cannot
//! change any numeric output: replicate i always consumes stream i.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A fresh generator for the given seed and stream index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

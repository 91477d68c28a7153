//! Seeded randomness. Every stochastic routine in the crate draws from
//! ChaCha8 seeded through [`rand::SeedableRng::seed_from_u64`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of `seed`, used to split work into
/// batches whose results do not depend on scheduling.
pub fn split(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A `u64` seed derived from stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    use rand::RngCore;
    split(seed, stream).next_u64()
}

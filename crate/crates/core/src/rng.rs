//! Deterministic random substreams.
//!
//! Every stochastic stage takes an explicit generator. The harness derives a
//! fresh ChaCha stream per (master seed, tag path) so that drops, fading
//! blocks and noise are reproducible and independent of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the given tag path under `master`.
pub fn substream(master: u64, tags: &[u64]) -> SimRng {
    let mut h = splitmix64(master);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    SimRng::seed_from_u64(h)
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

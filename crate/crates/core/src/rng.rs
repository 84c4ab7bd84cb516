//! Seeded random streams.
//!
//! Every random quantity derives from one 64-bit seed. A run that needs several
//! independent generators uses ChaCha8 keyed by the seed, with one stream
//! number per consumer:
//!
//! * stream 0 drives single trajectories (circle and pipeline alike, so the two
//!   tables see the same angle sequence for the same seed);
//! * stream `i` drives particle `i` of an ensemble;
//! * [`derive_seed`] produces sub-seeds for auxiliary experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser of `seed ^ tag`; used to key auxiliary experiments off
/// the main seed without sharing a stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

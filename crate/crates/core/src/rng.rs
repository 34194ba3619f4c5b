//! Seeded randomness.
//!
//! All stochastic behaviour in the crate draws from ChaCha8 streams. A stream
//! is identified by a `(seed, stream)` pair so that independent consumers
//! (weight init, batch sampling, augmentation, rendering) never share state
//! and any of them can be recreated from its pair alone. ChaCha output is
//! platform independent, which makes every artifact bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Creates the generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a label into a stream id so call sites can name their streams.
pub fn stream_id(label: &str, index: u64) -> u64 {
    // FNV-1a over the label, then fold in the index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

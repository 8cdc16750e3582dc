//! Named, seeded random streams.
//!
//! Every randomized operation draws from its own ChaCha8 stream selected by a
//! fixed operation name and the caller's seed, so outputs are reproducible
//! across platforms and independent of call order between operations.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// FNV-1a hash of the stream name, used as the ChaCha stream id.
fn stream_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic stream for `(name, seed)`.
pub fn stream(name: &str, seed: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

/// Derives `count` child seeds from a master seed, in order.
pub fn child_seeds(name: &str, master: u64, count: usize) -> Vec<u64> {
    let mut rng = stream(name, master);
    (0..count).map(|_| rng.next_u64()).collect()
}

//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a stream identified by
//! `(master_seed, trace_index, lane)`. The 256-bit ChaCha key is built by
//! chaining the SplitMix64 finalizer:
//!
//! ```text
//! k0 = mix(master_seed ^ 0x6A09E667F3BCC909)
//! k1 = mix(k0 ^ trace_index)
//! k2 = mix(k1 ^ lane)
//! k3 = mix(k2 ^ 0xBB67AE8584CAA73B)
//! ```
//!
//! so the stream for one trace never depends on how many other traces are
//! generated or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default master seed shipped with the CLI and the acceptance suite.
pub const DEFAULT_SEED: u64 = 1963;

pub type StreamRng = ChaCha8Rng;

/// Independent purposes a single trace may need randomness for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Lane {
    /// Field amplitudes / phase diffusion.
    Field = 1,
    /// Slow frequency jitter of a laser.
    Jitter = 2,
    /// Photon-count sampling from a field trace.
    Counts = 3,
    /// Single-mode state sampling.
    States = 4,
    /// Permutation tests.
    Permutation = 5,
}

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_key(master_seed: u64, trace_index: u64, lane: Lane) -> [u8; 32] {
    let k0 = mix64(master_seed ^ 0x6A09_E667_F3BC_C909);
    let k1 = mix64(k0 ^ trace_index);
    let k2 = mix64(k1 ^ lane as u64);
    let k3 = mix64(k2 ^ 0xBB67_AE85_84CA_A73B);
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([k0, k1, k2, k3]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

pub fn stream(master_seed: u64, trace_index: u64, lane: Lane) -> StreamRng {
    StreamRng::from_seed(stream_key(master_seed, trace_index, lane))
}

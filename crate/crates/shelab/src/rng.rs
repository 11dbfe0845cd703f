//! Deterministic random streams.
//!
//! One 64-bit user seed plus a list of integer labels (replica index,
//! step counter, purpose tag) is folded through a splitmix64 chain
//! into a 256-bit ChaCha12 key. Every labelled stream is therefore
//! independent of the others and can be recreated from scratch at any
//! point, which is what makes restarts and parallel replicas
//! bit-reproducible: nothing ever depends on how much randomness some
//! other stream has consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The splitmix64 output function (finalizer included).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `labels` into `seed` and expands the result into a ChaCha12
/// generator keyed with 256 derived bits.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha12Rng {
    let mut s = splitmix64(seed);
    for &label in labels {
        s = splitmix64(s ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    let mut key = [0u8; 32];
    let mut t = s;
    for chunk in key.chunks_exact_mut(8) {
        t = splitmix64(t);
        chunk.copy_from_slice(&t.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

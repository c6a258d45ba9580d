//! Labeled, platform-independent random sub-streams.
//!
//! Every random draw in a simulation comes from a stream identified by a
//! `(seed, label)` pair. Streams are ChaCha8 generators keyed by a stable
//! 64-bit mix of the seed and the label bytes, so the same pair yields the
//! same sequence on every platform and toolchain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random source used throughout the crate.
pub type SimRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over `bytes`, starting from `state`.
fn fnv1a(mut state: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        state ^= u64::from(b);
        state = state.wrapping_mul(FNV_PRIME);
    }
    state
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable hash of a token under a salt. Used for feature hashing.
pub fn stable_hash(salt: u64, field: &str, token: &str) -> u64 {
    let mut h = fnv1a(FNV_OFFSET ^ mix64(salt), field.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, token.as_bytes());
    mix64(h)
}

/// Derives a child seed from a parent seed and a label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    mix64(fnv1a(FNV_OFFSET ^ mix64(seed), label.as_bytes()))
}

/// Returns the deterministic random stream for `(seed, label)`.
pub fn make_rng(seed: u64, stream_label: &str) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, stream_label))
}

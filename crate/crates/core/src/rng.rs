//! Seedable, portable randomness shared by all stochastic operations.
//!
//! Every random choice in the crate flows through [`seeded_rng`] or
//! [`derive_seed`], so a fixed top-level seed reproduces byte-identical
//! artifacts on any platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The portable generator used throughout the crate.
pub type PortableRng = ChaCha8Rng;

/// Creates the portable generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> PortableRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a parent seed and a stream id.
///
/// Used to give each subtree, tree node, or worker its own generator so that
/// results do not depend on scheduling order. SplitMix64 finalizer.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    let mut z = parent ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

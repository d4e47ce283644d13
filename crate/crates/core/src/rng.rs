//! Seeded random streams.
//!
//! Every random choice in the crate goes through [`seeded`], a xoshiro256++
//! generator whose state is expanded from a 64-bit seed with splitmix64.
//! Independent sub-streams (one per node, one per purpose) are obtained with
//! [`derive_seed`].

use rand::rngs::SmallRng;
use rand::SeedableRng;

pub type Rng = SmallRng;

pub fn seeded(seed: u64) -> Rng {
    SmallRng::seed_from_u64(seed)
}

/// One splitmix64 output step.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the `stream`-th independent sub-stream of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

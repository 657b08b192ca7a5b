//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`SimRng`] built from a
//! `u64` seed. Parallel work items derive their own seed from a base seed and
//! an index path with [`derive_seed`], so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `base` with an index path into a new, well separated seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stream tags used when deriving seeds, kept in one place so that
/// independent streams never collide.
pub(crate) mod tag {
    pub const POSITIONS: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const GRAPHS: u64 = 3;
    pub const CALIBRATION: u64 = 4;
    pub const NULL_REFERENCE: u64 = 5;
    pub const REPLICATION: u64 = 6;
}

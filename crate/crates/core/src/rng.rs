//! Deterministic random substreams.
//!
//! A substream is identified by the user seed and a short path of integers
//! (stage tag, replication index, node index, ...). Work items draw from their
//! own substream, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the substream `(seed, path...)`.
pub fn substream(seed: u64, path: &[u64]) -> Rng {
    let mut key = splitmix64(seed);
    for &p in path {
        key = splitmix64(key ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    ChaCha8Rng::seed_from_u64(key)
}

/// Stage tags so different pipeline stages never share a substream.
pub mod tag {
    pub const PATH: u64 = 1;
    pub const FBAR: u64 = 2;
    pub const CELL_MASS: u64 = 3;
    pub const LBG: u64 = 4;
    pub const REJECTION: u64 = 5;
    pub const CELL_STATS: u64 = 6;
    pub const ROC: u64 = 7;
    pub const TRAINING: u64 = 8;
    pub const MARGINAL: u64 = 9;
}

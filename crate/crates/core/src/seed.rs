//! Hierarchical seed derivation.
//!
//! Every random stream in a simulation is keyed by a path such as
//! `master -> run -> iteration -> user`. Each step mixes the parent seed with
//! a child index through SplitMix64, so adding more runs or users never
//! changes the streams of the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used everywhere in the crate. ChaCha output is specified
/// independently of platform and word size.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of child `index` under `parent`.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(GOLDEN))
}

/// Derive a seed from a path of indices, e.g. `derive_path(master, &[run, t, user])`.
pub fn derive_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |seed, &i| derive(seed, i))
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream tags keep sibling consumers of the same node apart.
pub mod stream {
    pub const TRAINING: u64 = 0x7472_6169;
    pub const POLICY: u64 = 0x706f_6c69;
    pub const FEEDBACK: u64 = 0x6665_6564;
    pub const SAMPLING: u64 = 0x7361_6d70;
    pub const COMPLETION: u64 = 0x636f_6d70;
    pub const RANKING: u64 = 0x7261_6e6b;
}

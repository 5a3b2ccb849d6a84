//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! 64-bit seed plus a stream id. Stream ids are built from a purpose tag and
//! up to three indices so that, e.g., the dropout mask of step 17 in fold 3
//! never depends on how many draws some other consumer made first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into stream ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Synth = 1,
    Init = 2,
    Shuffle = 3,
    Dropout = 4,
    Folds = 5,
    Repeat = 6,
    Fold = 7,
    Bench = 8,
    Test = 9,
}

/// SplitMix64 finalizer, used to mix tags and indices into stream ids.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_id(purpose: Purpose, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(mix(purpose as u64), |acc, &i| mix(acc ^ mix(i)))
}

/// Independent generator for `(seed, purpose, indices)`.
pub fn stream(seed: u64, purpose: Purpose, indices: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, indices));
    rng
}

/// Derives a child seed, e.g. the seed of repeat `r` from the master seed.
pub fn derive_seed(seed: u64, purpose: Purpose, indices: &[u64]) -> u64 {
    mix(seed ^ stream_id(purpose, indices))
}

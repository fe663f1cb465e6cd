//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, domain, index)`. The seed and domain are
//! mixed into a ChaCha key and the index selects the ChaCha stream, so the
//! numbers drawn for index `l` never depend on how many other indices were
//! evaluated, or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream domains. Keeping them distinct prevents, e.g., the data of
/// replication `r` from sharing numbers with the shock draws of that replication.
pub mod domain {
    pub const SHOCK_DRAWS: u64 = 0x01;
    pub const MOMENTS: u64 = 0x02;
    pub const DESIGN: u64 = 0x10;
    pub const DATA: u64 = 0x11;
    pub const REP_SEED: u64 = 0x12;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed, e.g. the seed of replication `index`.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn stream(seed: u64, domain: u64, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ splitmix64(domain.wrapping_add(0xA076_1D64_78BD_642F));
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

//! Counter-style RNG streams keyed by `(seed, level, chain, purpose)`.
//!
//! Every random decision draws from a stream derived from its coordinates,
//! so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Init = 1,
    Resample = 2,
    Mh = 3,
    Simulation = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one `(level, chain, purpose)` cell.
pub fn stream(seed: u64, level: u64, chain: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for v in [level, chain, purpose as u64] {
        h = splitmix(h ^ v);
    }
    let mut key = [0u8; 32];
    let mut s = h;
    for chunk in key.chunks_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

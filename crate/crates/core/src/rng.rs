//! Reproducible random streams keyed by `(seed, replication, stream)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Replication id reserved for objects shared by every replication.
pub const SHARED: u64 = u64::MAX;

/// Stream ids.
pub mod streams {
    pub const SIGNAL: u64 = 1;
    pub const LOADING: u64 = 2;
    pub const DESIGN: u64 = 3;
    pub const NOISE: u64 = 4;
}

/// Generator for one `(seed, replication, stream)` triple.
///
/// Streams are independent of each other and of the order in which
/// replications are evaluated.
pub fn stream(seed: u64, replication: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(b"tuckinf1");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

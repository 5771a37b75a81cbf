//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! 256-bit key is the user seed followed by up to three stream coordinates
//! (a domain tag, a replication index, a draw index, ...). Two streams with
//! different coordinates are independent, and the value of a stream does not
//! depend on which thread consumes it or in what order, which is what makes
//! the parallel code paths bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keeping the streams of different stages apart.
pub mod tag {
    pub const WEIGHTS: u64 = 0x5745_4947_4854_5301;
    pub const VB_DRAWS: u64 = 0x5642_4452_4157_5302;
    pub const HORSESHOE: u64 = 0x4853_484f_4553_4803;
    pub const DATA: u64 = 0x4441_5441_4745_4e04;
    pub const STUDY: u64 = 0x5354_5544_5952_4e05;
}

/// Returns the stream keyed by `(seed, path[0], path[1], path[2])`.
///
/// Missing coordinates are zero; more than three coordinates is a bug.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    assert!(path.len() <= 3, "stream path has at most three coordinates");
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for (k, word) in path.iter().enumerate() {
        key[8 * (k + 1)..8 * (k + 2)].copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, used when a stage hands a seed to a component that
/// builds its own streams.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    use rand::RngCore;
    stream(seed, path).next_u64()
}

//! Seed derivation.
//!
//! Every random source in a run is its own ChaCha stream whose seed is a
//! fixed function of the master seed and a stream key. Agents never share a
//! stream with each other or with the environment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Identifies one random stream within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKey {
    /// Arrivals and service outcomes.
    Environment,
    /// The pre-generated dynamic refresh schedule.
    Refresh,
    /// A queue occupant, identified by its queue id and join slot.
    Agent { queue: usize, join_slot: u64 },
    /// The centralized controller or any other run-wide policy object.
    Controller,
}

impl StreamKey {
    fn words(self) -> [u64; 3] {
        match self {
            StreamKey::Environment => [1, 0, 0],
            StreamKey::Refresh => [2, 0, 0],
            StreamKey::Agent { queue, join_slot } => [3, queue as u64, join_slot],
            StreamKey::Controller => [4, 0, 0],
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 64-bit seed of a stream.
pub fn derive_seed(master: u64, key: StreamKey) -> u64 {
    key.words()
        .iter()
        .fold(splitmix64(master), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn stream(master: u64, key: StreamKey) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, key))
}

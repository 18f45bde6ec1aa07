//! Counter-based random streams.
//!
//! Every `(seed, domain, setting)` triple gets its own ChaCha key and every
//! round its own stream number under that key, so any round can be replayed
//! in isolation and the execution order never changes a draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent families of streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Hidden variables shared by the parties.
    Shared = 0x5348_4152,
    /// The M-box's private coin.
    Box = 0x4d42_4f58,
    /// Random measurement settings.
    Settings = 0x5345_5454,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key(seed: u64, domain: Domain, index: u64) -> [u8; 32] {
    let mut state = seed ^ (domain as u64).rotate_left(32);
    let mut out = [0u8; 32];
    let mut index_state = index;
    for chunk in out.chunks_exact_mut(8) {
        let word = splitmix64(&mut state) ^ splitmix64(&mut index_state);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    out
}

/// The generator for `(seed, domain, index, counter)`.
pub fn stream(seed: u64, domain: Domain, index: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key(seed, domain, index));
    rng.set_stream(counter);
    rng
}

/// Shared-randomness and box generators for one round.
pub fn round_streams(seed: u64, setting: u64, round: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    (
        stream(seed, Domain::Shared, setting, round),
        stream(seed, Domain::Box, setting, round),
    )
}

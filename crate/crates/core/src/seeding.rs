//! Counter-based derivation of independent random streams from one master seed.
//!
//! Every random draw in a run belongs to a `(purpose, round, agent)` cell. The
//! cell's stream seed is
//!
//! ```text
//! mix(mix(mix(mix(master) ^ purpose) ^ round) ^ agent)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer. The resulting 64-bit value seeds a
//! ChaCha8 generator. Graph, data and initialization randomness therefore never
//! share a stream, and any single cell can be regenerated without replaying the
//! others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Graph = 0x4752_4150,
    Data = 0x4441_5441,
    Init = 0x494e_4954,
    Solver = 0x534f_4c56,
    Sampling = 0x5341_4d50,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, purpose: Purpose, round: u64, agent: u64) -> u64 {
    let h = mix(mix(master) ^ purpose as u64);
    mix(mix(h ^ round) ^ agent)
}

pub fn stream(master: u64, purpose: Purpose, round: u64, agent: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, purpose, round, agent))
}

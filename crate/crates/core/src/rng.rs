//! Deterministic random streams.
//!
//! Every trial gets its own ChaCha key derived from the master seed, and every
//! edge gets its own stream under that key. Draws therefore depend only on
//! `(master, trial, edge)`, never on scheduling or iteration order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::AgentId;

const ADVERSARY_TAG: u64 = 1 << 63;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix(mix(master) ^ trial)
}

fn stream(master: u64, trial: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master, trial));
    rng.set_stream(key);
    rng
}

/// Trust observation stream of edge `from -> to` in a given trial.
pub fn edge_stream(master: u64, trial: u64, to: AgentId, from: AgentId) -> ChaCha8Rng {
    debug_assert!(to < 1 << 31 && from < 1 << 32);
    stream(master, trial, ((to as u64) << 32) | from as u64)
}

/// Private stream of malicious agent `agent` in a given trial.
pub fn adversary_stream(master: u64, trial: u64, agent: AgentId) -> ChaCha8Rng {
    stream(master, trial, ADVERSARY_TAG | agent as u64)
}

//! Seeded random streams.
//!
//! A run has one root seed. Every consumer of randomness gets its own
//! substream whose seed is `splitmix64(root ^ fnv1a(label))`, so adding an
//! agent (label `agent/<i>`) never perturbs the state sequence (label
//! `states`). Both hash functions are fixed here rather than taken from
//! `std::hash`, whose output is not stable across releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const STATES_LABEL: &str = "states";

pub fn agent_label(index: usize) -> String {
    format!("agent/{index}")
}

fn fnv1a(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the substream identified by `label` under `root`.
pub fn substream_seed(root: u64, label: &str) -> u64 {
    splitmix64(root ^ fnv1a(label))
}

pub fn substream(root: u64, label: &str) -> StreamRng {
    StreamRng::seed_from_u64(substream_seed(root, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn labels_give_distinct_streams() {
        let a = substream_seed(42, STATES_LABEL);
        let b = substream_seed(42, &agent_label(0));
        let c = substream_seed(43, STATES_LABEL);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn substream_is_reproducible() {
        let mut x = substream(7, "states");
        let mut y = substream(7, "states");
        for _ in 0..100 {
            assert_eq!(x.next_u64(), y.next_u64());
        }
    }

    #[test]
    fn hash_values_are_pinned() {
        // Changing either hash would silently change every recorded experiment.
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }
}

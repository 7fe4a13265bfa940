//! Seed derivation.
//!
//! Every random draw in the crate starts from a [`Seed`]. Child seeds are
//! derived by hashing `(parent, tag)` with SplitMix64, so two components
//! that take different tags never observe each other's draws, regardless of
//! call order. Each seed hands out a fresh ChaCha8 generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub fn child(self, tag: u64) -> Seed {
        Seed(splitmix64(splitmix64(self.0) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
    }

    /// Child seed keyed by a string label.
    pub fn named(self, label: &str) -> Seed {
        // FNV-1a keeps the derivation stable across platforms and builds.
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        self.child(h)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

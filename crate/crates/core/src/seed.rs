//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! whose seed is derived from a master seed and a label, so streams never
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from `master` and a textual label.
pub fn derive(master: u64, label: &str) -> u64 {
    derive_bytes(master, label.as_bytes())
}

/// Derives a child seed from `master` and arbitrary bytes.
pub fn derive_bytes(master: u64, data: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(data);
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// Cheap order-free mixer for per-item streams (splitmix64 finaliser).
pub fn mix(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

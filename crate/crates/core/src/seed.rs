//! Seed splitting.
//!
//! A child seed is the first eight bytes (little endian) of
//! `SHA-256(master_seed.to_le_bytes() || label)`. Labels are plain strings
//! such as `"day1"`, `"city:grid4"` or `"cell:ws=0.275,mp=1"`, so every unit of
//! work gets an independent stream no matter which thread runs it.

use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Derives a seed from a chain of labels, e.g. `["city:a", "cell:b"]`.
pub fn derive_path(master: u64, labels: &[&str]) -> u64 {
    labels.iter().fold(master, |seed, label| derive_seed(seed, label))
}

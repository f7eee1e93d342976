//! Sub-seed derivation. Every consumer of randomness gets its own stream,
//! keyed by a label and derived from one master seed.

use sha2::{Digest, Sha256};

/// Derives a child seed from `master` and a textual `label`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 has 32 bytes"))
}

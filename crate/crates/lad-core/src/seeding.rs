//! Deterministic seed derivation for parallel sub-tasks.
//!
//! Every concurrent unit of work (a tree in the forest, a segment in the
//! boundary search, an instance in the fidelity sweep) gets its own RNG seeded
//! from the master seed and a stream tag, so results are independent of
//! execution order and thread count.

/// SplitMix64 finalizer; good single-word avalanching.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a stream index.
pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix(master ^ splitmix(stream.wrapping_add(1)))
}

/// Derive a child seed from a master seed and two stream indices
/// (typically a purpose tag and an item index).
pub fn derive2(master: u64, tag: u64, index: u64) -> u64 {
    derive(derive(master, tag), index)
}

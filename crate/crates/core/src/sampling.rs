//! Deterministic per-index random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for draw `index` of `stream` under `seed`. Independent of the
/// thread that happens to evaluate it.
pub fn indexed_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Largest score in `items`; ties go to the earliest entry.
pub fn best_by_index<T: Clone>(items: &[Option<(f64, T, T)>]) -> Option<(f64, T, T)> {
    let mut best: Option<&(f64, T, T)> = None;
    for item in items.iter().flatten() {
        if best.is_none_or(|b| item.0 > b.0) {
            best = Some(item);
        }
    }
    best.cloned()
}

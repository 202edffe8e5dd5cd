//! Seed splitting. Every replica gets
//! `hash64(master, grid_index, replica_index)`, so results do not depend on
//! scheduling or thread count.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix(mix(mix(master) ^ grid_index) ^ replica_index)`.
pub fn hash64(master: u64, grid_index: u64, replica_index: u64) -> u64 {
    mix(mix(mix(master) ^ grid_index) ^ replica_index)
}

/// Seed for the grid point's spectrum (only used by random spectra), kept
/// apart from every replica seed.
pub fn spectrum_seed(master: u64, grid_index: u64) -> u64 {
    hash64(!master, grid_index, u64::MAX)
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of splitmix64.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `replica` at size `n`:
/// `s = splitmix64(splitmix64(splitmix64(base) ^ n) ^ replica)`.
pub fn derive_seed(base: u64, n: usize, replica: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ n as u64) ^ replica as u64)
}

pub fn replica_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

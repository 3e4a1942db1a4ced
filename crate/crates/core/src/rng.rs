//! Deterministic seeding helpers.
//!
//! Every sampling entry point takes an explicit 64-bit seed; no global
//! generator exists. Replicate and restart seeds are derived by counter
//! splitting so that parallel evaluation order cannot change results.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Bijective on u64, good avalanche.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a counter.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(counter.wrapping_mul(0xa24b_aed4_963e_e407)))
}

/// The crate-wide deterministic generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on the open interval (0, 1).
///
/// Maps the top 53 bits of a u64 to (k + 0.5) * 2^-53, so neither endpoint
/// can occur and inverse-CDF sampling never evaluates a quantile at 0 or 1.
pub fn open01(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw via the inverse CDF, matching the crate's
/// inverse-transform sampling convention.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    use statrs::distribution::ContinuousCDF;
    let n = statrs::distribution::Normal::standard();
    n.inverse_cdf(open01(rng))
}

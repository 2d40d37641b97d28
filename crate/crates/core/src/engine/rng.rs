//! Deterministic random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// MurmurHash3 64-bit finalizer.
#[inline]
pub fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// FNV-1a over a name; used to turn job and stream names into integers.
pub fn name_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[inline]
fn absorb(h: u64, x: u64) -> u64 {
    fmix64(h.wrapping_add(x).wrapping_mul(GOLDEN) ^ (h >> 29))
}

/// Independent stream for `(seed, job, split)`.
pub fn derive_rng(seed: u64, job: &str, split: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(absorb(absorb(GOLDEN, seed), name_id(job)));
    rng.set_stream(split);
    rng
}

/// Stateless draw keyed on `(seed, stream, a, b)`.
#[inline]
pub fn keyed_u64(seed: u64, stream: u64, a: u64, b: u64) -> u64 {
    absorb(absorb(absorb(absorb(GOLDEN, seed), stream), a), b)
}

/// Map 64 random bits to `[0, 1)`.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

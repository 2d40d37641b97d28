use crate::engine::fmix64;
use crate::graph_io::VertexId;

const FOLD: u64 = 0x9e37_79b9_7f4a_7c15;

/// Symmetric 64-bit hash of the undirected edge `{a, b}`.
///
/// The pair is ordered `(min, max)` and packed into a 128-bit word, which is
/// folded to 64 bits (high half times an odd constant, xor low half) and passed
/// through the MurmurHash3 finalizer.
pub fn edge_hash(a: VertexId, b: VertexId) -> u64 {
    let word = ((a.min(b) as u128) << 64) | a.max(b) as u128;
    let hi = (word >> 64) as u64;
    let lo = word as u64;
    fmix64(hi.wrapping_mul(FOLD) ^ lo)
}

//! Wedge sampling at a single center.

use std::collections::HashMap;

use rand::Rng;

/// Result of sampling `q` wedges at a center of degree `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledPairs {
    /// Number of distinct incident edges the pairs refer to.
    pub needed: u64,
    /// Endpoint index pairs over `1..=needed`, numbered by first appearance.
    pub pairs: Vec<(u64, u64)>,
}

/// Draw `q` wedges uniformly with replacement among the `d(d-1)/2` wedges of a
/// degree-`d` center, then renumber the edge indices used so that only the
/// first `needed` incident edges have to be read.
pub fn sampling_subroutine<R: Rng + ?Sized>(d: u64, q: u64, rng: &mut R) -> SampledPairs {
    assert!(d >= 2, "a wedge needs degree at least 2");
    let mut remap: HashMap<u64, u64> = HashMap::new();
    let mut pairs = Vec::with_capacity(q as usize);
    let index = |x: u64, remap: &mut HashMap<u64, u64>| {
        let next = remap.len() as u64 + 1;
        *remap.entry(x).or_insert(next)
    };
    for _ in 0..q {
        let i = rng.random_range(0..d);
        let mut j = rng.random_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        let a = index(i, &mut remap);
        let b = index(j, &mut remap);
        pairs.push((a, b));
    }
    SampledPairs {
        needed: remap.len() as u64,
        pairs,
    }
}

/// Every wedge of a degree-`d` center exactly once.
pub fn all_pairs(d: u64) -> SampledPairs {
    let mut pairs = Vec::with_capacity((d * d.saturating_sub(1) / 2) as usize);
    for i in 1..=d {
        for j in i + 1..=d {
            pairs.push((i, j));
        }
    }
    SampledPairs { needed: d, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::derive_rng;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn degree_two() {
        let mut rng = derive_rng(1, "t", 0);
        let s = sampling_subroutine(2, 1, &mut rng);
        assert_eq!(s.needed, 2);
        assert!(s.pairs == vec![(1, 2)]);
        let s = sampling_subroutine(2, 3, &mut rng);
        let mut ends: Vec<_> = s.pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        ends.dedup();
        assert_eq!(ends, vec![(1, 2)]);
    }

    #[test]
    fn one_wedge_needs_two_edges() {
        let mut rng = derive_rng(2, "t", 0);
        for _ in 0..100 {
            assert_eq!(sampling_subroutine(10, 1, &mut rng).needed, 2);
        }
    }

    #[test]
    fn pairs_are_uniform() {
        // d = 5 has ten wedges. Renumbering is a bijection on labels, so the
        // chi-square statistic over renumbered pairs equals the one over the
        // original edge indices.
        let mut rng = derive_rng(3, "t", 0);
        let q = 10_000u64;
        let s = sampling_subroutine(5, q, &mut rng);
        assert_eq!(s.needed, 5);
        let mut counts = HashMap::new();
        for &(a, b) in &s.pairs {
            *counts.entry((a.min(b), a.max(b))).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 10);
        let expect = q as f64 / 10.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
    }

    #[test]
    fn exhaustive_pairs() {
        let s = all_pairs(4);
        assert_eq!(s.needed, 4);
        assert_eq!(s.pairs.len(), 6);
    }

    proptest! {
        #[test]
        fn structure(d in 2u64..200, q in 1u64..300, seed: u64) {
            let mut rng = derive_rng(seed, "p", 0);
            let s = sampling_subroutine(d, q, &mut rng);
            prop_assert_eq!(s.pairs.len() as u64, q);
            prop_assert!(s.needed <= d.min(2 * q));
            let mut seen = 0;
            for &(a, b) in &s.pairs {
                prop_assert!(a != b);
                prop_assert!(a >= 1 && b >= 1 && a <= s.needed && b <= s.needed);
                // First appearances are numbered in order.
                for x in [a, b] {
                    prop_assert!(x <= seen + 1);
                    seen = seen.max(x);
                }
            }
            prop_assert_eq!(seen, s.needed);
        }
    }
}

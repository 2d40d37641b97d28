use wedgetri::engine::derive_rng;
use wedgetri::generator::{generate_er, generate_skg, SkgConfig};
use wedgetri::oracle::{exact_stats, Graph};
use wedgetri::BinConfig;

#[test]
fn er_clustering_near_edge_density() {
    let bins = BinConfig::standard();
    let ccs: Vec<f64> = (0..20)
        .map(|seed| {
            let g = generate_er(1000, 5000, &mut derive_rng(seed, "er-cc", 0)).unwrap();
            let s = exact_stats(&Graph::from_edges(&g).unwrap(), &bins).unwrap();
            let c = s.cc.unwrap();
            *c.numer() as f64 / *c.denom() as f64
        })
        .collect();
    let n = ccs.len() as f64;
    let mean = ccs.iter().sum::<f64>() / n;
    let sd = (ccs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let density = 5000.0 / (1000.0 * 999.0 / 2.0);
    assert!((mean - density).abs() <= 3.0 * sd / n.sqrt(), "{mean} vs {density}, sd {sd}");
}

#[test]
fn skg_degree_bins_fall_off_smoothly() {
    let g = generate_skg(&SkgConfig::default(), 1).unwrap();
    let bins = BinConfig::standard();
    let s = exact_stats(&Graph::from_edges(&g).unwrap(), &bins).unwrap();
    let counts: Vec<u64> = s.bins.iter().map(|b| b.vertices).collect();
    assert!(counts.len() > 8);
    // Vertices per degree value fall across every bin.
    let density: Vec<f64> = s
        .bins
        .iter()
        .map(|b| b.vertices as f64 / (bins.bin_lo_deg(b.bin + 1) - bins.bin_lo_deg(b.bin)) as f64)
        .collect();
    for w in density.windows(2) {
        assert!(w[1] < w[0], "{density:?}");
    }
    // Past the singleton bins, counts fall beyond their mode.
    let tail = &counts[bins.tau() as usize..];
    let mode = tail.iter().enumerate().max_by_key(|(_, &c)| c).unwrap().0;
    for w in tail[mode..].windows(2) {
        assert!(w[1] <= w[0], "{counts:?}");
    }
}

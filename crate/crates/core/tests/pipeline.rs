use std::path::Path;

use wedgetri::engine::{derive_rng, EngineConfig};
use wedgetri::generator::{generate_er, generate_skg, SkgConfig};
use wedgetri::graph_io::EdgeList;
use wedgetri::oracle::{exact_stats, Graph};
use wedgetri::pipeline::{
    Pipeline, PipelineConfig, PipelineRun, SamplingMode, COUNTER_PRE_COMBINE, JOB_CLOSURE, JOB_DEGREES,
    JOB_JOIN_V1, JOB_JOIN_V2, JOB_SAMPLE,
};
use wedgetri::{BinConfig, Error};

const SMALL: [(u64, u64); 7] = [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 5), (4, 6)];

fn write_graph(dir: &Path, g: &EdgeList) -> std::path::PathBuf {
    let path = dir.join("graph.tsv");
    g.write(&path).unwrap();
    path
}

fn config(bins: BinConfig, k: u64, seed: u64) -> PipelineConfig {
    PipelineConfig {
        bins,
        k,
        seed,
        splits: 3,
        engine: EngineConfig {
            reducers: 5,
            ..EngineConfig::default()
        },
        ..PipelineConfig::default()
    }
}

fn run(dir: &Path, g: &EdgeList, cfg: PipelineConfig) -> PipelineRun {
    let input = write_graph(dir, g);
    let work = tempfile::tempdir_in(dir).unwrap();
    Pipeline::new(cfg).unwrap().run(&input, work.path()).unwrap()
}

fn er(n: u64, m: u64, seed: u64) -> EdgeList {
    generate_er(n, m, &mut derive_rng(seed, "test-graph", 0)).unwrap()
}

#[test]
fn small_exhaustive_matches_exact_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(BinConfig::singletons(4), 1, 1);
    cfg.mode = SamplingMode::Exhaustive;
    let r = run(dir.path(), &EdgeList::from_pairs(&SMALL), cfg);
    let rows: Vec<_> = r.summary.iter().map(|s| (s.bin, s.p, s.c)).collect();
    assert_eq!(rows, vec![(2, 3, 1.0 / 3.0), (3, 3, 1.0 / 3.0), (4, 6, 1.0 / 6.0)]);
    for s in &r.summary {
        assert!((s.t - 1.0).abs() < 1e-12, "bin {}: {}", s.bin, s.t);
    }
    assert!((r.global.c - 0.25).abs() < 1e-15);
    assert!((r.global.t - 1.0).abs() < 1e-12);
    assert_eq!((r.m, r.n, r.sampled_wedges, r.closed_wedges), (7, 6, 12, 3));
}

#[test]
fn exhaustive_tallies_equal_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for (i, g) in [er(300, 2000, 1), generate_skg(&SkgConfig::new(9, 8, 0.1).unwrap(), 2).unwrap()]
        .iter()
        .enumerate()
    {
        let bins = BinConfig::standard();
        let exact = exact_stats(&Graph::from_edges(g).unwrap(), &bins).unwrap();
        let mut cfg = config(bins, 1, i as u64);
        cfg.mode = SamplingMode::Exhaustive;
        let r = run(dir.path(), g, cfg);
        let populated: Vec<_> = exact.bins.iter().filter(|b| b.wedges > 0).collect();
        assert_eq!(r.summary.len(), populated.len());
        for (s, e) in r.summary.iter().zip(populated) {
            assert_eq!((s.bin, s.p, s.q), (e.bin, e.wedges, e.by_kind));
        }
        assert_eq!(r.sampled_wedges, exact.p);
        assert_eq!(r.closed_wedges, 3 * exact.t);
    }
}

#[test]
fn shuffle_volumes_follow_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let g = er(500, 3000, 3);
    let r = run(dir.path(), &g, config(BinConfig::standard(), 200, 4));
    let q = r.sampled_wedges;
    assert_eq!(r.job(JOB_DEGREES).counter(COUNTER_PRE_COMBINE), 2 * g.len() as u64);
    assert!(r.job(JOB_CLOSURE).records_emitted <= 2 * q);
    assert_eq!(r.job(JOB_JOIN_V1).records_emitted, r.n + q);
    assert_eq!(r.job(JOB_JOIN_V2).records_emitted, r.n + q);
}

#[test]
fn skipping_client_tables_changes_only_volume() {
    let dir = tempfile::tempdir().unwrap();
    // A long tail of degree-1 vertices guarantees non-centers.
    let mut pairs: Vec<_> = er(400, 2400, 5).edges.iter().map(|e| e.canonical()).collect();
    pairs.extend((0..200).map(|i| (i, 1000 + i)));
    let g = EdgeList::from_pairs(&pairs);
    let base = run(dir.path(), &g, config(BinConfig::standard(), 100, 6));
    assert!(base.centers_gathered && base.hashes_gathered);
    assert!(base.m > base.sampled_wedges);
    for (skip_2b, skip_3a) in [(true, false), (false, true), (true, true)] {
        let mut cfg = config(BinConfig::standard(), 100, 6);
        cfg.skip_2b = skip_2b;
        cfg.skip_3a = skip_3a;
        let other = run(dir.path(), &g, cfg);
        assert_eq!(other.summary, base.summary);
        let vol = |r: &PipelineRun, job| r.job(job).records_emitted;
        if skip_2b {
            assert!(vol(&other, JOB_SAMPLE) > vol(&base, JOB_SAMPLE));
        }
        if skip_3a {
            assert!(vol(&other, JOB_CLOSURE) > vol(&base, JOB_CLOSURE));
        }
    }
}

#[test]
fn results_do_not_depend_on_split_or_reducer_counts() {
    let dir = tempfile::tempdir().unwrap();
    let g = er(400, 3000, 7);
    let a = run(dir.path(), &g, config(BinConfig::standard(), 300, 8));
    let mut cfg = config(BinConfig::standard(), 300, 8);
    cfg.splits = 1;
    cfg.engine.reducers = 17;
    cfg.engine.spill_threshold = 1 << 12;
    let b = run(dir.path(), &g, cfg);
    assert_eq!(a.summary, b.summary);
    let c = run(dir.path(), &g, config(BinConfig::standard(), 300, 9));
    assert_ne!(a.summary, c.summary);
}

#[test]
fn sampled_estimates_are_close() {
    let dir = tempfile::tempdir().unwrap();
    let g = er(1000, 10000, 10);
    let bins = BinConfig::standard();
    let exact = exact_stats(&Graph::from_edges(&g).unwrap(), &bins).unwrap();
    let r = run(dir.path(), &g, config(bins, 2000, 11));
    for s in &r.summary {
        let e = exact.bins.iter().find(|b| b.bin == s.bin).unwrap();
        let c = *e.cc_or_zero().numer() as f64 / *e.cc_or_zero().denom() as f64;
        assert!((s.c - c).abs() <= 0.05, "bin {}: {} vs {}", s.bin, s.c, c);
        assert_eq!(s.p, e.wedges);
    }
}

#[test]
fn graph_without_wedges_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_graph(dir.path(), &EdgeList::from_pairs(&[(1, 2), (3, 4)]));
    let err = Pipeline::new(PipelineConfig::default())
        .unwrap()
        .run(&input, &dir.path().join("work"))
        .unwrap_err();
    assert!(matches!(err, Error::NoWedges), "{err}");
}

#[cfg(feature = "parallel")]
#[test]
fn sequential_and_rayon_agree() {
    use wedgetri::engine::Parallelism;
    let dir = tempfile::tempdir().unwrap();
    let g = er(500, 4000, 12);
    let mut runs = Vec::new();
    for par in [Parallelism::Sequential, Parallelism::Rayon] {
        let mut cfg = config(BinConfig::standard(), 500, 13);
        cfg.engine.parallelism = par;
        runs.push(run(dir.path(), &g, cfg));
    }
    assert_eq!(runs[0].summary, runs[1].summary);
    assert_eq!(runs[0].stats, runs[1].stats);
}

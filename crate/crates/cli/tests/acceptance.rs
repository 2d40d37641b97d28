//! One pass/fail line per acceptance criterion.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use wedgetri::engine::derive_rng;
use wedgetri::estimators::required_samples;
use wedgetri::generator::{generate_er, generate_skg, SkgConfig};
use wedgetri::graph_io::EdgeList;
use wedgetri::oracle::{exact_stats, Exact, Graph};
use wedgetri::pipeline::{
    read_summary, COUNTER_PRE_COMBINE, JOB_CLOSURE, JOB_DEGREES, JOB_JOIN_V1, JOB_SAMPLE,
};
use wedgetri::tri_stats::{assortativity_table, AssortativityRow, TriangleSample};
use wedgetri::BinConfig;
use wedgetri_cli::{
    cmd_analyze, cmd_tristats, RunConfig, TriStatsConfig, MANIFEST_FILE, SUMMARY_FILE, TIMINGS_FILE,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

const SMALL: [(u64, u64); 7] = [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 5), (4, 6)];

fn write_graph(dir: &Path, name: &str, g: &EdgeList) -> std::path::PathBuf {
    let path = dir.join(name);
    g.write(&path).unwrap();
    path
}

fn small_run(input: &Path, out: &Path, k: u64, seed: u64) -> RunConfig {
    RunConfig {
        k,
        seed,
        reducers: 8,
        splits: 4,
        ..RunConfig::new(input, out)
    }
}

fn ratio_f64(r: &Exact) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn small_exact() -> Outcome {
    let start = Instant::now();
    let g = Graph::from_pairs(&SMALL).map_err(|e| e.to_string())?;
    let s = exact_stats(&g, &BinConfig::singletons(4)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!((s.n, s.m, s.p, s.t) == (6, 7, 12, 1), "n, m, p, t = {:?}", (s.n, s.m, s.p, s.t));
    ensure!(s.cc == Some(Exact::new(1, 4)), "c = {:?}", s.cc);
    let by_degree: BTreeMap<u64, _> = s.bins.iter().map(|b| (b.bin, b)).collect();
    let r = |a, b| Exact::new(a, b);
    let expected = [
        (1, 0, r(0, 1), r(0, 1)),
        (2, 3, r(1, 1), r(1, 3)),
        (3, 3, r(1, 1), r(1, 3)),
        (4, 6, r(1, 1), r(1, 6)),
    ];
    for (d, p, t, c) in expected {
        let b = by_degree.get(&d).ok_or(format!("no bin for degree {d}"))?;
        ensure!(b.wedges == p, "p_{d} = {}", b.wedges);
        ensure!(b.triangles == t, "t_{d} = {}", b.triangles);
        ensure!(b.cc_or_zero() == c, "c_{d} = {}", b.cc_or_zero());
    }
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("exact rationals match, {elapsed:.2?}"))
}

fn pipeline_vs_oracle() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let k = required_samples(0.05, 0.001).map_err(|e| e.to_string())?;
    let bins = BinConfig::standard();
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let g = if i < 10 {
            generate_er(2000, 20_000, &mut derive_rng(i, "acceptance-er", 0)).unwrap()
        } else {
            generate_skg(&SkgConfig::new(14, 16, 0.1).unwrap(), i).unwrap()
        };
        let exact = exact_stats(&Graph::from_edges(&g).unwrap(), &bins).unwrap();
        let input = write_graph(dir.path(), "g.tsv", &g);
        let report = cmd_analyze(&small_run(&input, &dir.path().join("out"), k, 100 + i))
            .map_err(|e| format!("graph {i}: {e:#}"))?;
        for row in &report.run.summary {
            let e = exact.bins.iter().find(|b| b.bin == row.bin).ok_or("unknown bin")?;
            let err = (row.c - ratio_f64(&e.cc_or_zero())).abs();
            worst = worst.max(err);
            checked += 1;
            if err > 0.05 {
                failures.push(format!("graph {i} bin {}: error {err}", row.bin));
            }
        }
        let populated = exact.bins.iter().filter(|b| b.wedges > 0).count();
        ensure!(report.run.summary.len() == populated, "graph {i}: missing bins");
    }
    let elapsed = start.elapsed();
    ensure!(failures.is_empty(), "{failures:?}");
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("k={k}, {checked} bins over 20 graphs, max error {worst:.4}, {elapsed:.1?}"))
}

fn hoeffding() -> Outcome {
    let k = required_samples(0.05, 0.001).map_err(|e| e.to_string())?;
    ensure!(k == 1521, "k = {k}");
    ensure!(k <= 2000, "k = {k} exceeds 2000");
    Ok(format!("k = {k} <= 2000"))
}

/// SKG graphs have many degree-1 vertices, so some vertices are never centers.
fn skg(scale: u32, seed: u64) -> EdgeList {
    generate_skg(&SkgConfig::new(scale, 16, 0.1).unwrap(), seed).unwrap()
}

fn shuffle_volumes() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let g = skg(12, 1);
    let input = write_graph(dir.path(), "g.tsv", &g);
    let report = cmd_analyze(&small_run(&input, &dir.path().join("out"), 1000, 2)).map_err(|e| format!("{e:#}"))?;
    let run = &report.run;
    let q = run.sampled_wedges;
    let pre = run.job(JOB_DEGREES).counter(COUNTER_PRE_COMBINE);
    let v3b = run.job(JOB_CLOSURE).records_emitted;
    let v4a = run.job(JOB_JOIN_V1).records_emitted;
    ensure!(pre == 2 * run.m, "1a pre-combine {pre} != 2m = {}", 2 * run.m);
    ensure!(run.hashes_gathered, "hash table was not gathered");
    ensure!(v3b <= 2 * q, "3b {v3b} > 2q = {}", 2 * q);
    ensure!(v4a == run.n + q, "4a {v4a} != n + q = {}", run.n + q);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(MANIFEST_FILE)).unwrap()).unwrap();
    let jobs = manifest["shuffle"]["jobs"].as_array().ok_or("manifest lacks jobs")?;
    let in_manifest = jobs
        .iter()
        .find(|j| j["job"] == JOB_JOIN_V1)
        .and_then(|j| j["records_emitted"].as_u64());
    ensure!(in_manifest == Some(v4a), "manifest 4a volume {in_manifest:?}");
    Ok(format!("m={} n={} q={q}: 1a={pre}, 3b={v3b}, 4a={v4a}", run.m, run.n))
}

fn variations() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let g = skg(13, 3);
    let input = write_graph(dir.path(), "g.tsv", &g);
    let base_cfg = small_run(&input, &dir.path().join("base"), 500, 4);
    let base = cmd_analyze(&base_cfg).map_err(|e| format!("{e:#}"))?.run;
    ensure!(base.m > base.sampled_wedges, "m = {} is not above q = {}", base.m, base.sampled_wedges);
    let base_summary = fs::read(dir.path().join("base").join(SUMMARY_FILE)).unwrap();
    let mut notes = Vec::new();
    for (skip_2b, skip_3a) in [(true, false), (false, true), (true, true)] {
        let out = dir.path().join(format!("skip-{skip_2b}-{skip_3a}"));
        let cfg = RunConfig {
            out: out.clone(),
            skip_2b,
            skip_3a,
            ..base_cfg.clone()
        };
        let run = cmd_analyze(&cfg).map_err(|e| format!("{e:#}"))?.run;
        ensure!(run.summary == base.summary, "summary differs with skip_2b={skip_2b} skip_3a={skip_3a}");
        ensure!(fs::read(out.join(SUMMARY_FILE)).unwrap() == base_summary, "summary file differs");
        let vol = |r: &wedgetri::pipeline::PipelineRun, job| r.job(job).records_emitted;
        if skip_2b {
            ensure!(vol(&run, JOB_SAMPLE) > vol(&base, JOB_SAMPLE), "2c volume did not grow");
            notes.push(format!("skip_2b={skip_2b} skip_3a={skip_3a}: 2c {} -> {}", vol(&base, JOB_SAMPLE), vol(&run, JOB_SAMPLE)));
        }
        if skip_3a {
            ensure!(vol(&run, JOB_CLOSURE) > vol(&base, JOB_CLOSURE), "3b volume did not grow");
            notes.push(format!("skip_2b={skip_2b} skip_3a={skip_3a}: 3b {} -> {}", vol(&base, JOB_CLOSURE), vol(&run, JOB_CLOSURE)));
        }
    }
    Ok(format!("identical summaries; {}", notes.join(", ")))
}

fn uniform_triangles() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let g = generate_er(300, 1500, &mut derive_rng(6, "acceptance-uniform", 0)).unwrap();
    let graph = Graph::from_edges(&g).unwrap();
    let triangles = graph.triangles();
    let t = triangles.len();
    ensure!((2..=500).contains(&t), "graph has {t} triangles");
    let input = write_graph(dir.path(), "g.tsv", &g);
    let index: HashMap<[u64; 3], usize> = triangles.iter().enumerate().map(|(i, &tri)| (tri, i)).collect();
    let mut counts = vec![0u64; t];
    let mut total = 0u64;
    let mut seed = 0;
    while total < 100 * t as u64 {
        let report = cmd_tristats(&TriStatsConfig {
            input: input.clone(),
            out: dir.path().join("out"),
            k: 50_000,
            seed,
            reducers: 8,
            splits: 4,
            exhaustive: false,
            keep_intermediates: false,
        })
        .map_err(|e| format!("{e:#}"))?;
        for s in &report.samples {
            counts[*index.get(&s.key()).ok_or("sampled a non-triangle")?] += 1;
            total += 1;
        }
        seed += 1;
    }
    let expected = total as f64 / t as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((t - 1) as f64).unwrap().cdf(stat);
    let elapsed = start.elapsed();
    ensure!(p > 0.001, "chi-square {stat:.1} on {} dof, p = {p:.2e}", t - 1);
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("T={t}, N={total}, chi-square {stat:.1}, p = {p:.3}, {elapsed:.1?}"))
}

/// Rows with at least this many samples are compared.
const MIN_ROW: u64 = 30;

fn median_bins(rows: &[AssortativityRow], bins: &BinConfig) -> BTreeMap<u64, u64> {
    rows.iter()
        .filter(|r| r.count >= MIN_ROW)
        .map(|r| (r.min_bin, bins.bin_id(r.median.round().max(1.0) as u64).unwrap()))
        .collect()
}

/// Communities of increasing size, dense inside and sparsely linked.
fn planted_communities(seed: u64) -> EdgeList {
    let mut rng = derive_rng(seed, "acceptance-communities", 0);
    let mut pairs = Vec::new();
    let mut next = 0u64;
    for _ in 0..4 {
        for size in (4..=64).step_by(4) {
            let members: Vec<u64> = (next..next + size).collect();
            next += size;
            for (i, &v) in members.iter().enumerate() {
                for &w in &members[i + 1..] {
                    if rng.random_bool(0.7) {
                        pairs.push((v, w));
                    }
                }
            }
        }
    }
    for _ in 0..next {
        let (v, w) = (rng.random_range(0..next), rng.random_range(0..next));
        if v != w {
            pairs.push((v.min(w), v.max(w)));
        }
    }
    let mut g = EdgeList::from_pairs(&pairs);
    g.canonicalize();
    g
}

fn sampled_and_exact(dir: &Path, g: &EdgeList, k: u64) -> Result<(Vec<AssortativityRow>, Vec<AssortativityRow>), String> {
    let bins = BinConfig::standard();
    let graph = Graph::from_edges(g).map_err(|e| e.to_string())?;
    let exhaustive: Vec<TriangleSample> = graph
        .triangles()
        .into_iter()
        .map(|t| TriangleSample::new(t, t.map(|v| graph.degree(v).unwrap())))
        .collect();
    let exact_rows = assortativity_table(&exhaustive, &bins).map_err(|e| e.to_string())?;
    let input = write_graph(dir, "g.tsv", g);
    let report = cmd_tristats(&TriStatsConfig {
        input,
        out: dir.join("out"),
        k,
        seed: 7,
        reducers: 16,
        splits: 8,
        exhaustive: false,
        keep_intermediates: false,
    })
    .map_err(|e| format!("{e:#}"))?;
    Ok((report.rows, exact_rows))
}

fn assortativity() -> Outcome {
    let bins = BinConfig::standard();
    let dir = tempfile::tempdir().unwrap();
    let skg = generate_skg(&SkgConfig::new(16, 16, 0.1).unwrap(), 8).unwrap();
    let (sampled, exact) = sampled_and_exact(dir.path(), &skg, 100_000)?;
    let s = median_bins(&sampled, &bins);
    let e = median_bins(&exact, &bins);
    ensure!(s.len() >= 3, "only {} sampled rows with {MIN_ROW}+ samples", s.len());
    for (row, &mb) in &s {
        let eb = *e.get(row).ok_or(format!("no exhaustive row for bin {row}"))?;
        ensure!(mb.abs_diff(eb) <= 1, "bin {row}: sampled median bin {mb}, exhaustive {eb}");
    }

    let dir = tempfile::tempdir().unwrap();
    let social = planted_communities(9);
    let (sampled, _) = sampled_and_exact(dir.path(), &social, 100_000)?;
    let medians: Vec<f64> = sampled.iter().filter(|r| r.count >= MIN_ROW).map(|r| r.median).collect();
    ensure!(medians.len() >= 3, "only {} community rows", medians.len());
    ensure!(medians.windows(2).all(|w| w[1] >= w[0]), "community medians not increasing: {medians:?}");
    ensure!(medians.last() > medians.first(), "community medians flat: {medians:?}");
    Ok(format!(
        "SKG median bins sampled {:?} vs exhaustive {:?}; community medians {medians:?}",
        s.values().collect::<Vec<_>>(),
        s.keys().map(|k| e[k]).collect::<Vec<_>>()
    ))
}

fn scale_22() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_wedgetri");
    let graph = dir.path().join("skg22.tsv");
    let status = Command::new(bin)
        .args(["generate", "--model", "skg", "--scale", "22", "--edge-factor", "16", "--noise", "0.1"])
        .arg("--out")
        .arg(&graph)
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "generate failed");
    let generated = start.elapsed();
    let out = dir.path().join("out");
    let status = Command::new(bin)
        .arg("analyze")
        .arg("--input")
        .arg(&graph)
        .arg("--out")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "analyze failed");
    let elapsed = start.elapsed();
    let graph_bytes = fs::metadata(&graph).unwrap().len();
    let timings: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(TIMINGS_FILE)).unwrap()).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    let peak = timings["peak_rss_bytes"].as_u64().ok_or("no peak memory reading")?;
    let m = manifest["m"].as_u64().unwrap_or(0);
    // Default engine: 256 MiB of in-memory runs plus one 64 MiB sort buffer
    // and its index, with headroom for the runtime.
    let bound = 768u64 << 20;
    ensure!(elapsed < Duration::from_secs(1800), "took {elapsed:?}");
    ensure!(peak <= bound, "peak RSS {peak} above {bound}");
    ensure!(peak < graph_bytes, "peak RSS {peak} not below the {graph_bytes}-byte edge list");
    Ok(format!(
        "m={m}, generate {generated:.0?}, total {elapsed:.0?}, peak RSS {} MiB vs edge list {} MiB",
        peak >> 20,
        graph_bytes >> 20
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let g = skg(12, 10);
    let input = write_graph(dir.path(), "g.tsv", &g);
    let cfg = small_run(&input, &dir.path().join("out"), 2000, 11);
    let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();
    cmd_analyze(&cfg).map_err(|e| format!("{e:#}"))?;
    let (summary, manifest) = (read(SUMMARY_FILE), read(MANIFEST_FILE));
    cmd_analyze(&cfg).map_err(|e| format!("{e:#}"))?;
    ensure!(read(SUMMARY_FILE) == summary, "summary files differ");
    ensure!(read(MANIFEST_FILE) == manifest, "manifest files differ");
    let (header, rows) = read_summary(&dir.path().join("out").join(SUMMARY_FILE)).map_err(|e| e.to_string())?;
    ensure!(header.seed == Some(11) && !rows.is_empty(), "summary does not round-trip");
    Ok(format!("{} summary bytes, {} manifest bytes identical", summary.len(), manifest.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("small graph, exact", small_exact),
        ("pipeline vs oracle", pipeline_vs_oracle),
        ("Hoeffding sample count", hoeffding),
        ("shuffle volumes", shuffle_volumes),
        ("skipped client tables", variations),
        ("uniform triangle sampling", uniform_triangles),
        ("triangle degree assortativity", assortativity),
        ("scale-22 out-of-core run", scale_22),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {label}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {label}: {detail}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

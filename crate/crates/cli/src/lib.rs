//! Subcommands of the `wedgetri` binary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use wedgetri::engine::{derive_rng, Engine, EngineConfig, ShuffleStats};
use wedgetri::estimators::{required_samples, GlobalEstimate};
use wedgetri::generator::{generate_er, generate_skg_to_dir, SkgConfig};
use wedgetri::graph_io::{read_records, Dataset};
use wedgetri::oracle::{exact_stats, Exact, ExactStats, Graph};
use wedgetri::pipeline::{
    write_summary, BinSummary, PhaseTiming, Pipeline, PipelineConfig, PipelineRun, SamplingMode,
    SummaryHeader, WedgeResult, WedgesPerBin,
};
use wedgetri::tri_stats::{
    assortativity_table, extract_triangles, write_outliers_csv, write_table_csv, AssortativityRow,
    TriangleSample,
};
use wedgetri::BinConfig;

pub const SUMMARY_FILE: &str = "summary.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const WORK_DIR: &str = "work";
pub const TABLE_FILE: &str = "assortativity.csv";
pub const OUTLIERS_FILE: &str = "outliers.csv";

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub out: PathBuf,
    pub tau: u64,
    pub omega: f64,
    pub k: u64,
    pub seed: u64,
    pub reducers: usize,
    pub splits: usize,
    pub skip_2b: bool,
    pub skip_3a: bool,
    pub keep_intermediates: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            out: out.into(),
            tau: 2,
            omega: 2.0,
            k: 10_000,
            seed: 1,
            reducers: 64,
            splits: 16,
            skip_2b: false,
            skip_3a: false,
            keep_intermediates: false,
        }
    }

    pub fn bins(&self) -> Result<BinConfig> {
        Ok(BinConfig::new(self.tau, self.omega)?)
    }

    fn pipeline_config(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            bins: self.bins()?,
            k: self.k,
            seed: self.seed,
            splits: self.splits,
            skip_2b: self.skip_2b,
            skip_3a: self.skip_3a,
            engine: EngineConfig {
                reducers: self.reducers,
                ..PipelineConfig::default().engine
            },
            ..PipelineConfig::default()
        })
    }
}

/// Deterministic record of an analyze run. Wall times live in the separate
/// timings file.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub n: u64,
    pub m: u64,
    pub centers: u64,
    pub sampled_wedges: u64,
    pub closed_wedges: u64,
    pub centers_gathered: bool,
    pub hashes_gathered: bool,
    pub global: GlobalEstimate,
    pub wedges_per_bin: Vec<WedgesPerBin>,
    pub shuffle: ShuffleStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub phases: Vec<PhaseTiming>,
    pub total_seconds: f64,
    /// Peak resident set size of this process, when the platform reports it.
    pub peak_rss_bytes: Option<u64>,
}

pub struct AnalyzeReport {
    pub run: PipelineRun,
    pub manifest: Manifest,
    pub timings: Timings,
}

/// Peak resident set size from `/proc/self/status`.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn remove_dir(path: &Path) -> Result<()> {
    if path.exists() {
        fs::remove_dir_all(path).with_context(|| format!("removing {}", path.display()))?;
    }
    Ok(())
}

/// Run the sampling pipeline and write the summary, manifest and timings
/// files into `cfg.out`.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport> {
    let start = std::time::Instant::now();
    let pipeline = Pipeline::new(cfg.pipeline_config()?)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let work = cfg.out.join(WORK_DIR);
    remove_dir(&work)?;
    let run = pipeline.run(&cfg.input, &work)?;
    if !cfg.keep_intermediates {
        remove_dir(&work)?;
    }

    let header = SummaryHeader {
        bins: cfg.bins()?,
        k: Some(cfg.k),
        seed: Some(cfg.seed),
    };
    write_summary(&cfg.out.join(SUMMARY_FILE), &header, &run.summary)?;
    let manifest = Manifest {
        config: cfg.clone(),
        n: run.n,
        m: run.m,
        centers: run.centers,
        sampled_wedges: run.sampled_wedges,
        closed_wedges: run.closed_wedges,
        centers_gathered: run.centers_gathered,
        hashes_gathered: run.hashes_gathered,
        global: run.global,
        wedges_per_bin: run.wedges_per_bin.clone(),
        shuffle: run.stats.clone(),
    };
    write_json(&cfg.out.join(MANIFEST_FILE), &manifest)?;
    let timings = Timings {
        phases: run.timings.clone(),
        total_seconds: start.elapsed().as_secs_f64(),
        peak_rss_bytes: peak_rss_bytes(),
    };
    write_json(&cfg.out.join(TIMINGS_FILE), &timings)?;
    Ok(AnalyzeReport {
        run,
        manifest,
        timings,
    })
}

fn ratio_f64(r: &Exact) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact statistics as summary rows, one per bin with wedges.
pub fn exact_summary(stats: &ExactStats) -> Result<Vec<BinSummary>> {
    stats
        .bins
        .iter()
        .filter(|b| b.wedges > 0)
        .map(|b| {
            Ok(BinSummary {
                bin: b.bin,
                q: b.by_kind,
                c: ratio_f64(&b.cc_or_zero()),
                p: b.wedges,
                t: ratio_f64(&b.triangles),
            })
        })
        .collect()
}

/// Exact counts by triangle enumeration, written in the summary format.
pub fn cmd_exact(input: &Path, out: &Path, bins: &BinConfig) -> Result<ExactStats> {
    let edges = wedgetri::graph_io::EdgeList::read(input)?;
    let graph = Graph::from_edges(&edges)?;
    let stats = exact_stats(&graph, bins)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let header = SummaryHeader {
        bins: *bins,
        k: None,
        seed: None,
    };
    write_summary(&out.join(SUMMARY_FILE), &header, &exact_summary(&stats)?)?;
    Ok(stats)
}

#[derive(Clone, Debug)]
pub struct TriStatsConfig {
    pub input: PathBuf,
    pub out: PathBuf,
    pub k: u64,
    pub seed: u64,
    pub reducers: usize,
    pub splits: usize,
    /// Every wedge once instead of `k` random samples.
    pub exhaustive: bool,
    pub keep_intermediates: bool,
}

pub struct TriStatsReport {
    pub samples: Vec<TriangleSample>,
    pub rows: Vec<AssortativityRow>,
    pub run: PipelineRun,
}

/// Sample triangles with a single-bin run and summarize the maximum degree
/// per minimum-degree bin.
pub fn cmd_tristats(cfg: &TriStatsConfig) -> Result<TriStatsReport> {
    let bins = BinConfig::single_bin();
    let pipeline = Pipeline::new(PipelineConfig {
        bins,
        k: cfg.k,
        seed: cfg.seed,
        splits: cfg.splits,
        skip_2b: true,
        skip_3a: true,
        mode: if cfg.exhaustive {
            SamplingMode::Exhaustive
        } else {
            SamplingMode::Random
        },
        engine: EngineConfig {
            reducers: cfg.reducers,
            ..PipelineConfig::default().engine
        },
        ..PipelineConfig::default()
    })?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let work = cfg.out.join(WORK_DIR);
    remove_dir(&work)?;
    let run = pipeline.run(&cfg.input, &work)?;
    let mut results: Vec<WedgeResult> = read_records(&run.layout.results_v2())?;
    results.sort_unstable();
    if !cfg.keep_intermediates {
        remove_dir(&work)?;
    }
    if let Some(max) = results.iter().map(|r| r.d0).max() {
        if !bins.is_single_bin_up_to(max) {
            bail!("maximum degree {max} exceeds the single bin");
        }
    }
    let samples = extract_triangles(&results, &bins)?;
    let rows = if samples.is_empty() {
        Vec::new()
    } else {
        assortativity_table(&samples, &BinConfig::standard())?
    };
    write_table_csv(&cfg.out.join(TABLE_FILE), &rows)?;
    write_outliers_csv(&cfg.out.join(OUTLIERS_FILE), &rows)?;
    Ok(TriStatsReport { samples, rows, run })
}

/// Samples per bin for additive error `eps` with confidence `1 - delta`.
pub fn cmd_ksamples(eps: f64, delta: f64) -> Result<u64> {
    Ok(required_samples(eps, delta)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Model {
    Skg,
    Er,
}

#[derive(Clone, Debug)]
pub struct GenerateConfig {
    pub model: Model,
    pub scale: u32,
    pub edge_factor: u64,
    pub noise: f64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GenerateReport {
    pub candidates: u64,
    pub edges: u64,
}

/// Write a synthetic edge list to `cfg.out`. SKG graphs are deduplicated
/// out of core; ER graphs use `2^scale` vertices and `edge_factor * 2^scale`
/// edges.
pub fn cmd_generate(cfg: &GenerateConfig) -> Result<GenerateReport> {
    if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    match cfg.model {
        Model::Er => {
            let n = 1u64 << cfg.scale;
            let m = cfg.edge_factor * n;
            let g = generate_er(n, m, &mut derive_rng(cfg.seed, "er", 0))?;
            g.write(&cfg.out)?;
            Ok(GenerateReport {
                candidates: m,
                edges: g.len() as u64,
            })
        }
        Model::Skg => {
            let skg = SkgConfig::new(cfg.scale, cfg.edge_factor, cfg.noise)?;
            let scratch = tempfile::Builder::new()
                .prefix(".wedgetri-generate")
                .tempdir_in(cfg.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")))?;
            let engine = Engine::new(EngineConfig {
                reducers: 16,
                ..EngineConfig::with_spill_dir(scratch.path())
            });
            let parts = scratch.path().join("parts");
            let stats = generate_skg_to_dir(&skg, cfg.seed, &engine, &parts)?;
            let mut out = BufWriter::new(
                fs::File::create(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?,
            );
            for path in Dataset::open(&parts)?.paths() {
                let mut part = fs::File::open(path)?;
                std::io::copy(&mut part, &mut out)?;
            }
            out.flush()?;
            Ok(GenerateReport {
                candidates: stats.input_records,
                edges: stats.output_records,
            })
        }
    }
}

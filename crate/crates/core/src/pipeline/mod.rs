//! Wedge-sampling pipeline as a sequence of engine jobs.
//!
//! | phase | job | output |
//! |-------|-----|--------|
//! | 1a | vertex degrees | `1a-degrees/` |
//! | 1b | vertices and wedges per bin | `1b-wedges-per-bin.tsv` |
//! | 1c | load wedges per bin (client side) | |
//! | 2a | pick wedge centers and budgets | `2a-wedge-centers/` |
//! | 2b | load center bins (client side, optional) | |
//! | 2c | sample wedges at each center | `2c-sample-wedges/` |
//! | 3a | load closing-edge hashes (client side, optional) | |
//! | 3b | check wedge closure | `3b-results-v0/` |
//! | 4a | join first endpoint degree | `4a-results-v1/` |
//! | 4b | join second endpoint degree | `4b-results-v2/` |
//! | 4c | per-bin tallies and estimates | returned in memory |

mod hash;
mod phase1;
mod phase2;
mod phase3;
mod phase4;
mod records;
mod sampling;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use hash::edge_hash;
pub use phase1::Theta;
pub use phase2::{round_budget, CenterFilter};
pub use phase3::HashFilter;
pub use records::{
    read_summary, write_summary, BinSummary, SampleWedge, SummaryHeader, WedgeCenter,
    WedgeResult, WedgesPerBin,
};
pub use sampling::{all_pairs, sampling_subroutine, SampledPairs};

use crate::binning::BinConfig;
use crate::engine::{Engine, EngineConfig, JobStats, ShuffleStats};
use crate::error::{Error, IoContext, Result};
use crate::estimators::{global_aggregate, GlobalEstimate};
use crate::graph_io::{read_edges, validate_edges, Dataset, Split};

/// How wedges are drawn at each center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SamplingMode {
    /// `k` wedges per bin, uniformly with replacement.
    Random,
    /// Every wedge of every center exactly once; estimates become exact.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub bins: BinConfig,
    /// Samples per bin.
    pub k: u64,
    pub seed: u64,
    /// Splits per input dataset.
    pub splits: usize,
    pub skip_2b: bool,
    pub skip_3a: bool,
    /// Memory allowance for the client-side center and hash tables.
    pub gather_limit: u64,
    pub mode: SamplingMode,
    /// Reject self-edges and duplicate edges before running.
    pub validate: bool,
    pub engine: EngineConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bins: BinConfig::standard(),
            k: 10_000,
            seed: 1,
            splits: 16,
            skip_2b: false,
            skip_3a: false,
            gather_limit: 5 << 20,
            mode: SamplingMode::Random,
            validate: false,
            engine: EngineConfig {
                reducers: 64,
                ..EngineConfig::default()
            },
        }
    }
}

/// Paths of the persisted phase outputs under a work directory.
#[derive(Clone, Debug)]
pub struct WorkLayout {
    pub root: PathBuf,
}

impl WorkLayout {
    pub fn degrees(&self) -> PathBuf {
        self.root.join("1a-degrees")
    }
    pub fn wedges_per_bin(&self) -> PathBuf {
        self.root.join("1b-wedges-per-bin.tsv")
    }
    pub fn centers(&self) -> PathBuf {
        self.root.join("2a-wedge-centers")
    }
    pub fn sample_wedges(&self) -> PathBuf {
        self.root.join("2c-sample-wedges")
    }
    pub fn results_v0(&self) -> PathBuf {
        self.root.join("3b-results-v0")
    }
    pub fn results_v1(&self) -> PathBuf {
        self.root.join("4a-results-v1")
    }
    pub fn results_v2(&self) -> PathBuf {
        self.root.join("4b-results-v2")
    }
    fn spill(&self) -> PathBuf {
        self.root.join("spill")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseTiming {
    pub phase: &'static str,
    pub seconds: f64,
}

/// Everything a pipeline run produced besides the files under `work`.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub summary: Vec<BinSummary>,
    pub global: GlobalEstimate,
    pub wedges_per_bin: Vec<WedgesPerBin>,
    pub stats: ShuffleStats,
    pub timings: Vec<PhaseTiming>,
    /// Edges read.
    pub m: u64,
    /// Vertices with at least one edge.
    pub n: u64,
    pub centers: u64,
    /// Total sampled wedges `q`.
    pub sampled_wedges: u64,
    pub closed_wedges: u64,
    pub centers_gathered: bool,
    pub hashes_gathered: bool,
    pub layout: WorkLayout,
}

impl PipelineRun {
    pub fn job(&self, name: &str) -> &JobStats {
        self.stats
            .job(name)
            .unwrap_or_else(|| panic!("no job named {name}"))
    }
}

pub const JOB_DEGREES: &str = "1a-degrees";
pub const JOB_WEDGES_PER_BIN: &str = "1b-wedges-per-bin";
pub const JOB_CENTERS: &str = "2a-wedge-centers";
pub const JOB_SAMPLE: &str = "2c-sample-wedges";
pub const JOB_CLOSURE: &str = "3b-check-closure";
pub const JOB_JOIN_V1: &str = "4a-join-first-endpoint";
pub const JOB_JOIN_V2: &str = "4b-join-second-endpoint";
pub const JOB_SUMMARY: &str = "4c-summary";
pub const JOB_VALIDATE: &str = "validate-edges";

/// Counter of Phase 1a records before the in-mapper combiner.
pub const COUNTER_PRE_COMBINE: &str = "pre-combine records";

pub struct Pipeline {
    config: PipelineConfig,
    engine: Engine,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if config.splits == 0 {
            return Err(Error::Config("split count must be positive".into()));
        }
        let mut engine_cfg = config.engine.clone();
        engine_cfg.seed = config.seed;
        Ok(Pipeline {
            engine: Engine::new(engine_cfg),
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn splits(&self, dir: &Path) -> Result<Vec<Split>> {
        Dataset::open(dir)?.splits(self.config.splits)
    }

    /// Run every phase on the edge list at `input`, persisting phase outputs
    /// under `work`.
    pub fn run(&self, input: &Path, work: &Path) -> Result<PipelineRun> {
        let cfg = &self.config;
        fs::create_dir_all(work).at(work)?;
        let layout = WorkLayout {
            root: work.to_path_buf(),
        };
        let local_engine;
        let engine = match cfg.engine.spill_dir {
            Some(_) => &self.engine,
            None => {
                local_engine = Engine::new(EngineConfig {
                    spill_dir: Some(layout.spill()),
                    seed: cfg.seed,
                    ..cfg.engine.clone()
                });
                &local_engine
            }
        };
        let mut stats = ShuffleStats::default();
        let mut timings = Vec::new();
        let mut timed = |phase: &'static str, start: Instant| {
            timings.push(PhaseTiming {
                phase,
                seconds: start.elapsed().as_secs_f64(),
            });
        };

        let edges = read_edges(input, cfg.splits)?;
        if cfg.validate {
            let start = Instant::now();
            let _ = validate_edges(&edges, engine).map_err(|e| e.in_phase("validate"))?;
            timed("validate", start);
        }

        let start = Instant::now();
        let job = phase1::degrees(engine, &edges, &layout.degrees()).map_err(|e| e.in_phase("1a"))?;
        let (m, n) = (job.input_records, job.output_records);
        stats.push(job);
        timed("1a", start);

        let start = Instant::now();
        let degree_splits = self.splits(&layout.degrees())?;
        let (wpb, job) = phase1::wedges_per_bin(engine, &degree_splits, &cfg.bins, &layout.wedges_per_bin())
            .map_err(|e| e.in_phase("1b"))?;
        stats.push(job);
        timed("1b", start);

        let start = Instant::now();
        let theta = Theta::gather(&layout.wedges_per_bin()).map_err(|e| e.in_phase("1c"))?;
        if theta.total() == 0 {
            return Err(Error::NoWedges);
        }
        timed("1c", start);

        let start = Instant::now();
        let job = phase2::select_centers(engine, &degree_splits, &theta, cfg, &layout.centers())
            .map_err(|e| e.in_phase("2a"))?;
        let centers = job.output_records;
        stats.push(job);
        timed("2a", start);

        let start = Instant::now();
        let gamma = if cfg.skip_2b {
            CenterFilter::Skipped
        } else {
            phase2::gather_centers(&layout.centers(), &cfg.bins, cfg.gather_limit)
                .map_err(|e| e.in_phase("2b"))?
        };
        timed("2b", start);

        let start = Instant::now();
        let center_splits = self.splits(&layout.centers())?;
        let job = phase2::create_wedges(engine, &edges, &center_splits, &gamma, cfg, &layout.sample_wedges())
            .map_err(|e| e.in_phase("2c"))?;
        let sampled_wedges = job.output_records;
        stats.push(job);
        timed("2c", start);
        let centers_gathered = !matches!(gamma, CenterFilter::Skipped);
        drop(gamma);

        let start = Instant::now();
        let xi = if cfg.skip_3a {
            HashFilter::Skipped
        } else {
            phase3::gather_hashes(&layout.sample_wedges(), cfg.gather_limit)
                .map_err(|e| e.in_phase("3a"))?
        };
        timed("3a", start);

        let start = Instant::now();
        let wedge_splits = self.splits(&layout.sample_wedges())?;
        let job = phase3::check_closure(engine, &wedge_splits, &edges, &xi, &layout.results_v0())
            .map_err(|e| e.in_phase("3b"))?;
        let closed_wedges = job.counter(phase3::COUNTER_CLOSED);
        stats.push(job);
        timed("3b", start);
        let hashes_gathered = !matches!(xi, HashFilter::Skipped);
        drop(xi);

        let start = Instant::now();
        let v0_splits = self.splits(&layout.results_v0())?;
        let job = phase4::join_endpoint(
            engine,
            JOB_JOIN_V1,
            &v0_splits,
            &degree_splits,
            phase4::Endpoint::First,
            &layout.results_v1(),
        )
        .map_err(|e| e.in_phase("4a"))?;
        stats.push(job);
        timed("4a", start);

        let start = Instant::now();
        let v1_splits = self.splits(&layout.results_v1())?;
        let job = phase4::join_endpoint(
            engine,
            JOB_JOIN_V2,
            &v1_splits,
            &degree_splits,
            phase4::Endpoint::Second,
            &layout.results_v2(),
        )
        .map_err(|e| e.in_phase("4b"))?;
        stats.push(job);
        timed("4b", start);

        let start = Instant::now();
        let v2_splits = self.splits(&layout.results_v2())?;
        let (summary, job) =
            phase4::summarize(engine, &v2_splits, &cfg.bins).map_err(|e| e.in_phase("4c"))?;
        stats.push(job);
        let global = global_aggregate(summary.iter().map(|s| (s.p, s.c))).map_err(|e| e.in_phase("4c"))?;
        timed("4c", start);

        let spill = layout.spill();
        if spill.exists() {
            fs::remove_dir_all(&spill).at(&spill)?;
        }
        Ok(PipelineRun {
            summary,
            global,
            wedges_per_bin: wpb,
            stats,
            timings,
            m,
            n,
            centers,
            sampled_wedges,
            closed_wedges,
            centers_gathered,
            hashes_gathered,
            layout,
        })
    }
}

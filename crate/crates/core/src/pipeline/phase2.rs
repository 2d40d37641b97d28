//! Wedge centers and sample wedges.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::hash::edge_hash;
use super::phase1::{choose2, Theta};
use super::records::{SampleWedge, WedgeCenter};
use super::sampling::{all_pairs, sampling_subroutine};
use super::{PipelineConfig, SamplingMode};
use crate::binning::{BinConfig, BinId};
use crate::engine::{
    decode_all, derive_rng, keyed_u64, name_id, Emit, Engine, JobStats, MapContext, Task, Values,
};
use crate::error::{Error, Result};
use crate::graph_io::{read_records, DegreeRecord, Edge, Split, VertexId};

const STREAM_ROUNDING: &str = "2a-rounding";
const STREAM_ORDER: &str = "2c-edge-order";
const STREAM_SAMPLING: &str = "2c-sampling";

/// Estimated client memory per gathered center.
const BYTES_PER_CENTER: u64 = 16;

/// Round `wedges * k / bin_wedges` up with probability equal to its
/// fractional part, using the 64 random bits `u`.
pub fn round_budget(wedges: u64, k: u64, bin_wedges: u64, u: u64) -> u64 {
    assert!(bin_wedges > 0);
    let num = wedges as u128 * k as u128;
    let base = num / bin_wedges as u128;
    let rem = num % bin_wedges as u128;
    // u / 2^64 < rem / bin_wedges
    let up = (u as u128) * (bin_wedges as u128) < rem << 64;
    (base + u128::from(up)) as u64
}

/// Choose centers: every vertex of degree at least two gets a budget
/// proportional to its share of its bin's wedges.
pub(crate) fn select_centers(
    engine: &Engine,
    degrees: &[Split],
    theta: &Theta,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<JobStats> {
    let stream = name_id(STREAM_ROUNDING);
    let tasks = degrees
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                for r in split.records::<DegreeRecord>()? {
                    let r = r?;
                    ctx.count_input(1);
                    if r.degree < 2 {
                        continue;
                    }
                    let bin = cfg.bins.bin_id(r.degree)?;
                    let p = theta.get(bin).ok_or(Error::MissingBin { bin })?;
                    let wedges = choose2(r.degree);
                    let q = match cfg.mode {
                        SamplingMode::Exhaustive => wedges,
                        SamplingMode::Random => {
                            let u = keyed_u64(cfg.seed, stream, r.vertex, 0);
                            round_budget(wedges, cfg.k, p, u)
                        }
                    };
                    if q > 0 {
                        ctx.emit(&r.vertex, &(), &(r.degree, q, p))?;
                    }
                }
                Ok(())
            })
        })
        .collect();
    engine.run_to_dir(
        super::JOB_CENTERS,
        tasks,
        |key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, WedgeCenter>| {
            let v = decode_all(key)?;
            while let Some(((), (d, q, p))) = values.next_value::<(), (u64, u64, u64)>()? {
                out.emit(WedgeCenter { v, d, q, p })?;
            }
            Ok(())
        },
        out,
    )
}

/// Bin of each sampled center, or nothing if the table was not gathered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CenterFilter {
    Skipped,
    Centers(HashMap<VertexId, BinId>),
}

impl CenterFilter {
    /// 0 if not gathered, 1 if `v` is not a center, else the bin of `v`.
    pub fn gamma(&self, v: VertexId) -> BinId {
        match self {
            CenterFilter::Skipped => 0,
            CenterFilter::Centers(m) => m.get(&v).copied().unwrap_or(1),
        }
    }
}

/// Load the center table, or skip it if it would exceed `limit` bytes.
pub(crate) fn gather_centers(dir: &Path, bins: &BinConfig, limit: u64) -> Result<CenterFilter> {
    let mut map = HashMap::new();
    for c in read_records::<WedgeCenter>(dir)? {
        map.insert(c.v, bins.bin_id(c.d)?);
        if map.len() as u64 * BYTES_PER_CENTER > limit {
            log::warn!(
                "center table exceeds {limit} bytes; skipping center filtering"
            );
            return Ok(CenterFilter::Skipped);
        }
    }
    Ok(CenterFilter::Centers(map))
}

/// Random sort position of edge `{v, w}` among the edges sent to `v`. Always
/// at least 1 so that the center record (position 0) comes first.
fn edge_position(seed: u64, stream: u64, v: VertexId, w: VertexId) -> u64 {
    keyed_u64(seed, stream, v, w).max(1)
}

/// Largest position forwarded to a center of bin `b`: an edge survives with
/// probability `4k / d_min` when the bin's lowest degree exceeds `4k`.
fn position_cutoff(bins: &BinConfig, k: u64, bin: BinId) -> u64 {
    let d_min = bins.bin_lo_deg(bin) as u128;
    let four_k = 4 * k as u128;
    if d_min > four_k {
        ((four_k << 64) / d_min) as u64
    } else {
        u64::MAX
    }
}

/// Sample wedges. Each center receives its own record first (secondary key
/// 0), then its incident edges in random order, and reads only as many edges
/// as its sampled index pairs refer to.
pub(crate) fn create_wedges(
    engine: &Engine,
    edges: &[Split],
    centers: &[Split],
    gamma: &CenterFilter,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<JobStats> {
    let seed = cfg.seed;
    let filter = cfg.mode == SamplingMode::Random;
    let mut cutoffs: BTreeMap<BinId, u64> = BTreeMap::new();
    if let CenterFilter::Centers(m) = gamma {
        for &b in m.values() {
            cutoffs
                .entry(b)
                .or_insert_with(|| position_cutoff(&cfg.bins, cfg.k, b));
        }
    }
    let cutoffs = &cutoffs;
    let order_stream = name_id(STREAM_ORDER);

    let mut tasks: Vec<Task<'_>> = centers
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                for c in split.records::<WedgeCenter>()? {
                    let c = c?;
                    ctx.count_input(1);
                    ctx.emit(&c.v, &0u64, &(c.d, c.q, c.p))?;
                }
                Ok(())
            })
        })
        .collect();
    tasks.extend(edges.iter().map(|split| {
        Task::new(move |ctx: &mut MapContext<'_>| {
            for e in split.records::<Edge>()? {
                let e = e?;
                ctx.count_input(1);
                for (v, w) in [(e.v, e.w), (e.w, e.v)] {
                    let g = gamma.gamma(v);
                    if g == 1 {
                        continue;
                    }
                    let pos = edge_position(seed, order_stream, v, w);
                    if g >= 2 && filter && pos > cutoffs[&g] {
                        continue;
                    }
                    ctx.emit(&v, &pos, &w)?;
                }
            }
            Ok(())
        })
    }));

    let sampling_stream = STREAM_SAMPLING;
    engine.run_to_dir(
        super::JOB_SAMPLE,
        tasks,
        |key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, SampleWedge>| {
            let v: VertexId = decode_all(key)?;
            let (d, q, p) = match values.next_raw()? {
                Some((sec, val)) if sec == 0u64.to_be_bytes() => decode_all::<(u64, u64, u64)>(val)?,
                // Edges of a vertex that is not a center.
                _ => return Ok(()),
            };
            let sampled = match cfg.mode {
                SamplingMode::Random => {
                    sampling_subroutine(d, q, &mut derive_rng(seed, sampling_stream, v))
                }
                SamplingMode::Exhaustive => all_pairs(d),
            };
            let needed = sampled.needed as usize;
            let mut neighbors = Vec::with_capacity(needed);
            while neighbors.len() < needed {
                match values.next_value::<u64, u64>()? {
                    Some((_, w)) => neighbors.push(w),
                    None => break,
                }
            }
            if neighbors.len() < needed {
                return Err(Error::UnderDelivery {
                    vertex: v,
                    needed: needed as u64,
                    received: neighbors.len() as u64,
                });
            }
            for (i, j) in sampled.pairs {
                let (v1, v2) = (neighbors[i as usize - 1], neighbors[j as usize - 1]);
                out.emit(SampleWedge {
                    h: edge_hash(v1, v2),
                    v0: v,
                    v1,
                    v2,
                    p,
                    d0: d,
                })?;
            }
            Ok(())
        },
        out,
    )
}

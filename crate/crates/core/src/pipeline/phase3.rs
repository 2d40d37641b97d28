//! Wedge closure.

use std::collections::HashSet;
use std::path::Path;

use super::hash::edge_hash;
use super::records::{SampleWedge, WedgeResult};
use crate::engine::{decode_all, Emit, Engine, JobStats, MapContext, Task, Values};
use crate::error::Result;
use crate::graph_io::{Dataset, Edge, Split};

/// Estimated client memory per gathered hash.
const BYTES_PER_HASH: u64 = 8;

pub(crate) const COUNTER_CLOSED: &str = "closed wedges";
pub(crate) const COUNTER_EDGES: &str = "edges forwarded";

const SEC_EDGE: u8 = 0;
const SEC_WEDGE: u8 = 1;

/// Closing-edge hashes of all sampled wedges, or nothing if not gathered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HashFilter {
    Skipped,
    Hashes(HashSet<u64>),
}

impl HashFilter {
    pub fn admits(&self, h: u64) -> bool {
        match self {
            HashFilter::Skipped => true,
            HashFilter::Hashes(set) => set.contains(&h),
        }
    }
}

/// Load the distinct wedge hashes, or skip if they would exceed `limit` bytes.
pub(crate) fn gather_hashes(dir: &Path, limit: u64) -> Result<HashFilter> {
    let mut set = HashSet::new();
    for split in Dataset::open(dir)?.splits(1)? {
        for w in split.records::<SampleWedge>()? {
            set.insert(w?.h);
            if set.len() as u64 * BYTES_PER_HASH > limit {
                log::warn!("hash table exceeds {limit} bytes; skipping edge filtering");
                return Ok(HashFilter::Skipped);
            }
        }
    }
    Ok(HashFilter::Hashes(set))
}

/// Label each sampled wedge open or closed. Wedges and candidate closing
/// edges meet at the reducer for their hash; the reducer compares endpoints,
/// so hash collisions cannot close a wedge.
pub(crate) fn check_closure(
    engine: &Engine,
    wedges: &[Split],
    edges: &[Split],
    xi: &HashFilter,
    out: &Path,
) -> Result<JobStats> {
    let mut tasks: Vec<Task<'_>> = wedges
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                for w in split.records::<SampleWedge>()? {
                    let w = w?;
                    ctx.count_input(1);
                    ctx.emit(&w.h, &SEC_WEDGE, &(w.v0, w.v1, w.v2, w.p, w.d0))?;
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
                let h = edge_hash(e.v, e.w);
                if xi.admits(h) {
                    ctx.counter(COUNTER_EDGES, 1);
                    ctx.emit(&h, &SEC_EDGE, &e.canonical())?;
                }
            }
            Ok(())
        })
    }));
    engine.run_to_dir(
        super::JOB_CLOSURE,
        tasks,
        |_key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, WedgeResult>| {
            let mut candidates: Vec<(u64, u64)> = Vec::new();
            while let Some((sec, val)) = values.next_raw()? {
                if sec == [SEC_EDGE] {
                    candidates.push(decode_all(val)?);
                    continue;
                }
                let (v0, v1, v2, p, d0) = decode_all::<(u64, u64, u64, u64, u64)>(val)?;
                let closing = (v1.min(v2), v1.max(v2));
                let closed = candidates.contains(&closing);
                if closed {
                    out.counter(COUNTER_CLOSED, 1);
                }
                out.emit(WedgeResult {
                    closed,
                    v0,
                    v1,
                    v2,
                    p,
                    d0,
                    d1: None,
                    d2: None,
                })?;
            }
            Ok(())
        },
        out,
    )
}

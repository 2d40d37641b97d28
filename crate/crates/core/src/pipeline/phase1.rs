//! Degrees and wedges per bin.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::records::WedgesPerBin;
use super::COUNTER_PRE_COMBINE;
use crate::binning::{BinConfig, BinId};
use crate::engine::{decode_all, Emit, Engine, JobStats, MapContext, Task, Values};
use crate::error::Result;
use crate::graph_io::{read_records, write_records, DegreeRecord, Edge, Split, VertexId};

/// Combiner entries held per mapper before flushing.
const COMBINER_CAPACITY: usize = 1 << 20;

fn flush_counts(ctx: &mut MapContext<'_>, counts: &mut HashMap<VertexId, u64>) -> Result<()> {
    let mut entries: Vec<(VertexId, u64)> = counts.drain().collect();
    entries.sort_unstable();
    for (v, c) in entries {
        ctx.emit(&v, &(), &c)?;
    }
    Ok(())
}

/// Degree of every vertex. Mappers pre-aggregate counts per split.
pub(crate) fn degrees(engine: &Engine, edges: &[Split], out: &Path) -> Result<JobStats> {
    let tasks = edges
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                let mut counts: HashMap<VertexId, u64> = HashMap::new();
                for e in split.records::<Edge>()? {
                    let e = e?;
                    ctx.count_input(1);
                    ctx.counter(COUNTER_PRE_COMBINE, 2);
                    *counts.entry(e.v).or_insert(0) += 1;
                    *counts.entry(e.w).or_insert(0) += 1;
                    if counts.len() >= COMBINER_CAPACITY {
                        flush_counts(ctx, &mut counts)?;
                    }
                }
                flush_counts(ctx, &mut counts)
            })
        })
        .collect();
    engine.run_to_dir(
        super::JOB_DEGREES,
        tasks,
        |key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, DegreeRecord>| {
            let mut degree = 0;
            while let Some(((), c)) = values.next_value::<(), u64>()? {
                degree += c;
            }
            out.emit(DegreeRecord {
                vertex: decode_all(key)?,
                degree,
            })
        },
        out,
    )
}

pub(crate) fn choose2(d: u64) -> u64 {
    d * d.saturating_sub(1) / 2
}

/// Vertex and wedge counts per bin, written to `out` in bin order.
pub(crate) fn wedges_per_bin(
    engine: &Engine,
    degrees: &[Split],
    bins: &BinConfig,
    out: &Path,
) -> Result<(Vec<WedgesPerBin>, JobStats)> {
    let tasks = degrees
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                let mut per_bin: BTreeMap<BinId, (u64, u64)> = BTreeMap::new();
                for r in split.records::<DegreeRecord>()? {
                    let r = r?;
                    ctx.count_input(1);
                    let slot = per_bin.entry(bins.bin_id(r.degree)?).or_insert((0, 0));
                    slot.0 += 1;
                    slot.1 += choose2(r.degree);
                }
                for (b, counts) in per_bin {
                    ctx.emit(&b, &(), &counts)?;
                }
                Ok(())
            })
        })
        .collect();
    let (mut rows, stats) = engine.run_collect(
        super::JOB_WEDGES_PER_BIN,
        tasks,
        |key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, WedgesPerBin>| {
            let mut row = WedgesPerBin {
                bin: decode_all(key)?,
                vertices: 0,
                wedges: 0,
            };
            while let Some(((), (n, p))) = values.next_value::<(), (u64, u64)>()? {
                row.vertices += n;
                row.wedges += p;
            }
            out.emit(row)
        },
    )?;
    rows.sort_unstable();
    write_records(out, &rows)?;
    Ok((rows, stats))
}

/// Wedge count per bin, loaded into client memory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theta {
    wedges: BTreeMap<BinId, u64>,
}

impl Theta {
    pub fn gather(path: &Path) -> Result<Self> {
        Ok(Self::from_rows(&read_records::<WedgesPerBin>(path)?))
    }

    pub fn from_rows(rows: &[WedgesPerBin]) -> Self {
        Theta {
            wedges: rows.iter().map(|r| (r.bin, r.wedges)).collect(),
        }
    }

    pub fn get(&self, bin: BinId) -> Option<u64> {
        self.wedges.get(&bin).copied()
    }

    pub fn total(&self) -> u64 {
        self.wedges.values().sum()
    }
}

//! Endpoint degree joins and per-bin summaries.

use std::path::Path;

use super::records::{BinSummary, WedgeResult};
use crate::binning::{BinConfig, BinId};
use crate::engine::{decode_all, Emit, Engine, JobStats, MapContext, Task, Values};
use crate::error::{Error, Result};
use crate::graph_io::{DegreeRecord, Split, VertexId};

const SEC_DEGREE: u8 = 0;
const SEC_RESULT: u8 = 1;

/// Wedge endpoint whose degree a join attaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Endpoint {
    First,
    Second,
}

type Packed = (bool, u64, u64, u64, u64, u64, u64);

fn pack(r: &WedgeResult) -> Packed {
    (r.closed, r.v0, r.v1, r.v2, r.p, r.d0, r.d1.unwrap_or(0))
}

fn unpack(t: Packed) -> WedgeResult {
    WedgeResult {
        closed: t.0,
        v0: t.1,
        v1: t.2,
        v2: t.3,
        p: t.4,
        d0: t.5,
        d1: (t.6 > 0).then_some(t.6),
        d2: None,
    }
}

/// Attach the degree of one endpoint to every wedge result.
pub(crate) fn join_endpoint(
    engine: &Engine,
    job: &str,
    results: &[Split],
    degrees: &[Split],
    which: Endpoint,
    out: &Path,
) -> Result<JobStats> {
    let mut tasks: Vec<Task<'_>> = degrees
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                for r in split.records::<DegreeRecord>()? {
                    let r = r?;
                    ctx.count_input(1);
                    ctx.emit(&r.vertex, &SEC_DEGREE, &r.degree)?;
                }
                Ok(())
            })
        })
        .collect();
    tasks.extend(results.iter().map(|split| {
        Task::new(move |ctx: &mut MapContext<'_>| {
            for r in split.records::<WedgeResult>()? {
                let r = r?;
                ctx.count_input(1);
                let key = match which {
                    Endpoint::First => r.v1,
                    Endpoint::Second => r.v2,
                };
                ctx.emit(&key, &SEC_RESULT, &pack(&r))?;
            }
            Ok(())
        })
    }));
    engine.run_to_dir(
        job,
        tasks,
        |key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, WedgeResult>| {
            let degree = match values.next_raw()? {
                Some((sec, d)) if sec == [SEC_DEGREE] => decode_all::<u64>(d)?,
                Some(_) => {
                    return Err(Error::MissingDegree {
                        vertex: decode_all::<VertexId>(key)?,
                    })
                }
                None => return Ok(()),
            };
            while let Some((_, packed)) = values.next_value::<u8, Packed>()? {
                let mut r = unpack(packed);
                match which {
                    Endpoint::First => r.d1 = Some(degree),
                    Endpoint::Second => r.d2 = Some(degree),
                }
                out.emit(r)?;
            }
            Ok(())
        },
        out,
    )
}

/// Tally wedge results by center bin and compute the per-bin estimates,
/// sorted by bin.
pub(crate) fn summarize(
    engine: &Engine,
    results: &[Split],
    bins: &BinConfig,
) -> Result<(Vec<BinSummary>, JobStats)> {
    let tasks: Vec<Task<'_>> = results
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                for r in split.records::<WedgeResult>()? {
                    let r = r?;
                    ctx.count_input(1);
                    let (Some(d1), Some(d2)) = (r.d1, r.d2) else {
                        return Err(Error::Corrupt(format!(
                            "wedge centered at {} lacks endpoint degrees",
                            r.v0
                        )));
                    };
                    let b = bins.bin_id(r.d0)?;
                    let inside = 1 + u8::from(bins.bin_id(d1)? == b) + u8::from(bins.bin_id(d2)? == b);
                    ctx.emit(&b, &(), &(r.closed, inside, r.p))?;
                }
                Ok(())
            })
        })
        .collect();
    let (mut rows, stats) = engine.run_collect(
        super::JOB_SUMMARY,
        tasks,
        |key: &[u8], values: &mut Values<'_>, out: &mut Emit<'_, BinSummary>| {
            let bin: BinId = decode_all(key)?;
            let mut q = [0u64; 4];
            let mut p = 0;
            while let Some(((), (closed, inside, pb))) = values.next_value::<(), (bool, u8, u64)>()? {
                q[if closed { inside as usize } else { 0 }] += 1;
                p = pb;
            }
            out.emit(BinSummary::from_tallies(bin, q, p)?)
        },
    )?;
    rows.sort_by_key(|r| r.bin);
    Ok((rows, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use crate::graph_io::{read_records, write_records, Dataset};

    fn result(closed: bool, v0: u64, v1: u64, v2: u64) -> WedgeResult {
        WedgeResult {
            closed,
            v0,
            v1,
            v2,
            p: 6,
            d0: 4,
            d1: None,
            d2: None,
        }
    }

    fn setup(dir: &Path, results: &[WedgeResult], degrees: &[DegreeRecord]) -> (Vec<Split>, Vec<Split>) {
        let rd = dir.join("results");
        let dd = dir.join("degrees");
        std::fs::create_dir_all(&rd).unwrap();
        std::fs::create_dir_all(&dd).unwrap();
        write_records(&rd.join("part-r-00000"), results).unwrap();
        write_records(&dd.join("part-r-00000"), degrees).unwrap();
        (
            Dataset::open(&rd).unwrap().splits(2).unwrap(),
            Dataset::open(&dd).unwrap().splits(2).unwrap(),
        )
    }

    fn small_degrees() -> Vec<DegreeRecord> {
        [(1, 2), (2, 2), (3, 3), (4, 4), (5, 2), (6, 1)]
            .map(|(vertex, degree)| DegreeRecord { vertex, degree })
            .to_vec()
    }

    #[test]
    fn joins_and_tallies() {
        let dir = tempfile::tempdir().unwrap();
        let results = [result(false, 4, 2, 6), result(true, 4, 3, 5), result(false, 4, 3, 6)];
        let (rs, ds) = setup(dir.path(), &results, &small_degrees());
        let engine = Engine::new(EngineConfig::with_spill_dir(dir.path()));
        let v1 = dir.path().join("v1");
        let stats = join_endpoint(&engine, "join", &rs, &ds, Endpoint::First, &v1).unwrap();
        assert_eq!(stats.records_emitted, 6 + 3);
        assert_eq!(stats.output_records, 3);
        let v1_splits = Dataset::open(&v1).unwrap().splits(1).unwrap();
        let v2 = dir.path().join("v2");
        join_endpoint(&engine, "join", &v1_splits, &ds, Endpoint::Second, &v2).unwrap();
        let mut joined: Vec<WedgeResult> = read_records(&v2).unwrap();
        joined.sort();
        assert_eq!(joined[0].d1, Some(2));
        assert_eq!(joined[0].d2, Some(1));
        assert_eq!((joined[2].d1, joined[2].d2), (Some(3), Some(2)));

        let v2_splits = Dataset::open(&v2).unwrap().splits(1).unwrap();
        let (rows, _) = summarize(&engine, &v2_splits, &BinConfig::standard()).unwrap();
        assert_eq!(rows.len(), 1);
        // Bin 3 holds degrees 3 and 4, so the closed wedge 3-4-5 has two
        // vertices inside.
        assert_eq!(rows[0].bin, 3);
        assert_eq!(rows[0].q, [2, 0, 1, 0]);
        assert!((rows[0].c - 1.0 / 3.0).abs() < 1e-15);
        assert!((rows[0].t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_degree_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (rs, ds) = setup(dir.path(), &[result(true, 4, 9, 5)], &small_degrees());
        let engine = Engine::new(EngineConfig::with_spill_dir(dir.path()));
        let err = join_endpoint(&engine, "join", &rs, &ds, Endpoint::First, &dir.path().join("o")).unwrap_err();
        assert!(matches!(err, Error::MissingDegree { vertex: 9 }), "{err}");
    }
}

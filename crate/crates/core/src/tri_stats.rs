//! Degree statistics of uniformly sampled triangles.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::binning::{BinConfig, BinId};
use crate::error::{Error, IoContext, Result};
use crate::graph_io::VertexId;
use crate::pipeline::WedgeResult;

/// A triangle from a closed sampled wedge, vertices ordered by degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TriangleSample {
    pub vertices: [VertexId; 3],
    pub degrees: [u64; 3],
}

impl TriangleSample {
    pub fn new(vertices: [VertexId; 3], degrees: [u64; 3]) -> Self {
        let mut pairs = [(degrees[0], vertices[0]), (degrees[1], vertices[1]), (degrees[2], vertices[2])];
        pairs.sort_unstable();
        TriangleSample {
            vertices: pairs.map(|p| p.1),
            degrees: pairs.map(|p| p.0),
        }
    }

    pub fn d_min(&self) -> u64 {
        self.degrees[0]
    }

    pub fn d_max(&self) -> u64 {
        self.degrees[2]
    }

    /// Vertex ids in increasing order, identifying the triangle.
    pub fn key(&self) -> [VertexId; 3] {
        let mut v = self.vertices;
        v.sort_unstable();
        v
    }
}

/// One triangle per closed wedge. Every center must share a bin; otherwise
/// closed wedges are not uniform over triangles.
pub fn extract_triangles(results: &[WedgeResult], bins: &BinConfig) -> Result<Vec<TriangleSample>> {
    let mut first: Option<(BinId, u64)> = None;
    let mut out = Vec::new();
    for r in results {
        let b = bins.bin_id(r.d0)?;
        match first {
            None => first = Some((b, r.d0)),
            Some((b0, d0)) if b0 != b => return Err(Error::MultiBin { a: d0, b: r.d0 }),
            Some(_) => {}
        }
        if !r.closed {
            continue;
        }
        let (Some(d1), Some(d2)) = (r.d1, r.d2) else {
            return Err(Error::Corrupt(format!(
                "closed wedge centered at {} lacks endpoint degrees",
                r.v0
            )));
        };
        out.push(TriangleSample::new([r.v0, r.v1, r.v2], [r.d0, d1, d2]));
    }
    Ok(out)
}

/// Box-plot summary of the maximum degree for one minimum-degree bin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssortativityRow {
    pub min_bin: BinId,
    pub count: u64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub lo_whisker: u64,
    pub hi_whisker: u64,
    #[serde(skip)]
    pub outliers: Vec<u64>,
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[u64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] as f64 + (h - lo as f64) * (sorted[hi] as f64 - sorted[lo] as f64)
}

/// Group samples by the bin of their minimum degree and summarize the
/// maximum degree of each group. Whiskers reach the most extreme values
/// within 1.5 interquartile ranges of the quartiles; the rest are outliers.
pub fn assortativity_table(samples: &[TriangleSample], cfg: &BinConfig) -> Result<Vec<AssortativityRow>> {
    let mut groups: BTreeMap<BinId, Vec<u64>> = BTreeMap::new();
    for s in samples {
        groups.entry(cfg.bin_id(s.d_min())?).or_default().push(s.d_max());
    }
    Ok(groups
        .into_iter()
        .map(|(min_bin, mut xs)| {
            xs.sort_unstable();
            let q25 = quantile(&xs, 0.25);
            let q75 = quantile(&xs, 0.75);
            let iqr = q75 - q25;
            let (lo, hi) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
            let inside = |x: &&u64| (lo..=hi).contains(&(**x as f64));
            AssortativityRow {
                min_bin,
                count: xs.len() as u64,
                q25,
                median: quantile(&xs, 0.5),
                q75,
                lo_whisker: *xs.iter().find(inside).expect("quartiles lie inside"),
                hi_whisker: *xs.iter().rev().find(inside).expect("quartiles lie inside"),
                outliers: xs.iter().copied().filter(|x| !inside(&x)).collect(),
            }
        })
        .collect())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Corrupt(format!("{}: {other:?}", path.display())),
    }
}

/// Write the table as CSV with header
/// `min_bin,count,q25,median,q75,lo_whisker,hi_whisker`.
pub fn write_table_csv(path: &Path, rows: &[AssortativityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().at(path)
}

/// Write outliers as CSV rows `min_bin,d_max`.
pub fn write_outliers_csv(path: &Path, rows: &[AssortativityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["min_bin", "d_max"]).map_err(|e| csv_error(path, e))?;
    for r in rows {
        for x in &r.outliers {
            w.serialize((r.min_bin, x)).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().at(path)
}

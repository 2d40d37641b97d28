//! Records passed between pipeline phases, each one tab-separated line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::binning::{BinConfig, BinId};
use crate::error::{Error, IoContext, Result};
use crate::estimators::{cc_estimate, triangle_estimate};
use crate::graph_io::{push_tab_u64, push_u64, Fields, TextRecord, VertexId};

/// Vertex count and wedge count of one degree bin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct WedgesPerBin {
    pub bin: BinId,
    pub vertices: u64,
    pub wedges: u64,
}

impl TextRecord for WedgesPerBin {
    fn write_fields(&self, out: &mut Vec<u8>) {
        push_u64(out, self.bin);
        push_tab_u64(out, self.vertices);
        push_tab_u64(out, self.wedges);
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let r = WedgesPerBin {
            bin: f.u64("b")?,
            vertices: f.u64("n_b")?,
            wedges: f.u64("p_b")?,
        };
        f.finish()?;
        Ok(r)
    }
}

/// A vertex chosen to host `q` sampled wedges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WedgeCenter {
    pub v: VertexId,
    pub d: u64,
    pub q: u64,
    /// Wedge count of the vertex's bin.
    pub p: u64,
}

impl TextRecord for WedgeCenter {
    fn write_fields(&self, out: &mut Vec<u8>) {
        push_u64(out, self.v);
        push_tab_u64(out, self.d);
        push_tab_u64(out, self.q);
        push_tab_u64(out, self.p);
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let r = WedgeCenter {
            v: f.u64("v")?,
            d: f.u64("d")?,
            q: f.u64("q")?,
            p: f.u64("p")?,
        };
        f.finish()?;
        Ok(r)
    }
}

/// A sampled wedge `v1 - v0 - v2` with the hash of its closing edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SampleWedge {
    pub h: u64,
    pub v0: VertexId,
    pub v1: VertexId,
    pub v2: VertexId,
    pub p: u64,
    pub d0: u64,
}

impl TextRecord for SampleWedge {
    fn write_fields(&self, out: &mut Vec<u8>) {
        push_u64(out, self.h);
        for x in [self.v0, self.v1, self.v2, self.p, self.d0] {
            push_tab_u64(out, x);
        }
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let r = SampleWedge {
            h: f.u64("h")?,
            v0: f.u64("v0")?,
            v1: f.u64("v1")?,
            v2: f.u64("v2")?,
            p: f.u64("p")?,
            d0: f.u64("d0")?,
        };
        f.finish()?;
        Ok(r)
    }
}

/// A sampled wedge with its closure flag and, after the endpoint joins, the
/// endpoint degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WedgeResult {
    pub closed: bool,
    pub v0: VertexId,
    pub v1: VertexId,
    pub v2: VertexId,
    pub p: u64,
    pub d0: u64,
    pub d1: Option<u64>,
    pub d2: Option<u64>,
}

impl TextRecord for WedgeResult {
    fn write_fields(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(if self.closed { b"closed" } else { b"open" });
        for x in [self.v0, self.v1, self.v2, self.p, self.d0] {
            push_tab_u64(out, x);
        }
        if let Some(d1) = self.d1 {
            push_tab_u64(out, d1);
            if let Some(d2) = self.d2 {
                push_tab_u64(out, d2);
            }
        }
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let closed = match f.token("sigma")? {
            b"closed" => true,
            b"open" => false,
            other => {
                return Err(format!(
                    "field `sigma`: expected open or closed, got {:?}",
                    String::from_utf8_lossy(other)
                ))
            }
        };
        let mut r = WedgeResult {
            closed,
            v0: f.u64("v0")?,
            v1: f.u64("v1")?,
            v2: f.u64("v2")?,
            p: f.u64("p")?,
            d0: f.u64("d0")?,
            d1: None,
            d2: None,
        };
        if !f.is_empty() {
            r.d1 = Some(f.u64("d1")?);
            if !f.is_empty() {
                r.d2 = Some(f.u64("d2")?);
            }
        }
        f.finish()?;
        Ok(r)
    }
}

/// Per-bin wedge tallies and estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinSummary {
    pub bin: BinId,
    /// Open wedges, then closed wedges with 1, 2 or 3 vertices in the bin.
    pub q: [u64; 4],
    pub c: f64,
    pub p: u64,
    pub t: f64,
}

impl BinSummary {
    pub fn from_tallies(bin: BinId, q: [u64; 4], p: u64) -> Result<Self> {
        let total: u64 = q.iter().sum();
        Ok(BinSummary {
            bin,
            q,
            c: cc_estimate(q[1] + q[2] + q[3], total)?,
            p,
            t: triangle_estimate(q[1], q[2], q[3], total, p)?,
        })
    }

    pub fn total(&self) -> u64 {
        self.q.iter().sum()
    }
}

impl TextRecord for BinSummary {
    fn write_fields(&self, out: &mut Vec<u8>) {
        push_u64(out, self.bin);
        for x in self.q {
            push_tab_u64(out, x);
        }
        out.extend_from_slice(format!("\t{}", self.c).as_bytes());
        push_tab_u64(out, self.p);
        out.extend_from_slice(format!("\t{}", self.t).as_bytes());
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let r = BinSummary {
            bin: f.u64("b")?,
            q: [f.u64("q0")?, f.u64("q1")?, f.u64("q2")?, f.u64("q3")?],
            c: f.f64("c")?,
            p: f.u64("p")?,
            t: f.f64("t")?,
        };
        f.finish()?;
        Ok(r)
    }
}

/// Parameters recorded in the first line of a summary file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryHeader {
    pub bins: BinConfig,
    /// `None` for exact summaries.
    pub k: Option<u64>,
    pub seed: Option<u64>,
}

impl SummaryHeader {
    fn line(&self) -> String {
        let fmt = |x: Option<u64>| x.map_or_else(|| "exact".to_string(), |v| v.to_string());
        format!(
            "# tau={} omega={} k={} seed={}",
            self.bins.tau(),
            self.bins.omega(),
            fmt(self.k),
            fmt(self.seed)
        )
    }
}

pub fn write_summary(path: &Path, header: &SummaryHeader, rows: &[BinSummary]) -> Result<()> {
    let file = File::create(path).at(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", header.line()).at(path)?;
    let mut line = Vec::new();
    for r in rows {
        line.clear();
        r.write_fields(&mut line);
        line.push(b'\n');
        out.write_all(&line).at(path)?;
    }
    out.flush().at(path)
}

pub fn read_summary(path: &Path) -> Result<(SummaryHeader, Vec<BinSummary>)> {
    let file = File::open(path).at(path)?;
    let mut header = None;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.at(path)?;
        let lineno = i as u64 + 1;
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        if let Some(rest) = line.strip_prefix("# ") {
            if header.is_none() {
                header = Some(parse_header(rest).map_err(parse_err)?);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(BinSummary::parse_fields(&mut Fields::new(line.as_bytes())).map_err(parse_err)?);
    }
    let header = header.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "missing summary header".into(),
    })?;
    Ok((header, rows))
}

fn parse_header(s: &str) -> Result<SummaryHeader, String> {
    let mut tau = None;
    let mut omega = None;
    let mut k = None;
    let mut seed = None;
    let opt = |v: &str| -> Result<Option<u64>, String> {
        if v == "exact" {
            Ok(None)
        } else {
            v.parse().map(Some).map_err(|e| format!("{e}"))
        }
    };
    for tok in s.split_whitespace() {
        let (name, value) = tok
            .split_once('=')
            .ok_or_else(|| format!("bad header token {tok:?}"))?;
        match name {
            "tau" => tau = Some(value.parse::<u64>().map_err(|e| e.to_string())?),
            "omega" => omega = Some(value.parse::<f64>().map_err(|e| e.to_string())?),
            "k" => k = Some(opt(value)?),
            "seed" => seed = Some(opt(value)?),
            _ => return Err(format!("unknown header field {name:?}")),
        }
    }
    let bins = BinConfig::new(
        tau.ok_or("header lacks tau")?,
        omega.ok_or("header lacks omega")?,
    )
    .map_err(|e| e.to_string())?;
    Ok(SummaryHeader {
        bins,
        k: k.ok_or("header lacks k")?,
        seed: seed.ok_or("header lacks seed")?,
    })
}

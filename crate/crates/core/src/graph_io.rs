//! Tab-separated record files, edge lists, and splits.
//!
//! Every file is one record per line with tab-separated fields. Blank lines
//! and lines starting with `#` or `%` are skipped when reading. A dataset is an
//! ordered list of files (a single edge list, or the `part-r-*` files of a
//! job's output directory); splitting is done by record count so that splits
//! are balanced within one record.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{decode_all, Emit, Engine, MapContext, Task, Values};
use crate::error::{Error, IoContext, Result};

pub type VertexId = u64;

const READ_BUF: usize = 1 << 17;

/// A record serialized as one tab-separated line.
pub trait TextRecord: Sized {
    /// Append the fields (without trailing newline) to `out`.
    fn write_fields(&self, out: &mut Vec<u8>);
    fn parse_fields(fields: &mut Fields<'_>) -> Result<Self, String>;
}

/// Whitespace-separated tokens of one line.
pub struct Fields<'a> {
    rest: &'a [u8],
}

impl<'a> Fields<'a> {
    pub fn new(line: &'a [u8]) -> Self {
        Fields { rest: line }
    }

    pub fn next_token(&mut self) -> Option<&'a [u8]> {
        let start = self.rest.iter().position(|b| !b.is_ascii_whitespace())?;
        let rest = &self.rest[start..];
        let end = rest
            .iter()
            .position(|b| b.is_ascii_whitespace())
            .unwrap_or(rest.len());
        self.rest = &rest[end..];
        Some(&rest[..end])
    }

    pub fn u64(&mut self, name: &str) -> Result<u64, String> {
        let tok = self.next_token().ok_or_else(|| format!("missing field `{name}`"))?;
        parse_u64(tok).ok_or_else(|| {
            format!(
                "field `{name}`: expected unsigned integer, got {:?}",
                String::from_utf8_lossy(tok)
            )
        })
    }

    pub fn f64(&mut self, name: &str) -> Result<f64, String> {
        let tok = self.next_token().ok_or_else(|| format!("missing field `{name}`"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("field `{name}`: expected number, got {:?}", String::from_utf8_lossy(tok)))
    }

    pub fn token(&mut self, name: &str) -> Result<&'a [u8], String> {
        self.next_token().ok_or_else(|| format!("missing field `{name}`"))
    }

    pub fn is_empty(&self) -> bool {
        self.rest.iter().all(|b| b.is_ascii_whitespace())
    }

    pub fn finish(&self) -> Result<(), String> {
        if self.is_empty() {
            Ok(())
        } else {
            Err("unexpected trailing fields".into())
        }
    }
}

fn parse_u64(tok: &[u8]) -> Option<u64> {
    if tok.is_empty() || tok.len() > 20 {
        return None;
    }
    let mut v: u64 = 0;
    for &b in tok {
        let digit = b.wrapping_sub(b'0');
        if digit > 9 {
            return None;
        }
        v = v.checked_mul(10)?.checked_add(digit as u64)?;
    }
    Some(v)
}

/// Append a decimal integer.
pub fn push_u64(out: &mut Vec<u8>, mut v: u64) {
    let mut tmp = [0u8; 20];
    let mut i = tmp.len();
    loop {
        i -= 1;
        tmp[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    out.extend_from_slice(&tmp[i..]);
}

pub(crate) fn push_tab_u64(out: &mut Vec<u8>, v: u64) {
    out.push(b'\t');
    push_u64(out, v);
}

fn is_data_line(line: &[u8]) -> bool {
    match line.iter().find(|b| !b.is_ascii_whitespace()) {
        None => false,
        Some(b'#') | Some(b'%') => false,
        Some(_) => true,
    }
}

/// An undirected edge `{v, w}` as written in the edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub v: VertexId,
    pub w: VertexId,
}

impl Edge {
    pub fn new(v: VertexId, w: VertexId) -> Self {
        Edge { v, w }
    }

    /// Endpoints ordered `(min, max)`.
    pub fn canonical(&self) -> (VertexId, VertexId) {
        (self.v.min(self.w), self.v.max(self.w))
    }
}

impl TextRecord for Edge {
    fn write_fields(&self, out: &mut Vec<u8>) {
        push_u64(out, self.v);
        push_tab_u64(out, self.w);
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let e = Edge {
            v: f.u64("v")?,
            w: f.u64("w")?,
        };
        f.finish()?;
        Ok(e)
    }
}

/// A line of the vertex degree file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DegreeRecord {
    pub vertex: VertexId,
    pub degree: u64,
}

impl TextRecord for DegreeRecord {
    fn write_fields(&self, out: &mut Vec<u8>) {
        push_u64(out, self.vertex);
        push_tab_u64(out, self.degree);
    }

    fn parse_fields(f: &mut Fields<'_>) -> Result<Self, String> {
        let r = DegreeRecord {
            vertex: f.u64("v")?,
            degree: f.u64("d")?,
        };
        f.finish()?;
        Ok(r)
    }
}

pub type DegreeTable = Vec<DegreeRecord>;

/// In-memory edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn new(edges: Vec<Edge>) -> Self {
        EdgeList { edges }
    }

    pub fn from_pairs(pairs: &[(VertexId, VertexId)]) -> Self {
        EdgeList {
            edges: pairs.iter().map(|&(v, w)| Edge::new(v, w)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of distinct vertices touched by an edge.
    pub fn vertex_count(&self) -> usize {
        let mut ids: Vec<_> = self.edges.iter().flat_map(|e| [e.v, e.w]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Drop self-edges and duplicate undirected edges, leaving each edge as
    /// `(min, max)` in sorted order.
    pub fn canonicalize(&mut self) {
        self.edges.retain(|e| e.v != e.w);
        for e in &mut self.edges {
            let (v, w) = e.canonical();
            *e = Edge::new(v, w);
        }
        self.edges.sort_unstable();
        self.edges.dedup();
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(EdgeList {
            edges: read_records(path)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_records(path, &self.edges)
    }
}

/// Write records to `path`, one line each.
pub fn write_records<'a, R, I>(path: &Path, records: I) -> Result<()>
where
    R: TextRecord + 'a,
    I: IntoIterator<Item = &'a R>,
{
    let file = File::create(path).at(path)?;
    let mut out = BufWriter::with_capacity(READ_BUF, file);
    let mut line = Vec::with_capacity(128);
    for rec in records {
        line.clear();
        rec.write_fields(&mut line);
        line.push(b'\n');
        out.write_all(&line).at(path)?;
    }
    out.flush().at(path)
}

/// Read every record of a file or dataset directory into memory.
pub fn read_records<R: TextRecord>(path: &Path) -> Result<Vec<R>> {
    let ds = Dataset::open(path)?;
    let mut out = Vec::new();
    for split in ds.splits(1)? {
        for rec in split.records::<R>()? {
            out.push(rec?);
        }
    }
    Ok(out)
}

/// Read an edge list and cut it into `split_count` record-balanced splits.
pub fn read_edges(path: &Path, split_count: usize) -> Result<Vec<Split>> {
    Dataset::file(path).splits(split_count)
}

/// Reject self-edges and duplicate undirected edges. Duplicates are found
/// with an out-of-core sort on the canonical endpoint pair. Returns the
/// number of edges.
pub fn validate_edges(splits: &[Split], engine: &Engine) -> Result<u64> {
    let tasks: Vec<Task<'_>> = splits
        .iter()
        .map(|split| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                let mut it = split.records::<Edge>()?;
                while let Some(e) = it.next() {
                    let e = e?;
                    ctx.count_input(1);
                    if e.v == e.w {
                        return Err(Error::SelfEdge {
                            path: it.path().to_path_buf(),
                            line: it.line(),
                            vertex: e.v,
                        });
                    }
                    ctx.emit(&e.canonical(), &(), &it.line())?;
                }
                Ok(())
            })
        })
        .collect();
    let reduce = |key: &[u8], values: &mut Values<'_>, _out: &mut Emit<'_, ()>| {
        let (v, w) = decode_all::<(u64, u64)>(key)?;
        let first = values.next_value::<(), u64>()?.map_or(0, |(_, l)| l);
        if let Some((_, second)) = values.next_value::<(), u64>()? {
            return Err(Error::DuplicateEdge {
                v,
                w,
                first_line: first.min(second),
                second_line: first.max(second),
            });
        }
        Ok(())
    };
    let (_, stats) = engine.run_collect("validate-edges", tasks, reduce)?;
    Ok(stats.input_records)
}

/// An ordered list of record files.
#[derive(Clone, Debug)]
pub struct Dataset {
    paths: Vec<PathBuf>,
}

impl Dataset {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        Dataset {
            paths: vec![path.into()],
        }
    }

    /// A single file, or every non-hidden file of a directory in name order.
    pub fn open(path: &Path) -> Result<Self> {
        let meta = fs::metadata(path).at(path)?;
        if !meta.is_dir() {
            return Ok(Dataset::file(path));
        }
        let mut paths = Vec::new();
        for entry in fs::read_dir(path).at(path)? {
            let entry = entry.at(path)?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with('.') || name.starts_with('_') {
                continue;
            }
            if entry.file_type().at(path)?.is_file() {
                paths.push(entry.path());
            }
        }
        paths.sort();
        Ok(Dataset { paths })
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    /// Cut the dataset into `count` splits whose record counts differ by at
    /// most one. Concatenating the splits in index order yields every record.
    pub fn splits(&self, count: usize) -> Result<Vec<Split>> {
        let count = count.max(1);
        let per_file: Vec<u64> = self
            .paths
            .iter()
            .map(|p| count_records(p))
            .collect::<Result<_>>()?;
        let total: u64 = per_file.iter().sum();
        let base = total / count as u64;
        let extra = total % count as u64;
        let sizes: Vec<u64> = (0..count as u64)
            .map(|i| base + u64::from(i < extra))
            .collect();

        // Walk the files once more, cutting at record boundaries.
        let mut splits = Vec::with_capacity(count);
        let mut file_idx = 0;
        let mut pos = Position::default();
        let mut cursor: Option<LineCursor> = None;
        for (index, &size) in sizes.iter().enumerate() {
            let mut split = Split {
                index,
                records: size,
                segments: Vec::new(),
            };
            let mut remaining = size;
            while remaining > 0 {
                if cursor.is_none() {
                    cursor = Some(LineCursor::open(&self.paths[file_idx])?);
                    pos = Position::default();
                }
                let cur = cursor.as_mut().unwrap();
                let start = pos;
                let left_in_file = per_file[file_idx] - cur.records_seen;
                let take = remaining.min(left_in_file);
                pos = cur.skip_records(take)?;
                split.segments.push(Segment {
                    path: self.paths[file_idx].clone(),
                    start: start.offset,
                    end: pos.offset,
                    first_line: start.line + 1,
                });
                remaining -= take;
                if cur.records_seen == per_file[file_idx] {
                    // Trailing comments/blank lines belong to the last segment.
                    let end = cur.file_len;
                    if let Some(seg) = split.segments.last_mut() {
                        seg.end = end;
                    }
                    cursor = None;
                    file_idx += 1;
                }
            }
            splits.push(split);
        }
        Ok(splits)
    }
}

#[derive(Clone, Copy, Default)]
struct Position {
    offset: u64,
    line: u64,
}

struct LineCursor {
    reader: BufReader<File>,
    path: PathBuf,
    buf: Vec<u8>,
    pos: Position,
    records_seen: u64,
    file_len: u64,
}

impl LineCursor {
    fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).at(path)?;
        let file_len = file.metadata().at(path)?.len();
        Ok(LineCursor {
            reader: BufReader::with_capacity(READ_BUF, file),
            path: path.to_path_buf(),
            buf: Vec::new(),
            pos: Position::default(),
            records_seen: 0,
            file_len,
        })
    }

    /// Advance past `n` data lines (and any skippable lines before them),
    /// returning the position just after the last one.
    fn skip_records(&mut self, n: u64) -> Result<Position> {
        let mut done = 0;
        while done < n {
            self.buf.clear();
            let read = self.reader.read_until(b'\n', &mut self.buf).at(&self.path)?;
            if read == 0 {
                break;
            }
            self.pos.offset += read as u64;
            self.pos.line += 1;
            if is_data_line(&self.buf) {
                done += 1;
                self.records_seen += 1;
            }
        }
        Ok(self.pos)
    }
}

fn count_records(path: &Path) -> Result<u64> {
    let mut file = File::open(path).at(path)?;
    let mut buf = vec![0u8; 1 << 20];
    let mut count = 0u64;
    // State for the line in progress: None = nothing seen yet, Some(true) = data.
    let mut line_kind: Option<bool> = None;
    loop {
        let n = file.read(&mut buf).at(path)?;
        if n == 0 {
            break;
        }
        for &b in &buf[..n] {
            if b == b'\n' {
                if line_kind == Some(true) {
                    count += 1;
                }
                line_kind = None;
            } else if line_kind.is_none() && !b.is_ascii_whitespace() {
                line_kind = Some(b != b'#' && b != b'%');
            }
        }
    }
    if line_kind == Some(true) {
        count += 1;
    }
    Ok(count)
}

#[derive(Clone, Debug)]
struct Segment {
    path: PathBuf,
    start: u64,
    end: u64,
    first_line: u64,
}

/// A contiguous, record-aligned slice of a dataset.
#[derive(Clone, Debug)]
pub struct Split {
    pub index: usize,
    pub records: u64,
    segments: Vec<Segment>,
}

impl Split {
    pub fn records<R: TextRecord>(&self) -> Result<SplitRecords<'_, R>> {
        Ok(SplitRecords {
            split: self,
            seg: 0,
            reader: None,
            line: 0,
            buf: Vec::with_capacity(128),
            _r: PhantomData,
        })
    }
}

/// Iterator over the parsed records of a split.
pub struct SplitRecords<'s, R> {
    split: &'s Split,
    seg: usize,
    reader: Option<std::io::Take<BufReader<File>>>,
    line: u64,
    buf: Vec<u8>,
    _r: PhantomData<R>,
}

impl<R> SplitRecords<'_, R> {
    /// Line number of the most recently returned record.
    pub fn line(&self) -> u64 {
        self.line
    }

    pub fn path(&self) -> &Path {
        let i = self.seg.min(self.split.segments.len().saturating_sub(1));
        &self.split.segments[i].path
    }

    fn open_segment(&mut self) -> Result<bool> {
        let Some(seg) = self.split.segments.get(self.seg) else {
            return Ok(false);
        };
        let mut file = File::open(&seg.path).at(&seg.path)?;
        file.seek(SeekFrom::Start(seg.start)).at(&seg.path)?;
        self.reader = Some(BufReader::with_capacity(READ_BUF, file).take(seg.end - seg.start));
        self.line = seg.first_line - 1;
        Ok(true)
    }
}

impl<R: TextRecord> Iterator for SplitRecords<'_, R> {
    type Item = Result<R>;

    fn next(&mut self) -> Option<Result<R>> {
        loop {
            if self.reader.is_none() {
                match self.open_segment() {
                    Ok(true) => {}
                    Ok(false) => return None,
                    Err(e) => return Some(Err(e)),
                }
            }
            let reader = self.reader.as_mut().unwrap();
            self.buf.clear();
            let seg = &self.split.segments[self.seg];
            let n = match reader.read_until(b'\n', &mut self.buf) {
                Ok(n) => n,
                Err(e) => return Some(Err(Error::io(&seg.path, e))),
            };
            if n == 0 {
                self.reader = None;
                self.seg += 1;
                continue;
            }
            self.line += 1;
            if !is_data_line(&self.buf) {
                continue;
            }
            return Some(
                R::parse_fields(&mut Fields::new(&self.buf)).map_err(|msg| Error::Parse {
                    path: seg.path.clone(),
                    line: self.line,
                    msg,
                }),
            );
        }
    }
}

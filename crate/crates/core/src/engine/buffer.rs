//! Map-side sort buffer and spill files.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::PathBuf;

use crate::error::{IoContext, Result};

#[derive(Clone, Copy, Debug)]
struct Entry {
    off: usize,
    part: u32,
    klen: u32,
    slen: u32,
    vlen: u32,
}

/// Arena of emitted records, sorted by `(partition, key, secondary)` before
/// it leaves the mapper. Sorting is stable so emission order breaks ties.
#[derive(Default)]
pub(crate) struct SortBuffer {
    data: Vec<u8>,
    entries: Vec<Entry>,
}

impl SortBuffer {
    pub fn push(&mut self, part: u32, key: &[u8], sec: &[u8], val: &[u8]) {
        let off = self.data.len();
        self.data.extend_from_slice(key);
        self.data.extend_from_slice(sec);
        self.data.extend_from_slice(val);
        self.entries.push(Entry {
            off,
            part,
            klen: key.len() as u32,
            slen: sec.len() as u32,
            vlen: val.len() as u32,
        });
    }

    /// Approximate heap footprint.
    pub fn bytes(&self) -> usize {
        self.data.len() + self.entries.len() * std::mem::size_of::<Entry>()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn key(&self, e: &Entry) -> &[u8] {
        &self.data[e.off..e.off + e.klen as usize]
    }

    fn sec(&self, e: &Entry) -> &[u8] {
        let s = e.off + e.klen as usize;
        &self.data[s..s + e.slen as usize]
    }

    fn val(&self, e: &Entry) -> &[u8] {
        let s = e.off + e.klen as usize + e.slen as usize;
        &self.data[s..s + e.vlen as usize]
    }

    fn sort(&mut self) {
        let mut entries = std::mem::take(&mut self.entries);
        entries.sort_by(|a, b| {
            a.part
                .cmp(&b.part)
                .then_with(|| self.key(a).cmp(self.key(b)))
                .then_with(|| self.sec(a).cmp(self.sec(b)))
        });
        self.entries = entries;
    }

    fn part_ranges(&self, partitions: usize) -> Vec<Range<usize>> {
        let mut ranges = Vec::with_capacity(partitions);
        let mut start = 0;
        for p in 0..partitions as u32 {
            let end = start + self.entries[start..].partition_point(|e| e.part <= p);
            ranges.push(start..end);
            start = end;
        }
        ranges
    }

    /// Sort and freeze into an in-memory run.
    pub fn into_run(mut self, partitions: usize) -> MemRun {
        self.sort();
        self.data.shrink_to_fit();
        self.entries.shrink_to_fit();
        let ranges = self.part_ranges(partitions);
        MemRun { buf: self, ranges }
    }

    /// Sort, write to `path`, and clear the buffer.
    pub fn spill(&mut self, path: PathBuf, partitions: usize) -> Result<SpillRun> {
        self.sort();
        let ranges = self.part_ranges(partitions);
        let file = File::create(&path).at(&path)?;
        let mut out = BufWriter::with_capacity(1 << 18, file);
        let mut pos = 0u64;
        let mut segments = Vec::with_capacity(partitions);
        for range in ranges {
            let start = pos;
            for e in &self.entries[range] {
                out.write_all(&e.klen.to_le_bytes()).at(&path)?;
                out.write_all(&e.slen.to_le_bytes()).at(&path)?;
                out.write_all(&e.vlen.to_le_bytes()).at(&path)?;
                let len = e.klen as usize + e.slen as usize + e.vlen as usize;
                out.write_all(&self.data[e.off..e.off + len]).at(&path)?;
                pos += 12 + len as u64;
            }
            segments.push((start, pos));
        }
        out.flush().at(&path)?;
        self.data.clear();
        self.entries.clear();
        Ok(SpillRun {
            path,
            segments,
            bytes: pos,
        })
    }
}

pub(crate) struct MemRun {
    buf: SortBuffer,
    ranges: Vec<Range<usize>>,
}

impl MemRun {
    pub fn range(&self, part: usize) -> Range<usize> {
        self.ranges[part].clone()
    }

    pub fn record(&self, i: usize) -> (&[u8], &[u8], &[u8]) {
        let e = &self.buf.entries[i];
        (self.buf.key(e), self.buf.sec(e), self.buf.val(e))
    }
}

pub(crate) struct SpillRun {
    pub path: PathBuf,
    pub segments: Vec<(u64, u64)>,
    pub bytes: u64,
}

pub(crate) enum Run {
    Memory(MemRun),
    Spilled(SpillRun),
}

pub(crate) fn compare_records(a: (&[u8], &[u8]), b: (&[u8], &[u8])) -> Ordering {
    a.0.cmp(b.0).then_with(|| a.1.cmp(b.1))
}

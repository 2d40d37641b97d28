//! K-way merge of sorted runs for one partition.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom, Take};

use super::buffer::{compare_records, MemRun, Run};
use crate::error::{Error, IoContext, Result};

pub(crate) enum Cursor<'a> {
    Mem {
        run: &'a MemRun,
        next: usize,
        end: usize,
        cur: usize,
    },
    Spill(SpillCursor),
}

pub(crate) struct SpillCursor {
    reader: Take<BufReader<File>>,
    buf: Vec<u8>,
    klen: usize,
    slen: usize,
}

impl SpillCursor {
    /// Load the next record; false at end of segment.
    fn load(&mut self) -> Result<bool> {
        let mut header = [0u8; 12];
        match self.reader.read_exact(&mut header) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(false),
            Err(e) => return Err(Error::Corrupt(format!("spill read: {e}"))),
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
        self.klen = word(0);
        self.slen = word(4);
        let len = self.klen + self.slen + word(8);
        self.buf.resize(len, 0);
        self.reader
            .read_exact(&mut self.buf)
            .map_err(|e| Error::Corrupt(format!("spill read: {e}")))?;
        Ok(true)
    }
}

impl<'a> Cursor<'a> {
    /// Cursor positioned on the first record of `part`, or `None` if empty.
    pub fn open(run: &'a Run, part: usize) -> Result<Option<Self>> {
        match run {
            Run::Memory(m) => {
                let r = m.range(part);
                if r.is_empty() {
                    return Ok(None);
                }
                Ok(Some(Cursor::Mem {
                    run: m,
                    next: r.start + 1,
                    end: r.end,
                    cur: r.start,
                }))
            }
            Run::Spilled(s) => {
                let (start, end) = s.segments[part];
                if start == end {
                    return Ok(None);
                }
                let mut file = File::open(&s.path).at(&s.path)?;
                file.seek(SeekFrom::Start(start)).at(&s.path)?;
                let mut c = SpillCursor {
                    reader: BufReader::with_capacity(1 << 16, file).take(end - start),
                    buf: Vec::new(),
                    klen: 0,
                    slen: 0,
                };
                if !c.load()? {
                    return Ok(None);
                }
                Ok(Some(Cursor::Spill(c)))
            }
        }
    }

    #[inline]
    pub fn record(&self) -> (&[u8], &[u8], &[u8]) {
        match self {
            Cursor::Mem { run, cur, .. } => run.record(*cur),
            Cursor::Spill(c) => {
                let (k, rest) = c.buf.split_at(c.klen);
                let (s, v) = rest.split_at(c.slen);
                (k, s, v)
            }
        }
    }

    /// Move to the next record; false when exhausted.
    fn advance(&mut self) -> Result<bool> {
        match self {
            Cursor::Mem { next, end, cur, .. } => {
                if *next >= *end {
                    return Ok(false);
                }
                *cur = *next;
                *next += 1;
                Ok(true)
            }
            Cursor::Spill(c) => c.load(),
        }
    }
}

/// Min-heap of cursors ordered by `(key, secondary, run ordinal)`.
pub(crate) struct Merger<'a> {
    cursors: Vec<Cursor<'a>>,
    ordinals: Vec<usize>,
    heap: Vec<usize>,
}

impl<'a> Merger<'a> {
    /// `cursors` must be in run-ordinal order.
    pub fn new(cursors: Vec<(usize, Cursor<'a>)>) -> Self {
        let (ordinals, cursors): (Vec<_>, Vec<_>) = cursors.into_iter().unzip();
        let mut m = Merger {
            heap: (0..cursors.len()).collect(),
            cursors,
            ordinals,
        };
        for i in (0..m.heap.len() / 2).rev() {
            m.sift_down(i);
        }
        m
    }

    fn less(&self, a: usize, b: usize) -> bool {
        let (ka, sa, _) = self.cursors[a].record();
        let (kb, sb, _) = self.cursors[b].record();
        match compare_records((ka, sa), (kb, sb)) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.ordinals[a] < self.ordinals[b],
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                return;
            }
            let r = l + 1;
            let mut c = l;
            if r < n && self.less(self.heap[r], self.heap[l]) {
                c = r;
            }
            if self.less(self.heap[c], self.heap[i]) {
                self.heap.swap(c, i);
                i = c;
            } else {
                return;
            }
        }
    }

    #[inline]
    pub fn peek(&self) -> Option<(&[u8], &[u8], &[u8])> {
        self.heap.first().map(|&i| self.cursors[i].record())
    }

    /// Drop the current minimum and move to the next record.
    pub fn advance(&mut self) -> Result<()> {
        let Some(&top) = self.heap.first() else {
            return Ok(());
        };
        if !self.cursors[top].advance()? {
            let last = self.heap.pop().unwrap();
            if self.heap.is_empty() {
                return Ok(());
            }
            self.heap[0] = last;
        }
        self.sift_down(0);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::buffer::SortBuffer;

    #[test]
    fn merges_memory_and_spilled_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = SortBuffer::default();
        for (k, v) in [(3u8, 0u8), (1, 1), (2, 2)] {
            a.push(0, &[k], b"", &[v]);
        }
        let spilled = a.spill(dir.path().join("s0"), 1).unwrap();
        let mut b = SortBuffer::default();
        for (k, v) in [(2u8, 10u8), (4, 11), (1, 12)] {
            b.push(0, &[k], b"", &[v]);
        }
        let runs = [Run::Spilled(spilled), Run::Memory(b.into_run(1))];
        let cursors = runs
            .iter()
            .enumerate()
            .filter_map(|(i, r)| Cursor::open(r, 0).unwrap().map(|c| (i, c)))
            .collect();
        let mut m = Merger::new(cursors);
        let mut got = Vec::new();
        while let Some((k, _, v)) = m.peek() {
            got.push((k[0], v[0]));
            m.advance().unwrap();
        }
        assert_eq!(got, vec![(1, 1), (1, 12), (2, 2), (2, 10), (3, 0), (4, 11)]);
    }
}

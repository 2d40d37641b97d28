//! A local map-shuffle-reduce engine.
//!
//! A job runs one mapper per [`Task`]. Mappers emit `(key, secondary, value)`
//! byte records into a sort buffer that spills sorted runs to disk once it
//! passes `spill_threshold`. Records are partitioned by a hash of the key;
//! each reducer merges its partition of every run and sees one key group at a
//! time, with values ordered by secondary key. Ties are broken by run order
//! (task index, then spill index) and emission order within a run, so output
//! does not depend on how many threads execute the tasks.

mod buffer;
mod codec;
mod merge;
mod par;
mod rng;
mod stats;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand_chacha::ChaCha8Rng;

pub use codec::{decode_all, describe_key, encode_to_vec, Decode, Encode};
pub use rng::{derive_rng, fmix64, keyed_u64, name_id, unit_f64};
pub use stats::{JobStats, ShuffleStats};

use buffer::{Run, SortBuffer, SpillRun};
use merge::{Cursor, Merger};

use crate::error::{Error, IoContext, Result};
use crate::graph_io::TextRecord;

/// How mappers and reducers are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub enum Parallelism {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Rayon,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub reducers: usize,
    /// Mapper buffer size (bytes) that triggers a spill.
    pub spill_threshold: usize,
    /// Total bytes of final mapper buffers kept in memory instead of spilled.
    pub memory_limit: usize,
    /// Maximum bytes a reducer may read for one key.
    pub reducer_budget: Option<u64>,
    pub parallelism: Parallelism,
    /// Parent directory for spill files; the system temp dir if `None`.
    pub spill_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            reducers: 8,
            spill_threshold: 64 << 20,
            memory_limit: 256 << 20,
            reducer_budget: None,
            parallelism: Parallelism::default(),
            spill_dir: None,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn with_spill_dir(dir: impl Into<PathBuf>) -> Self {
        EngineConfig {
            spill_dir: Some(dir.into()),
            ..EngineConfig::default()
        }
    }
}

type MapFn<'a> = Box<dyn FnOnce(&mut MapContext<'_>) -> Result<()> + Send + 'a>;

/// One mapper invocation, usually over one input split.
pub struct Task<'a>(MapFn<'a>);

impl<'a> Task<'a> {
    pub fn new<F>(f: F) -> Self
    where
        F: FnOnce(&mut MapContext<'_>) -> Result<()> + Send + 'a,
    {
        Task(Box::new(f))
    }
}

/// Mapper-side handle for emitting records.
pub struct MapContext<'a> {
    job: &'a str,
    task: usize,
    seed: u64,
    reducers: usize,
    spill_threshold: usize,
    spill_dir: &'a Path,
    buffer: SortBuffer,
    spills: Vec<SpillRun>,
    rng: Option<ChaCha8Rng>,
    records: u64,
    bytes: u64,
    input_records: u64,
    counters: BTreeMap<String, u64>,
    scratch: [Vec<u8>; 3],
}

impl MapContext<'_> {
    pub fn task_index(&self) -> usize {
        self.task
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream `derive_rng(seed, job, task)`.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        let (seed, job, task) = (self.seed, self.job, self.task as u64);
        self.rng.get_or_insert_with(|| derive_rng(seed, job, task))
    }

    pub fn count_input(&mut self, n: u64) {
        self.input_records += n;
    }

    pub fn counter(&mut self, name: &str, delta: u64) {
        add_counter(&mut self.counters, name, delta);
    }

    pub fn emit<K, S, V>(&mut self, key: &K, sec: &S, value: &V) -> Result<()>
    where
        K: Encode + ?Sized,
        S: Encode + ?Sized,
        V: Encode + ?Sized,
    {
        let [k, s, v] = &mut self.scratch;
        k.clear();
        s.clear();
        v.clear();
        key.encode(k);
        sec.encode(s);
        value.encode(v);
        let scratch = std::mem::take(&mut self.scratch);
        let r = self.emit_raw(&scratch[0], &scratch[1], &scratch[2]);
        self.scratch = scratch;
        r
    }

    pub fn emit_raw(&mut self, key: &[u8], sec: &[u8], value: &[u8]) -> Result<()> {
        let part = partition(key, self.reducers);
        self.buffer.push(part, key, sec, value);
        self.records += 1;
        self.bytes += (key.len() + sec.len() + value.len()) as u64;
        if self.buffer.bytes() >= self.spill_threshold {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> Result<()> {
        let path = self
            .spill_dir
            .join(format!("map-{:05}-{:04}", self.task, self.spills.len()));
        let run = self.buffer.spill(path, self.reducers)?;
        self.spills.push(run);
        Ok(())
    }
}

fn add_counter(counters: &mut BTreeMap<String, u64>, name: &str, delta: u64) {
    match counters.get_mut(name) {
        Some(c) => *c += delta,
        None => {
            counters.insert(name.to_string(), delta);
        }
    }
}

/// Reducer partition of a key.
pub fn partition(key: &[u8], reducers: usize) -> u32 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in key {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    (fmix64(h) % reducers as u64) as u32
}

trait RecordSource {
    fn peek(&self) -> Option<(&[u8], &[u8], &[u8])>;
    fn advance(&mut self) -> Result<()>;
}

impl RecordSource for Merger<'_> {
    fn peek(&self) -> Option<(&[u8], &[u8], &[u8])> {
        Merger::peek(self)
    }

    fn advance(&mut self) -> Result<()> {
        Merger::advance(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum GroupState {
    Fresh,
    Delivered,
    Done,
}

/// The values of one key group, in secondary-key order.
pub struct Values<'m> {
    merger: &'m mut (dyn RecordSource + 'm),
    key: &'m [u8],
    state: GroupState,
    read: u64,
    budget: Option<u64>,
}

impl Values<'_> {
    pub fn key(&self) -> &[u8] {
        self.key
    }

    fn step(&mut self) -> Result<bool> {
        match self.state {
            GroupState::Done => return Ok(false),
            GroupState::Delivered => self.merger.advance()?,
            GroupState::Fresh => {}
        }
        match self.merger.peek() {
            Some((k, _, _)) if k == self.key => {
                self.state = GroupState::Delivered;
                Ok(true)
            }
            _ => {
                self.state = GroupState::Done;
                Ok(false)
            }
        }
    }

    /// Next `(secondary, value)` as raw bytes.
    pub fn next_raw(&mut self) -> Result<Option<(&[u8], &[u8])>> {
        if !self.step()? {
            return Ok(None);
        }
        let (_, s, v) = self.merger.peek().expect("positioned on a record");
        self.read += (s.len() + v.len()) as u64;
        if let Some(budget) = self.budget {
            if self.read > budget {
                return Err(Error::ReducerBudget {
                    key: describe_key(self.key),
                    budget,
                });
            }
        }
        Ok(Some((s, v)))
    }

    pub fn next_value<S: Decode, V: Decode>(&mut self) -> Result<Option<(S, V)>> {
        match self.next_raw()? {
            None => Ok(None),
            Some((s, v)) => Ok(Some((decode_all(s)?, decode_all(v)?))),
        }
    }

    fn drain(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }
}

/// Reducer-side handle for writing output records.
pub struct Emit<'a, O> {
    writer: &'a mut dyn PartWriter<O>,
    written: u64,
    counters: &'a mut BTreeMap<String, u64>,
}

impl<O> Emit<'_, O> {
    pub fn emit(&mut self, record: O) -> Result<()> {
        self.written += 1;
        self.writer.write(record)
    }

    pub fn counter(&mut self, name: &str, delta: u64) {
        add_counter(self.counters, name, delta);
    }
}

/// Destination of a job's reducer output, one writer per partition.
pub trait Output<O>: Sync {
    fn part(&self, index: usize) -> Result<Box<dyn PartWriter<O> + '_>>;
}

pub trait PartWriter<O> {
    fn write(&mut self, record: O) -> Result<()>;
    fn close(&mut self) -> Result<()>;
}

/// Collects output in memory, in partition order.
pub struct MemoryOutput<O> {
    parts: Mutex<BTreeMap<usize, Vec<O>>>,
}

impl<O> Default for MemoryOutput<O> {
    fn default() -> Self {
        MemoryOutput {
            parts: Mutex::new(BTreeMap::new()),
        }
    }
}

impl<O> MemoryOutput<O> {
    pub fn into_records(self) -> Vec<O> {
        let parts = self.parts.into_inner().unwrap_or_else(|e| e.into_inner());
        parts.into_values().flatten().collect()
    }
}

struct MemoryPart<'a, O> {
    out: &'a MemoryOutput<O>,
    index: usize,
    records: Vec<O>,
}

impl<O: Send> Output<O> for MemoryOutput<O> {
    fn part(&self, index: usize) -> Result<Box<dyn PartWriter<O> + '_>> {
        Ok(Box::new(MemoryPart {
            out: self,
            index,
            records: Vec::new(),
        }))
    }
}

impl<O> PartWriter<O> for MemoryPart<'_, O> {
    fn write(&mut self, record: O) -> Result<()> {
        self.records.push(record);
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        let records = std::mem::take(&mut self.records);
        let mut parts = self.out.parts.lock().unwrap_or_else(|e| e.into_inner());
        parts.insert(self.index, records);
        Ok(())
    }
}

/// Writes `part-r-NNNNN` text files into a directory.
pub struct TextOutput<O> {
    dir: PathBuf,
    _o: PhantomData<fn(O)>,
}

impl<O> TextOutput<O> {
    /// Replace `dir` with an empty directory.
    pub fn create(dir: &Path) -> Result<Self> {
        if dir.exists() {
            fs::remove_dir_all(dir).at(dir)?;
        }
        fs::create_dir_all(dir).at(dir)?;
        Ok(TextOutput {
            dir: dir.to_path_buf(),
            _o: PhantomData,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn part_file_name(index: usize) -> String {
    format!("part-r-{index:05}")
}

struct TextPart<O> {
    path: PathBuf,
    out: BufWriter<File>,
    line: Vec<u8>,
    _o: PhantomData<fn(O)>,
}

impl<O: TextRecord> Output<O> for TextOutput<O> {
    fn part(&self, index: usize) -> Result<Box<dyn PartWriter<O> + '_>> {
        let path = self.dir.join(part_file_name(index));
        let file = File::create(&path).at(&path)?;
        Ok(Box::new(TextPart {
            path,
            out: BufWriter::with_capacity(1 << 17, file),
            line: Vec::with_capacity(128),
            _o: PhantomData,
        }))
    }
}

impl<O: TextRecord> PartWriter<O> for TextPart<O> {
    fn write(&mut self, record: O) -> Result<()> {
        self.line.clear();
        record.write_fields(&mut self.line);
        self.line.push(b'\n');
        self.out.write_all(&self.line).at(&self.path)
    }

    fn close(&mut self) -> Result<()> {
        self.out.flush().at(&self.path)
    }
}

struct MapResult {
    runs: Vec<Run>,
    records: u64,
    bytes: u64,
    input_records: u64,
    spilled_runs: u64,
    spilled_bytes: u64,
    counters: BTreeMap<String, u64>,
}

struct ReduceResult {
    groups: u64,
    written: u64,
    counters: BTreeMap<String, u64>,
}

pub struct Engine {
    config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Engine { config }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Run a job, writing reducer output to `output`.
    pub fn run_job<O, R>(
        &self,
        name: &str,
        tasks: Vec<Task<'_>>,
        reduce: R,
        output: &dyn Output<O>,
    ) -> Result<JobStats>
    where
        R: Fn(&[u8], &mut Values<'_>, &mut Emit<'_, O>) -> Result<()> + Sync + Send,
    {
        let cfg = &self.config;
        if cfg.reducers == 0 {
            return Err(Error::Config("reducer count must be positive".into()));
        }
        let spill_root = match &cfg.spill_dir {
            Some(dir) => {
                fs::create_dir_all(dir).at(dir)?;
                tempfile::Builder::new().prefix("spill-").tempdir_in(dir)
            }
            None => tempfile::Builder::new().prefix("wedgetri-spill-").tempdir(),
        }
        .map_err(|e| Error::io(cfg.spill_dir.clone().unwrap_or_else(std::env::temp_dir), e))?;
        let spill_dir = spill_root.path();
        let num_tasks = tasks.len();
        let keep_limit = cfg.memory_limit / num_tasks.max(1);

        log::debug!("job {name}: {num_tasks} map tasks, {} reducers", cfg.reducers);
        let mapped = par::map_indexed(cfg.parallelism, tasks, |index, task| {
            let mut ctx = MapContext {
                job: name,
                task: index,
                seed: cfg.seed,
                reducers: cfg.reducers,
                spill_threshold: cfg.spill_threshold.max(1),
                spill_dir,
                buffer: SortBuffer::default(),
                spills: Vec::new(),
                rng: None,
                records: 0,
                bytes: 0,
                input_records: 0,
                counters: BTreeMap::new(),
                scratch: Default::default(),
            };
            (task.0)(&mut ctx)?;
            if !ctx.buffer.is_empty() && ctx.buffer.bytes() > keep_limit {
                ctx.spill()?;
            }
            let spilled_runs = ctx.spills.len() as u64;
            let spilled_bytes = ctx.spills.iter().map(|s| s.bytes).sum();
            let mut runs: Vec<Run> = ctx.spills.drain(..).map(Run::Spilled).collect();
            if !ctx.buffer.is_empty() {
                runs.push(Run::Memory(
                    std::mem::take(&mut ctx.buffer).into_run(cfg.reducers),
                ));
            }
            Ok(MapResult {
                runs,
                records: ctx.records,
                bytes: ctx.bytes,
                input_records: ctx.input_records,
                spilled_runs,
                spilled_bytes,
                counters: ctx.counters,
            })
        });
        let mapped: Vec<MapResult> = mapped.into_iter().collect::<Result<_>>()?;

        let mut stats = JobStats {
            job: name.to_string(),
            map_tasks: num_tasks as u64,
            reducers: cfg.reducers as u64,
            ..JobStats::default()
        };
        for m in &mapped {
            stats.input_records += m.input_records;
            stats.records_emitted += m.records;
            stats.bytes_emitted += m.bytes;
            stats.spilled_runs += m.spilled_runs;
            stats.spilled_bytes += m.spilled_bytes;
            stats.add_counters(&m.counters);
        }
        let runs: Vec<&Run> = mapped.iter().flat_map(|m| m.runs.iter()).collect();

        let parts: Vec<usize> = (0..cfg.reducers).collect();
        let reduced = par::map_indexed(cfg.parallelism, parts, |_, part| {
            self.reduce_partition(part, &runs, &reduce, output)
        });
        for r in reduced {
            let r = r?;
            stats.key_groups += r.groups;
            stats.output_records += r.written;
            stats.add_counters(&r.counters);
        }
        drop(runs);
        drop(mapped);
        let root_path = spill_dir.to_path_buf();
        spill_root.close().map_err(|e| Error::io(root_path, e))?;
        log::debug!(
            "job {name}: {} records emitted, {} key groups, {} output records",
            stats.records_emitted,
            stats.key_groups,
            stats.output_records
        );
        Ok(stats)
    }

    fn reduce_partition<O, R>(
        &self,
        part: usize,
        runs: &[&Run],
        reduce: &R,
        output: &dyn Output<O>,
    ) -> Result<ReduceResult>
    where
        R: Fn(&[u8], &mut Values<'_>, &mut Emit<'_, O>) -> Result<()>,
    {
        let mut cursors = Vec::new();
        for (ordinal, run) in runs.iter().enumerate() {
            if let Some(c) = Cursor::open(run, part)? {
                cursors.push((ordinal, c));
            }
        }
        let mut merger = Merger::new(cursors);
        let mut writer = output.part(part)?;
        let mut counters = BTreeMap::new();
        let mut key = Vec::new();
        let mut groups = 0;
        let mut written = 0;
        while let Some((k, _, _)) = merger.peek() {
            key.clear();
            key.extend_from_slice(k);
            groups += 1;
            let mut values = Values {
                merger: &mut merger,
                key: &key,
                state: GroupState::Fresh,
                read: 0,
                budget: self.config.reducer_budget,
            };
            let mut emit = Emit {
                writer: &mut *writer,
                written: 0,
                counters: &mut counters,
            };
            reduce(&key, &mut values, &mut emit)?;
            written += emit.written;
            values.drain()?;
        }
        writer.close()?;
        Ok(ReduceResult {
            groups,
            written,
            counters,
        })
    }

    /// Run a job and return its output records in partition order.
    pub fn run_collect<O, R>(
        &self,
        name: &str,
        tasks: Vec<Task<'_>>,
        reduce: R,
    ) -> Result<(Vec<O>, JobStats)>
    where
        O: Send,
        R: Fn(&[u8], &mut Values<'_>, &mut Emit<'_, O>) -> Result<()> + Sync + Send,
    {
        let out = MemoryOutput::default();
        let stats = self.run_job(name, tasks, reduce, &out)?;
        Ok((out.into_records(), stats))
    }

    /// Run a job writing text part files into `dir`.
    pub fn run_to_dir<O, R>(
        &self,
        name: &str,
        tasks: Vec<Task<'_>>,
        reduce: R,
        dir: &Path,
    ) -> Result<JobStats>
    where
        O: TextRecord,
        R: Fn(&[u8], &mut Values<'_>, &mut Emit<'_, O>) -> Result<()> + Sync + Send,
    {
        let out = TextOutput::create(dir)?;
        self.run_job(name, tasks, reduce, &out)
    }
}

use std::collections::BTreeMap;

use serde::Serialize;

/// Exact record and byte counts for one job.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct JobStats {
    pub job: String,
    pub map_tasks: u64,
    pub reducers: u64,
    pub input_records: u64,
    pub records_emitted: u64,
    pub bytes_emitted: u64,
    pub key_groups: u64,
    pub output_records: u64,
    pub spilled_runs: u64,
    pub spilled_bytes: u64,
    pub counters: BTreeMap<String, u64>,
}

impl JobStats {
    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }

    pub(crate) fn add_counters(&mut self, other: &BTreeMap<String, u64>) {
        for (k, v) in other {
            *self.counters.entry(k.clone()).or_insert(0) += v;
        }
    }
}

/// Per-job stats of a multi-job run plus totals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ShuffleStats {
    pub records_emitted: u64,
    pub bytes_emitted: u64,
    pub jobs: Vec<JobStats>,
}

impl ShuffleStats {
    pub fn push(&mut self, job: JobStats) {
        self.records_emitted += job.records_emitted;
        self.bytes_emitted += job.bytes_emitted;
        self.jobs.push(job);
    }

    pub fn job(&self, name: &str) -> Option<&JobStats> {
        self.jobs.iter().find(|j| j.job == name)
    }
}

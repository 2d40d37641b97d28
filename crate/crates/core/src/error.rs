use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{}:{line}: self-edge on vertex {vertex}", path.display())]
    SelfEdge {
        path: PathBuf,
        line: u64,
        vertex: u64,
    },

    #[error("duplicate edge {{{v}, {w}}} at lines {first_line} and {second_line}")]
    DuplicateEdge {
        v: u64,
        w: u64,
        first_line: u64,
        second_line: u64,
    },

    #[error("degree-zero vertices have no bin")]
    ZeroDegree,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reducer memory budget of {budget} bytes exceeded at key {key}")]
    ReducerBudget { key: String, budget: u64 },

    #[error("corrupt intermediate record: {0}")]
    Corrupt(String),

    #[error("wedges-per-bin table has no entry for bin {bin}")]
    MissingBin { bin: u64 },

    #[error(
        "vertex {vertex}: sampling needs {needed} incident edges but only {received} survived \
         filtering; rerun with a different seed"
    )]
    UnderDelivery {
        vertex: u64,
        needed: u64,
        received: u64,
    },

    #[error("vertex {vertex} is referenced by a wedge but has no degree record")]
    MissingDegree { vertex: u64 },

    #[error("no wedges: every vertex has degree at most 1")]
    NoWedges,

    #[error("bin has no sampled wedges")]
    EmptyBin,

    #[error(
        "graph has {edges} edges, above the exact-oracle limit of {limit}; use sampling instead"
    )]
    OracleLimit { edges: u64, limit: u64 },

    #[error("triangle statistics need a single-bin run, but degrees {a} and {b} fall in different bins")]
    MultiBin { a: u64, b: u64 },

    #[error("phase {phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_phase(self, phase: &'static str) -> Self {
        match self {
            e @ Error::Phase { .. } => e,
            e => Error::Phase {
                phase,
                source: Box::new(e),
            },
        }
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}

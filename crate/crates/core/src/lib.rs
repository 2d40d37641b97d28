pub mod binning;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod generator;
pub mod graph_io;
pub mod oracle;
pub mod pipeline;
pub mod tri_stats;

pub use binning::{BinConfig, BinId};
pub use error::{Error, Result};

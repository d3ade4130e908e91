//! Std companion to `bregpart-core`: dataset ingestion, the paged point
//! store, single-file index serialization, the end-to-end search engine,
//! and the benchmark harness behind the `bregpart` binary.

pub mod bench;
pub mod dataio;
pub mod engine;
pub mod error;
pub mod format;
pub mod store;

pub use engine::{Index, Partitions, ResultItem, SearchConfig, SearchReport};
pub use error::{Error, Result};

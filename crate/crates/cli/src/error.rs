use std::path::PathBuf;

use bregpart_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: not an index file (expected \"BBF1\")")]
    BadMagic,

    #[error("index version mismatch: file has {found}, this build reads {expected}")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("truncated index file: needed {needed} bytes at offset {offset}")]
    Truncated { offset: u64, needed: u64 },

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("unresolvable point address: page {page} slot {slot}")]
    BadAddress { page: u64, slot: u64 },

    #[error("inconsistent dimension in {path}: record {record} has d={found}, expected {expected}")]
    InconsistentDims { path: PathBuf, record: usize, found: usize, expected: usize },

    #[error("short read in {path}: truncated record at byte offset {offset}")]
    ShortRead { path: PathBuf, offset: u64 },

    #[error("ragged row at line {line} in {path}: {found} fields, expected {expected}")]
    RaggedRow { path: PathBuf, line: usize, found: usize, expected: usize },

    #[error("non-numeric cell at line {line}, column {column} in {path}: {cell:?}")]
    BadCell { path: PathBuf, line: usize, column: usize, cell: String },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

//! Network coding based secure storage over GF(2^k).
//!
//! A message is cut into field elements, multiplied block by block with a
//! Vandermonde matrix, and the coded digits are spread over several cloud
//! backends so that no single cloud holds enough to make guessing the rest
//! likely. A small local share and a manifest complete the picture.

pub mod adversary;
pub mod bench;
pub mod cli;
pub mod codec;
pub mod gf;
pub mod optimizer;
pub mod pipeline;
pub mod planner;
pub mod storage;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] gf::GfError),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
    #[error(transparent)]
    Plan(#[from] planner::PlanError),
    #[error(transparent)]
    Optimizer(#[from] optimizer::OptError),
    #[error(transparent)]
    Storage(#[from] storage::StorageError),
    #[error(transparent)]
    Adversary(#[from] adversary::AdversaryError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

//! Synthetic data, loaders and benchmark suites for biodb.

pub mod configs;
pub mod fasta;
pub mod fuzz;
pub mod generator;
pub mod report;
pub mod schema;
pub mod sequoia;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error(transparent)]
    Store(#[from] biodb::store::StoreError),
    #[error(transparent)]
    Query(#[from] biodb::query::QueryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Two interchangeable in-process backends with identical semantics, the
//! builtin operator library and the least-squares learner.

mod bench;
mod dataset;
mod engine;
mod ols;
mod ops;
mod run;

pub use bench::{bench_stats, linear_fit, pushdown_peaks, run_benchmark, BenchConfig, BenchReport, LinearFit, Measurement, BENCH_SELECTIVITY};
pub use dataset::{InMemoryDataset, ModelArtifact, Partitioning, Port, LEAST_SQUARES};
pub use engine::{execute, execute_with, repartition, Backend, ExecOutput, NodeRun, SinkOutput};
pub use ols::{fit, rmse, RIDGE};
pub use run::{run, RunOptions, RunResult};

use crate::catalog::CatalogError;
use crate::model::DataflowError;
use crate::provenance::ProvenanceError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("MissingInput: {0}")]
    MissingInput(String),
    #[error("FunctionFailure: {node}: {cause}")]
    FunctionFailure { node: String, cause: String },
    #[error("SchemaViolation: {node}: {message}")]
    SchemaViolation { node: String, message: String },
    #[error("InfeasibleAssignment: {0}")]
    InfeasibleAssignment(String),
    #[error("ExecutionIo: {0}")]
    Io(String),
    #[error(transparent)]
    Graph(#[from] DataflowError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
}

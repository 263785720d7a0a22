//! Rank-based rewriting of concrete dataflows and cardinality estimation.

mod annotate;
mod cardinality;
mod rewrite;
#[cfg(test)]
mod tests;

pub use annotate::{annotate, annotate_with, rank, CatalogStats, FixedStats, RewriteAnnotation, StatsProvider, MIN_COST};
pub use cardinality::{estimate_cardinalities, CardinalityEstimate};
pub use rewrite::{replay, rewrite, rewrite_configured, rewrite_with, RewriteOptions, RewriteRule, RewriteStep, RewriteTrace};

use crate::model::{DataflowError, ValidationReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("InvalidGraph: {0}")]
    InvalidGraph(ValidationReport),
    #[error("MissingSourceSize: {0}")]
    MissingSourceSize(String),
    #[error("InvalidGraph: {0}")]
    Dataflow(#[from] DataflowError),
    #[error("InvalidTrace: {0}")]
    Replay(String),
}

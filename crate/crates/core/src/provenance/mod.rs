//! Retrospective provenance: run records, operator and training traces,
//! links from produced artifacts to their inputs, derived operator
//! statistics and PROV-style export.

mod capture;
mod export;
mod record;
mod stats;

pub(crate) use capture::upstream_closure;
#[cfg(test)]
mod tests;

pub use capture::record_run;
pub use export::{export_prov, lineage, ProvDocument, ENGINE_AGENT};
pub use record::{ActivityKind, EpochMetric, OperatorTrace, ProvenanceEvent, ProvenanceLink, RunRecord, RunStatus, TrainingTrace};
pub use stats::{derive_stats, stable_sum, OperatorStats, StatsDefaults};

use crate::catalog::CatalogError;
use crate::model::Gid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProvenanceError {
    #[error("UnknownDataflow: {0}")]
    UnknownDataflow(Gid),
    #[error("UnknownNode: {0}")]
    UnknownNode(String),
    #[error("UnknownGid: {0}")]
    UnknownGid(Gid),
    #[error("InvalidRun: {0}")]
    InvalidRun(String),
    #[error("InvalidTrace: {0}")]
    InvalidTrace(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

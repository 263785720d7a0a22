//! Fragmentation of concrete dataflows, cost-based platform assignment and
//! materialization into dependent jobs.

mod assign;
mod fragment;
mod plan;
#[cfg(test)]
mod tests;

pub use assign::{assign, Assignment, CostBreakdown, CostInputs, CostModel, Strategy, STRING_WIDTH};
pub use fragment::{fragment, Fragment, FragmentKind};
pub use plan::{materialize, Job, ScheduledPlan, Staging, StagingMode};

use std::collections::BTreeMap;

use crate::catalog::{ArtifactKind, Catalog, CatalogError, PlatformRegistry};
use crate::model::{DataflowError, DataflowGraph};
use crate::optimizer::{estimate_cardinalities, OptimizerError, RewriteAnnotation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedulerError {
    #[error("UnplacedInput: {0}")]
    UnplacedInput(String),
    #[error("NoFeasiblePlatform: {0}")]
    NoFeasiblePlatform(String),
    #[error("IncompleteBandwidthMatrix: missing {0:?}")]
    IncompleteBandwidthMatrix(Vec<(String, String)>),
    #[error("InfeasibleAssignment: {0}")]
    InfeasibleAssignment(String),
    #[error("MalformedPlan: {0}")]
    MalformedPlan(String),
    #[error(transparent)]
    Graph(#[from] DataflowError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Sites holding each bound source input, home first, then replicas.
/// Row counts come from dataset metadata.
pub fn placements_from_catalog(
    catalog: &Catalog,
    graph: &DataflowGraph,
) -> Result<(BTreeMap<String, Vec<String>>, BTreeMap<String, u64>), SchedulerError> {
    let mut sites = BTreeMap::new();
    let mut rows = BTreeMap::new();
    let binding = graph.binding.clone().unwrap_or_default();
    for p in graph.source_placeholders() {
        let gid = binding.get(&p).ok_or_else(|| SchedulerError::UnplacedInput(p.clone()))?;
        let record = catalog.artifact(*gid).ok_or_else(|| SchedulerError::UnplacedInput(gid.to_string()))?;
        let s = match record.kind {
            ArtifactKind::Dataset => {
                if let Some(n) = record.dataset.as_ref().and_then(|d| d.rows) {
                    rows.insert(p.clone(), n);
                }
                catalog.dataset_sites(*gid)
            }
            _ => record.location.iter().map(|l| l.platform.clone()).collect(),
        };
        if s.is_empty() {
            return Err(SchedulerError::UnplacedInput(gid.to_string()));
        }
        sites.insert(p, s);
    }
    Ok((sites, rows))
}

/// Fragments, assigns and materializes in one step.
pub fn schedule(
    graph: &DataflowGraph,
    registry: &PlatformRegistry,
    placements: &BTreeMap<String, Vec<String>>,
    annotations: &BTreeMap<String, RewriteAnnotation>,
    source_sizes: &BTreeMap<String, u64>,
    strategy: Strategy,
) -> Result<ScheduledPlan, SchedulerError> {
    let fragments = fragment(graph, placements, registry)?;
    let estimates = estimate_cardinalities(graph, annotations, source_sizes)?;
    let inputs = CostInputs::new(graph, annotations, &estimates);
    let (assignment, costs) = assign(&fragments, registry, &inputs, strategy)?;
    if !assignment.feasible {
        return Err(SchedulerError::NoFeasiblePlatform(assignment.diagnostics.join("; ")));
    }
    materialize(graph, &fragments, &assignment, &costs, registry)
}

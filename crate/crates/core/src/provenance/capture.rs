use std::collections::{BTreeMap, BTreeSet};

use super::record::{ActivityKind, RunStatus, OperatorTrace, ProvenanceLink, RunRecord, TrainingTrace};
use super::ProvenanceError;
use crate::catalog::{ArtifactKind, Catalog, NewArtifact, Record};
use crate::model::{DataflowGraph, FunctionDescriptor, Gid, OperatorClass};

/// Nodes upstream of `node`, excluding the node itself.
pub(crate) fn upstream_closure(graph: &DataflowGraph, node: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<String> = graph.predecessors(node).into_iter().map(String::from).collect();
    while let Some(n) = stack.pop() {
        if seen.insert(n.clone()) {
            stack.extend(graph.predecessors(&n).into_iter().map(String::from));
        }
    }
    seen
}

/// Bound source artifacts read by `nodes`.
fn bound_inputs(graph: &DataflowGraph, nodes: &BTreeSet<String>) -> BTreeSet<Gid> {
    let Some(binding) = &graph.binding else { return BTreeSet::new() };
    graph
        .nodes
        .iter()
        .filter(|n| n.operator == OperatorClass::Source && nodes.contains(&n.node_id))
        .flat_map(|n| n.inputs.iter().filter_map(|i| binding.get(i).copied()))
        .collect()
}

/// Only sinks and trainers produce artifacts, and in a successful run they always do.
fn check_trace_shape(t: &OperatorTrace, op: OperatorClass, success: bool) -> Result<(), ProvenanceError> {
    let produces = matches!(op, OperatorClass::Sink | OperatorClass::Train);
    match (produces, t.produced_gid.is_some()) {
        (false, true) => Err(ProvenanceError::InvalidTrace(format!("{} node {} cannot produce an artifact", op, t.node_id))),
        (true, false) if success => Err(ProvenanceError::InvalidTrace(format!("{} node {} produced nothing", op, t.node_id))),
        _ => Ok(()),
    }
}

/// Stores a run with its traces and links every produced artifact to the
/// run, node, function and the artifacts upstream of it.
pub fn record_run(
    catalog: &mut Catalog,
    run: RunRecord,
    traces: Vec<OperatorTrace>,
    training: Vec<TrainingTrace>,
) -> Result<Gid, ProvenanceError> {
    let graph = catalog
        .artifact(run.dataflow)
        .filter(|a| a.kind == ArtifactKind::Dataflow)
        .and_then(|a| a.dataflow.clone())
        .ok_or(ProvenanceError::UnknownDataflow(run.dataflow))?;
    if run.ended_at < run.started_at {
        return Err(ProvenanceError::InvalidRun("ended_at precedes started_at".into()));
    }
    if catalog.run(run.run_id).is_some() {
        return Err(ProvenanceError::InvalidRun(format!("run {} already recorded", run.run_id)));
    }
    for t in &traces {
        let node = graph.node(&t.node_id).ok_or_else(|| ProvenanceError::UnknownNode(t.node_id.clone()))?;
        if t.run_id != run.run_id {
            return Err(ProvenanceError::InvalidTrace(format!("trace for {} belongs to run {}", t.node_id, t.run_id)));
        }
        check_trace_shape(t, node.operator, run.status == RunStatus::Success)?;
        if let Some(g) = t.produced_gid {
            catalog.require(g)?;
        }
    }
    for t in &training {
        if graph.node(&t.node_id).is_none() {
            return Err(ProvenanceError::UnknownNode(t.node_id.clone()));
        }
        let mut last = 0;
        for e in &t.per_epoch {
            if e.epoch != last + 1 && (last == 0 || e.epoch != last) {
                return Err(ProvenanceError::InvalidTrace(format!("epochs of {} must increase from 1", t.node_id)));
            }
            last = e.epoch;
        }
    }

    let produced_by: BTreeMap<&str, Gid> =
        traces.iter().filter_map(|t| t.produced_gid.map(|g| (t.node_id.as_str(), g))).collect();
    let mut functions = Vec::new();
    let mut known_aliases = BTreeSet::new();
    let mut links = Vec::new();
    for t in &traces {
        let Some(produced) = t.produced_gid else { continue };
        let node = graph.node(&t.node_id).expect("checked above");
        let upstream = upstream_closure(&graph, &t.node_id);
        let mut inputs: BTreeSet<Gid> = bound_inputs(&graph, &upstream);
        inputs.extend(t.input_gids.iter().copied());
        inputs.extend(upstream.iter().filter_map(|n| produced_by.get(n.as_str()).copied()));
        inputs.remove(&produced);
        let activity = if node.operator == OperatorClass::Train {
            ActivityKind::ModelTraining
        } else if upstream.iter().any(|n| graph.node(n).is_some_and(|x| x.operator == OperatorClass::Predict)) {
            ActivityKind::ModelRun
        } else {
            ActivityKind::Transformation
        };
        links.push(ProvenanceLink {
            produced,
            run_id: run.run_id,
            dataflow: run.dataflow,
            node_id: t.node_id.clone(),
            function_alias: t.function_alias.clone(),
            operator: node.operator,
            inputs: inputs.into_iter().collect(),
            activity,
        });
    }
    for t in &traces {
        if catalog.function_by_alias(&t.function_alias).is_none() && known_aliases.insert(t.function_alias.clone()) {
            let mut d = FunctionDescriptor::builtin(t.operator);
            d.alias = t.function_alias.clone();
            functions.push(NewArtifact::function(d));
        }
    }
    if !functions.is_empty() {
        catalog.register_artifacts(functions)?;
    }

    let run_id = run.run_id;
    let mut records = vec![Record::Run(run)];
    records.extend(traces.into_iter().map(Record::OperatorTrace));
    records.extend(training.into_iter().map(Record::TrainingTrace));
    records.extend(links.into_iter().map(Record::Link));
    catalog.put_all(records)?;
    Ok(run_id)
}

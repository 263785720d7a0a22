use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::dataset::{InMemoryDataset, ModelArtifact, Port};
use super::engine::{execute_with, Backend, ExecOutput};
use super::ExecError;
use crate::catalog::{ArtifactKind, Bucket, Catalog, ExecutorKind, Location, NewArtifact};
use crate::model::{DataflowGraph, Gid, OperatorClass};
use crate::provenance::{record_run, upstream_closure, EpochMetric, OperatorTrace, RunRecord, RunStatus, TrainingTrace};
use crate::scheduler::ScheduledPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Replaces every platform's executor kind when set.
    pub backend: Option<ExecutorKind>,
    /// Worker count for partitioned execution; 0 means the CPU count.
    pub workers: usize,
}

impl RunOptions {
    fn workers(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: Gid,
    pub dataflow: Gid,
    pub status: RunStatus,
    /// Artifacts registered by sink and train nodes, keyed by node id.
    pub outputs: BTreeMap<String, Gid>,
    pub traces: Vec<OperatorTrace>,
    pub wall_time: Duration,
    pub peak_live_tuples: u64,
}

impl RunResult {
    pub fn output_gids(&self) -> Vec<Gid> {
        self.outputs.values().copied().collect()
    }
}

fn read_input(catalog: &Catalog, gid: Gid, platform: &str) -> Result<Port, ExecError> {
    let rec = catalog.artifact(gid).ok_or_else(|| ExecError::MissingInput(gid.to_string()))?;
    match rec.kind {
        ArtifactKind::Dataset => {
            let ds = rec.dataset.as_ref().ok_or_else(|| ExecError::MissingInput(gid.to_string()))?;
            let replica = catalog
                .replicas()
                .find(|r| r.dataset == gid && r.platform == platform)
                .map(|r| PathBuf::from(&r.path))
                .filter(|p| p.exists());
            let path = replica.unwrap_or_else(|| PathBuf::from(&ds.location.path));
            Ok(Port::Table(InMemoryDataset::read_csv(&path, &ds.schema)?))
        }
        ArtifactKind::Model => {
            let loc = rec.location.as_ref().ok_or_else(|| ExecError::MissingInput(gid.to_string()))?;
            Ok(Port::Model(Arc::new(ModelArtifact::read_json(Path::new(&loc.path))?)))
        }
        _ => Err(ExecError::MissingInput(format!("{gid} is a {}", rec.kind.name()))),
    }
}

/// Reuses the plan's dataflow artifact when it describes the executed
/// topology; otherwise registers the executed graph.
fn dataflow_gid(catalog: &mut Catalog, plan: &ScheduledPlan) -> Result<Gid, ExecError> {
    if let Some(g) = plan.dataflow {
        let same = catalog
            .artifact(g)
            .and_then(|a| a.dataflow.as_ref())
            .is_some_and(|d| d.nodes == plan.graph.nodes);
        if same {
            return Ok(g);
        }
    }
    let mut new = NewArtifact::dataflow(plan.graph.clone());
    if let Some(g) = plan.dataflow {
        new = new.with_meta("derived_from", g.to_string());
    }
    Ok(catalog.register_artifact(new)?)
}

fn storage_root(catalog: &Catalog, platform: &str) -> Result<PathBuf, ExecError> {
    catalog
        .platform(platform)
        .map(|p| PathBuf::from(&p.storage_root))
        .ok_or_else(|| ExecError::Catalog(crate::catalog::CatalogError::UnknownPlatform(platform.to_string())))
}

fn to_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Bound inputs upstream of `node`, plus its own when it is a source.
fn bound_upstream(graph: &DataflowGraph, node: &str) -> Vec<Gid> {
    let Some(binding) = &graph.binding else { return vec![] };
    let mut nodes = upstream_closure(graph, node);
    nodes.insert(node.to_string());
    let gids: BTreeSet<Gid> = graph
        .nodes
        .iter()
        .filter(|n| n.operator == OperatorClass::Source && nodes.contains(&n.node_id))
        .flat_map(|n| n.inputs.iter().filter_map(|i| binding.get(i).copied()))
        .collect();
    gids.into_iter().collect()
}

fn model_artifact(name: &str, m: &ModelArtifact, training_dataset: Option<Gid>, at: Location) -> NewArtifact {
    let mut new = NewArtifact::model(name, "regression", "local")
        .with_meta("kind", m.kind.clone())
        .with_meta("features", m.feature_names.clone())
        .with_meta("target", m.target_name.clone())
        .at(at);
    if let Some(rmse) = m.training_metrics.get("rmse") {
        new = new.with_meta("rmse", *rmse);
    }
    if let Some(d) = training_dataset {
        new = new.with_meta("training_dataset", d.to_string());
    }
    new
}

/// Executes a scheduled plan against catalog-resident inputs. Outputs are
/// written under `{storage_root}/runs/{run_id}/` of the executing platform.
pub fn run(catalog: &mut Catalog, plan: &ScheduledPlan, opts: RunOptions) -> Result<RunResult, ExecError> {
    if !plan.assignment.feasible {
        return Err(ExecError::InfeasibleAssignment(plan.assignment.diagnostics.join("; ")));
    }
    let graph = &plan.graph;
    let node_platforms = plan.node_platforms();
    let platform_of = |n: &str| node_platforms.get(n).cloned().unwrap_or_default();
    let binding = graph.binding.clone().unwrap_or_default();

    let mut inputs = BTreeMap::new();
    let mut reads = Vec::new();
    for n in graph.nodes.iter().filter(|n| n.operator == OperatorClass::Source) {
        let platform = platform_of(&n.node_id);
        for p in &n.inputs {
            let gid = *binding.get(p).ok_or_else(|| ExecError::MissingInput(p.clone()))?;
            let port = read_input(catalog, gid, &platform)?;
            if matches!(port, Port::Table(_)) {
                reads.push((gid, platform.clone()));
            }
            inputs.insert(p.clone(), port);
        }
    }

    let workers = opts.workers();
    let mut backends = BTreeMap::new();
    for (node, platform) in &node_platforms {
        let kind = match opts.backend {
            Some(k) => k,
            None => catalog.platform(platform).map(|p| p.executor_kind).unwrap_or_default(),
        };
        let backend = match kind {
            ExecutorKind::Single => Backend::Single,
            ExecutorKind::Partitioned => Backend::Partitioned { workers },
        };
        backends.insert(node.clone(), backend);
    }
    let placement = |n: &str| (platform_of(n), backends.get(n).copied().unwrap_or(Backend::Single));

    let dataflow = dataflow_gid(catalog, plan)?;
    let run_id = catalog.new_gid();
    let started_at = Utc::now();
    let clock = Instant::now();
    let out = match execute_with(graph, &inputs, &placement) {
        Ok(out) => out,
        Err(e) => {
            let failed = RunRecord {
                run_id,
                dataflow,
                platform_assignment: node_platforms.clone(),
                started_at,
                ended_at: Utc::now(),
                status: RunStatus::Failed,
            };
            record_run(catalog, failed, vec![], vec![])?;
            return Err(e);
        }
    };
    let outputs = store_outputs(catalog, graph, &out, run_id, &platform_of)?;
    let wall_time = clock.elapsed();

    let traces: Vec<OperatorTrace> = out
        .nodes
        .iter()
        .map(|r| {
            let node = graph.node(&r.node_id).expect("executed nodes belong to the graph");
            OperatorTrace {
                run_id,
                node_id: r.node_id.clone(),
                function_alias: node.function_alias.clone(),
                operator: node.operator,
                platform_id: r.platform_id.clone(),
                input_cardinalities: r.input_cardinalities.clone(),
                output_cardinality: r.output_cardinality,
                wall_time: r.wall_time,
                peak_live_tuples: r.peak_live_tuples,
                produced_gid: outputs.get(&r.node_id).copied(),
                input_gids: bound_upstream(graph, &r.node_id),
                extras: BTreeMap::new(),
            }
        })
        .collect();
    let training = out
        .models
        .iter()
        .map(|(node, m)| TrainingTrace {
            run_id,
            node_id: node.clone(),
            per_epoch: m
                .training_metrics
                .get("rmse")
                .map(|v| EpochMetric { epoch: 1, metric: "rmse".into(), value: *v })
                .into_iter()
                .collect(),
            final_metrics: m.training_metrics.clone(),
        })
        .collect();
    let record = RunRecord {
        run_id,
        dataflow,
        platform_assignment: node_platforms.clone(),
        started_at,
        ended_at: Utc::now(),
        status: RunStatus::Success,
    };
    record_run(catalog, record, traces.clone(), training)?;
    let now = Utc::now();
    for (gid, platform) in reads {
        catalog.record_access(gid, &platform, now)?;
    }
    Ok(RunResult {
        run_id,
        dataflow,
        status: RunStatus::Success,
        outputs,
        traces,
        wall_time,
        peak_live_tuples: out.peak_live_tuples,
    })
}

fn store_outputs(
    catalog: &mut Catalog,
    graph: &DataflowGraph,
    out: &ExecOutput,
    run_id: Gid,
    platform_of: &dyn Fn(&str) -> String,
) -> Result<BTreeMap<String, Gid>, ExecError> {
    let mut produced = BTreeMap::new();
    let first_dataset = |node: &str, catalog: &Catalog| {
        bound_upstream(graph, node)
            .into_iter()
            .find(|g| catalog.artifact(*g).is_some_and(|a| a.kind == ArtifactKind::Dataset))
    };
    for (node, m) in &out.models {
        let platform = platform_of(node);
        let path = storage_root(catalog, &platform)?.join("runs").join(run_id.to_string()).join(format!("{node}.model.json"));
        let alias = graph.node(node).map_or(node.as_str(), |n| n.function_alias.as_str());
        let training = first_dataset(node, catalog);
        let gid = catalog.register_produced(model_artifact(alias, m, training, Location::new(&platform, to_str(&path))))?;
        let mut stored = (**m).clone();
        stored.gid = Some(gid);
        stored.write_json(&path)?;
        produced.insert(node.clone(), gid);
    }
    for sink in &out.sinks {
        let platform = platform_of(&sink.node_id);
        let dir = storage_root(catalog, &platform)?.join("runs").join(run_id.to_string());
        let gid = match &sink.data {
            Port::Table(t) => {
                let bucket = match &sink.bucket {
                    Some(b) => b.parse::<Bucket>().map_err(|cause| ExecError::FunctionFailure { node: sink.node_id.clone(), cause })?,
                    None => Bucket::Staging,
                };
                let path = dir.join(format!("{}.csv", sink.name));
                t.write_csv(&path)?;
                let mut new = NewArtifact::dataset(&sink.name, t.schema.clone(), bucket, Location::new(&platform, to_str(&path)));
                if let Some(d) = new.dataset.as_mut() {
                    d.rows = Some(t.len() as u64);
                }
                catalog.register_produced(new)?
            }
            Port::Model(m) => {
                let path = dir.join(format!("{}.json", sink.name));
                let training = first_dataset(&sink.node_id, catalog);
                let gid = catalog.register_produced(model_artifact(&sink.name, m, training, Location::new(&platform, to_str(&path))))?;
                let mut stored = (**m).clone();
                stored.gid = Some(gid);
                stored.write_json(&path)?;
                gid
            }
        };
        produced.insert(sink.node_id.clone(), gid);
    }
    Ok(produced)
}

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{InMemoryDataset, ModelArtifact, Partitioning, Port};
use super::{ols, ops, ExecError};
use crate::model::{compile_node, source_schema_hint, DataflowGraph, ModelSignature, NodeSpec, OperatorClass, OperatorNode, PortType, Row, Schema};

/// Execution backend for one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Reference backend: one partition, one thread.
    Single,
    /// Hash-partitioned backend over a worker pool.
    Partitioned { workers: usize },
}

impl Backend {
    fn workers(self) -> usize {
        match self {
            Backend::Single => 1,
            Backend::Partitioned { workers } => workers.max(1),
        }
    }
}

/// Measurements for one executed node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRun {
    pub node_id: String,
    pub platform_id: String,
    pub backend: Backend,
    pub input_cardinalities: Vec<u64>,
    pub output_cardinality: u64,
    pub wall_time: Duration,
    /// Live tuples while this node ran, counting its inputs and outputs.
    pub peak_live_tuples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkOutput {
    pub node_id: String,
    pub name: String,
    pub bucket: Option<String>,
    pub data: Port,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutput {
    /// Nodes in execution order.
    pub nodes: Vec<NodeRun>,
    pub sinks: Vec<SinkOutput>,
    /// Models fitted by train nodes.
    pub models: BTreeMap<String, Arc<ModelArtifact>>,
    pub peak_live_tuples: u64,
}

impl ExecOutput {
    /// Output cardinality per node; sinks report the rows they consumed.
    pub fn cardinalities(&self) -> BTreeMap<String, u64> {
        self.nodes.iter().map(|n| (n.node_id.clone(), n.output_cardinality)).collect()
    }

    /// Sorted rows of every table sink, keyed by sink name.
    pub fn sink_rows(&self) -> BTreeMap<String, Vec<Row>> {
        self.sinks.iter().filter_map(|s| s.data.table().map(|t| (s.name.clone(), t.sorted_rows()))).collect()
    }
}

fn bucket_of(row: &Row, idx: usize, n: usize) -> usize {
    let mut h = DefaultHasher::new();
    row[idx].hash(&mut h);
    (h.finish() % n as u64) as usize
}

/// Redistributes rows so that equal values of column `idx` share a partition.
pub fn repartition(t: &InMemoryDataset, key: &str, n: usize) -> InMemoryDataset {
    let idx = t.schema.index_of(key).expect("partition key is a column");
    let mut parts = vec![Vec::new(); n];
    for r in t.rows() {
        parts[bucket_of(r, idx, n)].push(r.clone());
    }
    InMemoryDataset { schema: t.schema.clone(), parts, partitioning: Some(Partitioning { key: key.to_string(), partitions: n }) }
}

fn gather(t: &InMemoryDataset) -> Vec<Row> {
    t.rows().cloned().collect()
}

fn split(rows: Vec<Row>, n: usize) -> Vec<Vec<Row>> {
    if n <= 1 {
        return vec![rows];
    }
    let chunk = rows.len().div_ceil(n).max(1);
    let mut parts: Vec<Vec<Row>> = Vec::with_capacity(n);
    let mut it = rows.into_iter().peekable();
    while it.peek().is_some() {
        parts.push(it.by_ref().take(chunk).collect());
    }
    parts.resize_with(n, Vec::new);
    parts
}

struct Pools(BTreeMap<usize, rayon::ThreadPool>);

impl Pools {
    fn get(&mut self, workers: usize) -> Result<&rayon::ThreadPool, ExecError> {
        if !self.0.contains_key(&workers) {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| ExecError::Io(format!("worker pool: {e}")))?;
            self.0.insert(workers, pool);
        }
        Ok(&self.0[&workers])
    }
}

/// Evaluates `f` for every index in `0..n`, on the pool for the partitioned backend.
fn par_map<T, F>(pools: &mut Pools, backend: Backend, n: usize, f: F) -> Result<Vec<T>, String>
where
    T: Send,
    F: Fn(usize) -> Result<T, String> + Sync + Send,
{
    match backend {
        Backend::Single => (0..n).map(f).collect(),
        Backend::Partitioned { workers } => {
            let pool = pools.get(workers.max(1)).map_err(|e| e.to_string())?;
            pool.install(|| (0..n).into_par_iter().map(&f).collect())
        }
    }
}

fn per_part<F>(pools: &mut Pools, backend: Backend, parts: &[Vec<Row>], f: F) -> Result<Vec<Vec<Row>>, String>
where
    F: Fn(&[Row]) -> Result<Vec<Row>, String> + Sync + Send,
{
    par_map(pools, backend, parts.len(), |k| f(&parts[k]))
}

fn port_type(p: &Port) -> PortType {
    match p {
        Port::Table(t) => PortType::table(t.schema.clone()),
        Port::Model(m) => PortType::Model {
            signature: ModelSignature { features: m.feature_names.clone(), target: m.target_name.clone() },
        },
    }
}

fn fail(node: &OperatorNode) -> impl Fn(String) -> ExecError + '_ {
    move |cause| ExecError::FunctionFailure { node: node.node_id.clone(), cause }
}

fn table_in<'a>(node: &OperatorNode, inputs: &'a [Port], i: usize) -> Result<&'a InMemoryDataset, ExecError> {
    inputs[i].table().ok_or_else(|| ExecError::SchemaViolation { node: node.node_id.clone(), message: format!("input {i} is not a table") })
}

fn with_parts(schema: Schema, parts: Vec<Vec<Row>>, partitioning: Option<Partitioning>) -> Port {
    Port::Table(InMemoryDataset { schema, parts, partitioning })
}

fn expected_schema(port: &PortType) -> Option<&Schema> {
    port.schema()
}

/// Runs one non-source, non-sink node.
fn run_node(
    pools: &mut Pools,
    backend: Backend,
    node: &OperatorNode,
    spec: &NodeSpec,
    out_types: &[PortType],
    inputs: &[Port],
) -> Result<Vec<Port>, ExecError> {
    let w = backend.workers();
    let out_schema = || expected_schema(&out_types[0]).cloned().expect("table output");
    let elementwise = |pools: &mut Pools, f: &(dyn Fn(&[Row], &Schema) -> Result<Vec<Row>, String> + Sync)| -> Result<Vec<Port>, ExecError> {
        let t = table_in(node, inputs, 0)?;
        let parts = if t.parts.len() == w { t.parts.clone() } else { split(gather(t), w) };
        let schema = &t.schema;
        let out = per_part(pools, backend, &parts, |p| f(p, schema)).map_err(fail(node))?;
        let partitioning = if parts.len() == t.parts.len() { t.partitioning.clone() } else { None };
        Ok(vec![with_parts(out_schema(), out, partitioning)])
    };
    match spec {
        NodeSpec::Filter { predicate } => elementwise(pools, &|rows, s| ops::filter(rows, s, predicate)),
        NodeSpec::Map { column, expr, ty, .. } => elementwise(pools, &|rows, s| ops::map(rows, s, column, expr, *ty)),
        NodeSpec::Cast { columns } => elementwise(pools, &|rows, s| ops::cast(rows, s, columns)),
        NodeSpec::Predict { model_input, .. } => {
            let Port::Model(model) = &inputs[*model_input] else { unreachable!("compiled predict has a model input") };
            let data = 1 - (*model_input).min(1);
            let t = table_in(node, inputs, data)?;
            let parts = if t.parts.len() == w { t.parts.clone() } else { split(gather(t), w) };
            let out = per_part(pools, backend, &parts, |p| ops::predict(p, &t.schema, model)).map_err(fail(node))?;
            Ok(vec![with_parts(out_schema(), out, None)])
        }
        NodeSpec::Join { keys } => {
            let mut acc = table_in(node, inputs, 0)?.clone();
            for (i, step) in keys.iter().enumerate() {
                let right = table_in(node, inputs, i + 1)?;
                let schema = ops::join_schema(&acc.schema, &right.schema, step);
                let (l, r) = if w > 1 {
                    (repartition(&acc, &step[0], w), repartition(right, &step[0], w))
                } else {
                    (InMemoryDataset::new(acc.schema.clone(), gather(&acc)), InMemoryDataset::new(right.schema.clone(), gather(right)))
                };
                let (ls, rs) = (&l.schema, &r.schema);
                let out = par_map(pools, backend, l.parts.len(), |k| ops::join_step(&l.parts[k], ls, &r.parts[k], rs, step))
                .map_err(fail(node))?;
                let partitioning = l.partitioning.clone();
                acc = InMemoryDataset { schema, parts: out, partitioning };
            }
            Ok(vec![Port::Table(acc)])
        }
        NodeSpec::GroupBy { keys, aggs } => {
            let t = table_in(node, inputs, 0)?;
            let out_s = out_schema();
            let staged = match keys.first() {
                Some(k) if w > 1 => repartition(t, k, w),
                _ => InMemoryDataset::new(t.schema.clone(), gather(t)),
            };
            let out = per_part(pools, backend, &staged.parts, |p| ops::groupby(p, &t.schema, keys, aggs, &out_s)).map_err(fail(node))?;
            Ok(vec![with_parts(out_s.clone(), out, staged.partitioning)])
        }
        NodeSpec::Dedup { keys } => {
            let t = table_in(node, inputs, 0)?;
            let first = keys.first().cloned().or_else(|| t.schema.names().next().map(String::from));
            let staged = match first {
                Some(k) if w > 1 => repartition(t, &k, w),
                _ => InMemoryDataset::new(t.schema.clone(), gather(t)),
            };
            let out = per_part(pools, backend, &staged.parts, |p| ops::dedup(p, &t.schema, keys)).map_err(fail(node))?;
            Ok(vec![with_parts(out_schema(), out, staged.partitioning)])
        }
        NodeSpec::Train { features, target, .. } => {
            let t = table_in(node, inputs, 0)?;
            let samples = ops::samples(&gather(t), &t.schema, features, Some(target)).map_err(fail(node))?;
            let model = ols::fit(features, target, samples);
            let mut outs = vec![];
            let metrics_row = || {
                vec![
                    crate::model::Value::Float(model.training_metrics["rmse"]),
                    crate::model::Value::Int(model.training_metrics["n_rows"] as i64),
                ]
            };
            if let Some(s) = out_types.get(1).and_then(PortType::schema) {
                outs.push(Port::Table(InMemoryDataset::new(s.clone(), vec![metrics_row()])));
            }
            outs.insert(0, Port::Model(Arc::new(model)));
            Ok(outs)
        }
        NodeSpec::Source | NodeSpec::Sink { .. } => unreachable!("handled by the caller"),
    }
}

/// Runs `graph` with one backend for every node.
pub fn execute(graph: &DataflowGraph, inputs: &BTreeMap<String, Port>, backend: Backend) -> Result<ExecOutput, ExecError> {
    execute_with(graph, inputs, &|_| ("local".to_string(), backend))
}

/// Runs `graph` in topological order. `placement` gives each node's
/// platform and backend. Tables flowing between nodes with different
/// backends are re-split as needed, which never changes their multiset.
pub fn execute_with(
    graph: &DataflowGraph,
    inputs: &BTreeMap<String, Port>,
    placement: &dyn Fn(&str) -> (String, Backend),
) -> Result<ExecOutput, ExecError> {
    let order = graph.topo_order()?;
    let mut remaining: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &graph.nodes {
        for i in &n.inputs {
            *remaining.entry(i.as_str()).or_default() += 1;
        }
    }
    let mut pools = Pools(BTreeMap::new());
    let mut live: BTreeMap<String, Port> = BTreeMap::new();
    let mut live_tuples: u64 = 0;
    let mut out = ExecOutput { nodes: vec![], sinks: vec![], models: BTreeMap::new(), peak_live_tuples: 0 };

    for id in order {
        let node = graph.node(&id).expect("topo order lists graph nodes");
        let (platform_id, backend) = placement(&id);
        let started = Instant::now();
        let mut in_ports: Vec<Port> = Vec::new();
        for c in &node.inputs {
            if let Some(p) = live.get(c) {
                in_ports.push(p.clone());
            } else if let Some(p) = inputs.get(c) {
                if node.operator == OperatorClass::Source {
                    in_ports.push(p.clone());
                }
            } else if node.operator == OperatorClass::Source {
                return Err(ExecError::MissingInput(c.clone()));
            }
        }
        let input_cardinalities: Vec<u64> = in_ports.iter().map(Port::tuples).collect();
        let types: Vec<PortType> = in_ports.iter().map(port_type).collect();
        let violation = |message: String| ExecError::SchemaViolation { node: id.clone(), message };

        let produced: Vec<Port> = match node.operator {
            OperatorClass::Source => {
                for (c, p) in node.inputs.iter().zip(&in_ports) {
                    if let (Some(hint), Port::Table(t)) = (source_schema_hint(node, c), p) {
                        if hint != t.schema {
                            return Err(violation(format!("{c} has schema {}, expected {hint}", t.schema)));
                        }
                    }
                    if let Port::Table(t) = p {
                        t.conforms().map_err(violation)?;
                    }
                }
                let w = backend.workers();
                in_ports
                    .iter()
                    .take(node.outputs.len())
                    .map(|p| match p {
                        Port::Table(t) if w > 1 => Port::Table(InMemoryDataset { schema: t.schema.clone(), parts: split(gather(t), w), partitioning: None }),
                        other => other.clone(),
                    })
                    .collect()
            }
            OperatorClass::Sink => {
                let (spec, _) = compile_node(node, &types).map_err(|e| violation(e.to_string()))?;
                let Some(NodeSpec::Sink { name, bucket }) = spec else { unreachable!("sinks compile to sink specs") };
                let data = match in_ports.first() {
                    Some(Port::Table(t)) => Port::Table(InMemoryDataset::new(t.schema.clone(), t.sorted_rows())),
                    Some(m) => m.clone(),
                    None => return Err(ExecError::MissingInput(node.inputs.first().cloned().unwrap_or_default())),
                };
                // Unnamed sinks take the value bound to an output placeholder.
                let bound = || {
                    let params = graph.param_values.as_ref()?;
                    node.inputs.iter().find_map(|i| params.get(i).and_then(|v| v.as_str()).map(String::from))
                };
                let name = name.or_else(bound).unwrap_or_else(|| id.clone());
                out.sinks.push(SinkOutput { node_id: id.clone(), name, bucket, data });
                vec![]
            }
            _ => {
                if in_ports.len() != node.inputs.len() {
                    let missing = node.inputs.iter().find(|c| !live.contains_key(*c)).cloned().unwrap_or_default();
                    return Err(ExecError::MissingInput(missing));
                }
                let (spec, out_types) = compile_node(node, &types).map_err(|e| violation(e.to_string()))?;
                let spec = spec.ok_or_else(|| violation("input types unknown".into()))?;
                let ports = run_node(&mut pools, backend, node, &spec, &out_types, &in_ports)?;
                for (p, t) in ports.iter().zip(&out_types) {
                    if let (Port::Table(d), Some(s)) = (p, t.schema()) {
                        if &d.schema != s {
                            return Err(violation(format!("produced {} but declared {s}", d.schema)));
                        }
                    }
                }
                if let (NodeSpec::Train { .. }, Some(Port::Model(m))) = (&spec, ports.first()) {
                    out.models.insert(id.clone(), m.clone());
                }
                ports
            }
        };

        let output_cardinality = match node.operator {
            OperatorClass::Sink => input_cardinalities.iter().sum(),
            _ => produced.first().map_or(0, Port::tuples),
        };
        let produced_tuples: u64 = produced.iter().map(Port::tuples).sum();
        let during = live_tuples + produced_tuples;
        out.peak_live_tuples = out.peak_live_tuples.max(during);
        for (c, p) in node.outputs.iter().zip(produced) {
            if remaining.get(c.as_str()).copied().unwrap_or(0) > 0 {
                live_tuples += p.tuples();
                live.insert(c.clone(), p);
            }
        }
        for c in &node.inputs {
            if let Some(r) = remaining.get_mut(c.as_str()) {
                *r -= 1;
                if *r == 0 {
                    if let Some(p) = live.remove(c) {
                        live_tuples -= p.tuples();
                    }
                }
            }
        }
        out.nodes.push(NodeRun {
            node_id: id.clone(),
            platform_id,
            backend,
            input_cardinalities,
            output_cardinality,
            wall_time: started.elapsed(),
            peak_live_tuples: during,
        });
    }
    Ok(out)
}

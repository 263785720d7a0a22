use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::annotate::RewriteAnnotation;
use super::OptimizerError;
use crate::model::{propagate, validate, DataflowGraph, FunctionRegistry, NodeSpec, OperatorClass, OperatorNode, Propagation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteRule {
    /// Reorders a chain of commuting element-at-a-time operators.
    Reorder,
    /// Moves a filter from a join's output onto one of its inputs.
    Pushdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: RewriteRule,
    pub before: Vec<String>,
    pub after: Vec<String>,
    /// Join input that received the filter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewriteTrace {
    pub steps: Vec<RewriteStep>,
}

impl RewriteTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn rebuild(template: &DataflowGraph, nodes: Vec<OperatorNode>) -> Result<DataflowGraph, OptimizerError> {
    let mut g = DataflowGraph::from_nodes(template.gid.clone(), template.description.clone(), nodes)?;
    g.binding = template.binding.clone();
    g.param_values = template.param_values.clone();
    g.input_types = template.input_types.clone();
    Ok(g)
}

fn consumers_of(graph: &DataflowGraph) -> BTreeMap<String, Vec<String>> {
    graph
        .consumers()
        .into_iter()
        .map(|(c, ns)| (c.to_string(), ns.into_iter().map(String::from).collect()))
        .collect()
}

/// Maximal chains of movable single-input single-output nodes whose linking
/// connectors have exactly one consumer. Only chains of length two or more.
fn chains(graph: &DataflowGraph, ann: &BTreeMap<String, RewriteAnnotation>) -> Vec<Vec<String>> {
    let consumers = consumers_of(graph);
    let eligible = |n: &OperatorNode| {
        ann.get(&n.node_id).is_some_and(|a| a.movable) && n.inputs.len() == 1 && n.outputs.len() == 1
    };
    let next = |n: &OperatorNode| -> Option<&OperatorNode> {
        match consumers.get(&n.outputs[0]).map(Vec::as_slice) {
            Some([only]) => graph.node(only).filter(|m| eligible(m)),
            _ => None,
        }
    };
    let has_prev: BTreeSet<String> =
        graph.nodes.iter().filter(|n| eligible(n)).filter_map(|n| next(n).map(|m| m.node_id.clone())).collect();
    let mut out = Vec::new();
    for start in graph.nodes.iter().filter(|n| eligible(n) && !has_prev.contains(&n.node_id)) {
        let mut chain = vec![start.node_id.clone()];
        let mut cur = start;
        while let Some(m) = next(cur) {
            chain.push(m.node_id.clone());
            cur = m;
        }
        if chain.len() > 1 {
            out.push(chain);
        }
    }
    out
}

fn conflicts(a: &NodeSpec, b: &NodeSpec) -> bool {
    let (ra, wa, rb, wb) = (a.reads(), a.writes(), b.reads(), b.writes());
    !wa.is_disjoint(&rb) || !ra.is_disjoint(&wb) || !wa.is_disjoint(&wb)
}

/// Ascending-rank order of `chain` that keeps every conflicting pair in place.
fn ordered(chain: &[String], ann: &BTreeMap<String, RewriteAnnotation>, prop: &Propagation) -> Vec<String> {
    let n = chain.len();
    let spec = |i: usize| prop.specs.get(&chain[i]);
    let mut preds = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..j {
            let blocked = match (spec(i), spec(j)) {
                (Some(a), Some(b)) => conflicts(a, b),
                _ => true,
            };
            if blocked {
                preds[j].push(i);
            }
        }
    }
    let mut placed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = (0..n)
            .filter(|&j| !placed[j] && preds[j].iter().all(|&i| placed[i]))
            .min_by(|&x, &y| ann[&chain[x]].rank.total_cmp(&ann[&chain[y]].rank).then(x.cmp(&y)))
            .expect("conflict edges point forward, so some node is always ready");
        placed[pick] = true;
        out.push(chain[pick].clone());
    }
    out
}

/// Rewires the chain currently ordered as `before` into `after`.
fn apply_reorder(graph: &DataflowGraph, before: &[String], after: &[String]) -> Result<DataflowGraph, OptimizerError> {
    let mut linked = Vec::with_capacity(before.len() + 1);
    for (k, id) in before.iter().enumerate() {
        let n = graph.node(id).ok_or_else(|| OptimizerError::Replay(format!("unknown node {id}")))?;
        if n.inputs.len() != 1 || n.outputs.len() != 1 || (k > 0 && linked[k] != n.inputs[0]) {
            return Err(OptimizerError::Replay(format!("{id} is not part of a chain")));
        }
        if k == 0 {
            linked.push(n.inputs[0].clone());
        }
        linked.push(n.outputs[0].clone());
    }
    let same_set: BTreeSet<&String> = before.iter().collect();
    if after.len() != before.len() || after.iter().any(|a| !same_set.contains(a)) {
        return Err(OptimizerError::Replay("reorder must permute the chain".into()));
    }
    let mut moved: BTreeMap<&str, OperatorNode> = BTreeMap::new();
    for (pos, id) in after.iter().enumerate() {
        let mut n = graph.node(id).unwrap().clone();
        n.inputs = vec![linked[pos].clone()];
        n.outputs = vec![linked[pos + 1].clone()];
        moved.insert(id.as_str(), n);
    }
    let mut slots = after.iter();
    let nodes = graph
        .nodes
        .iter()
        .map(|n| if same_set.contains(&n.node_id) { moved[slots.next().unwrap().as_str()].clone() } else { n.clone() })
        .collect();
    rebuild(graph, nodes)
}

/// A filter directly over a join output that can run on join input `side`.
fn find_pushdown(
    graph: &DataflowGraph,
    ann: &BTreeMap<String, RewriteAnnotation>,
    prop: &Propagation,
) -> Option<(String, String, usize)> {
    let consumers = consumers_of(graph);
    let producers = graph.producers();
    for f in &graph.nodes {
        if f.operator != OperatorClass::Filter || !ann.get(&f.node_id).is_some_and(|a| a.movable) || f.inputs.len() != 1 {
            continue;
        }
        let Some(NodeSpec::Filter { predicate }) = prop.specs.get(&f.node_id) else { continue };
        let Some(j) = producers.get(f.inputs[0].as_str()).and_then(|p| graph.node(p)) else { continue };
        if j.operator != OperatorClass::Join || consumers.get(&f.inputs[0]).map(Vec::len) != Some(1) {
            continue;
        }
        let reads = predicate.columns();
        let side = j.inputs.iter().position(|c| prop.schema_of(c).is_some_and(|s| reads.iter().all(|r| s.contains(r))));
        if let Some(side) = side {
            return Some((f.node_id.clone(), j.node_id.clone(), side));
        }
    }
    None
}

fn fresh_connector(graph: &DataflowGraph, base: &str) -> String {
    let taken: BTreeSet<&str> = graph.nodes.iter().flat_map(|n| n.inputs.iter().chain(&n.outputs)).map(String::as_str).collect();
    let mut name = format!("{base}.pushed");
    let mut k = 1;
    while taken.contains(name.as_str()) {
        k += 1;
        name = format!("{base}.pushed{k}");
    }
    name
}

fn apply_pushdown(graph: &DataflowGraph, filter: &str, join: &str, side: usize) -> Result<DataflowGraph, OptimizerError> {
    let f = graph.node(filter).ok_or_else(|| OptimizerError::Replay(format!("unknown node {filter}")))?;
    let j = graph.node(join).ok_or_else(|| OptimizerError::Replay(format!("unknown node {join}")))?;
    if f.inputs.len() != 1 || j.outputs.len() != 1 || f.inputs[0] != j.outputs[0] || side >= j.inputs.len() {
        return Err(OptimizerError::Replay(format!("{filter} does not read the output of {join}")));
    }
    let fresh = fresh_connector(graph, &j.inputs[side]);
    let mut nf = f.clone();
    let mut nj = j.clone();
    nf.inputs = vec![j.inputs[side].clone()];
    nf.outputs = vec![fresh.clone()];
    nj.inputs[side] = fresh;
    nj.outputs = f.outputs.clone();
    let mut nodes = Vec::with_capacity(graph.nodes.len());
    for n in &graph.nodes {
        if n.node_id == join {
            nodes.push(nf.clone());
            nodes.push(nj.clone());
        } else if n.node_id != filter {
            nodes.push(n.clone());
        }
    }
    rebuild(graph, nodes)
}

/// Which rewrite rules may fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteOptions {
    pub reorder: bool,
    pub pushdown: bool,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions { reorder: true, pushdown: true }
    }
}

pub fn rewrite(
    graph: &DataflowGraph,
    annotations: &BTreeMap<String, RewriteAnnotation>,
) -> Result<(DataflowGraph, RewriteTrace), OptimizerError> {
    rewrite_with(graph, annotations, &FunctionRegistry::new())
}

pub fn rewrite_with(
    graph: &DataflowGraph,
    annotations: &BTreeMap<String, RewriteAnnotation>,
    registry: &FunctionRegistry,
) -> Result<(DataflowGraph, RewriteTrace), OptimizerError> {
    rewrite_configured(graph, annotations, registry, RewriteOptions::default())
}

/// Reorders movable chains by ascending rank and pushes filters below joins,
/// repeating until neither enabled rule applies.
pub fn rewrite_configured(
    graph: &DataflowGraph,
    annotations: &BTreeMap<String, RewriteAnnotation>,
    registry: &FunctionRegistry,
    opts: RewriteOptions,
) -> Result<(DataflowGraph, RewriteTrace), OptimizerError> {
    let report = validate(graph, registry);
    if !report.is_empty() {
        return Err(OptimizerError::InvalidGraph(report));
    }
    let mut g = graph.clone();
    let mut trace = RewriteTrace::default();
    loop {
        let mut changed = false;
        let prop = propagate(&g);
        let chains = if opts.reorder { chains(&g, annotations) } else { vec![] };
        for chain in chains {
            let after = ordered(&chain, annotations, &prop);
            if after != chain {
                g = apply_reorder(&g, &chain, &after)?;
                trace.steps.push(RewriteStep { rule: RewriteRule::Reorder, before: chain, after, side: None });
                changed = true;
            }
        }
        let prop = propagate(&g);
        let pushdown = if opts.pushdown { find_pushdown(&g, annotations, &prop) } else { None };
        if let Some((filter, join, side)) = pushdown {
            g = apply_pushdown(&g, &filter, &join, side)?;
            trace.steps.push(RewriteStep {
                rule: RewriteRule::Pushdown,
                before: vec![join.clone(), filter.clone()],
                after: vec![filter, join],
                side: Some(side),
            });
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let report = validate(&g, registry);
    if !report.is_empty() {
        return Err(OptimizerError::InvalidGraph(report));
    }
    Ok((g, trace))
}

/// Applies a recorded trace to the graph it was produced from.
pub fn replay(graph: &DataflowGraph, trace: &RewriteTrace) -> Result<DataflowGraph, OptimizerError> {
    let mut g = graph.clone();
    for step in &trace.steps {
        g = match step.rule {
            RewriteRule::Reorder => apply_reorder(&g, &step.before, &step.after)?,
            RewriteRule::Pushdown => {
                let [join, filter] = step.before.as_slice() else {
                    return Err(OptimizerError::Replay("pushdown step needs [join, filter]".into()));
                };
                let side = step.side.ok_or_else(|| OptimizerError::Replay("pushdown step needs a side".into()))?;
                apply_pushdown(&g, filter, join, side)?
            }
        };
    }
    Ok(g)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::annotate::RewriteAnnotation;
use super::OptimizerError;
use crate::model::{propagate, DataflowGraph, NodeSpec, OperatorClass, PortType};

/// Estimated row counts per node output, per node input and per connector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CardinalityEstimate {
    /// Rows produced by each node; sinks report the rows they consume.
    pub nodes: BTreeMap<String, f64>,
    /// Rows consumed by each node, summed over its table inputs.
    pub inputs: BTreeMap<String, f64>,
    pub connectors: BTreeMap<String, f64>,
}

impl CardinalityEstimate {
    /// Sum of rows over every connector produced by a non-source node.
    pub fn intermediate_total(&self, graph: &DataflowGraph) -> f64 {
        graph
            .nodes
            .iter()
            .filter(|n| n.operator != OperatorClass::Source)
            .flat_map(|n| &n.outputs)
            .filter_map(|c| self.connectors.get(c))
            .sum()
    }
}

fn join_rows(sizes: &[f64]) -> f64 {
    let mut it = sizes.iter().copied();
    let first = it.next().unwrap_or(0.0);
    it.fold(first, |a, b| {
        let m = a.max(b);
        if m == 0.0 {
            0.0
        } else {
            a * b / m
        }
    })
}

/// Forward-propagates row estimates from the source placeholders.
/// Model-typed placeholders count as a single row and need no size.
pub fn estimate_cardinalities(
    graph: &DataflowGraph,
    annotations: &BTreeMap<String, RewriteAnnotation>,
    source_sizes: &BTreeMap<String, u64>,
) -> Result<CardinalityEstimate, OptimizerError> {
    let order = graph.topo_order()?;
    let prop = propagate(graph);
    let mut est = CardinalityEstimate::default();
    for id in order {
        let node = graph.node(&id).expect("topo order lists graph nodes");
        let sel = annotations.get(&id).map_or(1.0, |a| a.selectivity);
        if node.operator == OperatorClass::Source {
            let mut total = 0.0;
            for (i, input) in node.inputs.iter().enumerate() {
                let rows = match source_sizes.get(input) {
                    Some(&r) => r as f64,
                    None if matches!(graph.input_types.get(input), Some(PortType::Model { .. })) => 1.0,
                    None => return Err(OptimizerError::MissingSourceSize(input.clone())),
                };
                if let Some(out) = node.outputs.get(i) {
                    est.connectors.insert(out.clone(), rows);
                }
                total += rows;
            }
            est.inputs.insert(id.clone(), total);
            est.nodes.insert(id, total);
            continue;
        }
        let ins: Vec<f64> = node.inputs.iter().map(|c| est.connectors.get(c).copied().unwrap_or(0.0)).collect();
        let (consumed, out) = match node.operator {
            OperatorClass::Join => {
                let s: f64 = ins.iter().sum();
                (s, sel * join_rows(&ins))
            }
            OperatorClass::Train => (ins.iter().sum(), 1.0),
            OperatorClass::Sink => {
                let s: f64 = ins.iter().sum();
                (s, s)
            }
            OperatorClass::Predict => {
                let model = match prop.specs.get(&id) {
                    Some(NodeSpec::Predict { model_input, .. }) => Some(*model_input),
                    _ => None,
                };
                let s: f64 = ins.iter().enumerate().filter(|(i, _)| Some(*i) != model).map(|(_, r)| r).sum();
                (s, sel * s)
            }
            _ => {
                let s: f64 = ins.iter().sum();
                (s, sel * s)
            }
        };
        for c in &node.outputs {
            est.connectors.insert(c.clone(), out);
        }
        est.inputs.insert(id.clone(), consumed);
        est.nodes.insert(id, out);
    }
    Ok(est)
}

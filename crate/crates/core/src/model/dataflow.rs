use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::gid::Gid;
use super::ops::PortType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorClass {
    Source,
    Sink,
    Map,
    Filter,
    Join,
    #[serde(rename = "groupby")]
    GroupBy,
    Dedup,
    Cast,
    Train,
    Predict,
}

impl OperatorClass {
    pub fn parse(name: &str) -> Option<OperatorClass> {
        Some(match name.to_ascii_lowercase().as_str() {
            "source" => OperatorClass::Source,
            "sink" => OperatorClass::Sink,
            "map" => OperatorClass::Map,
            "filter" => OperatorClass::Filter,
            "join" => OperatorClass::Join,
            "groupby" | "group_by" => OperatorClass::GroupBy,
            "dedup" => OperatorClass::Dedup,
            "cast" => OperatorClass::Cast,
            "train" | "fit" => OperatorClass::Train,
            "predict" | "infer" => OperatorClass::Predict,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorClass::Source => "source",
            OperatorClass::Sink => "sink",
            OperatorClass::Map => "map",
            OperatorClass::Filter => "filter",
            OperatorClass::Join => "join",
            OperatorClass::GroupBy => "groupby",
            OperatorClass::Dedup => "dedup",
            OperatorClass::Cast => "cast",
            OperatorClass::Train => "train",
            OperatorClass::Predict => "predict",
        }
    }

    /// Operators that process one tuple at a time.
    pub fn is_element_at_a_time(self) -> bool {
        matches!(self, OperatorClass::Map | OperatorClass::Filter | OperatorClass::Cast | OperatorClass::Predict)
    }

    pub fn is_data_access(self) -> bool {
        matches!(self, OperatorClass::Source | OperatorClass::Sink)
    }
}

impl fmt::Display for OperatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorNode {
    pub node_id: String,
    pub operator: OperatorClass,
    pub function_alias: String,
    #[serde(rename = "input")]
    pub inputs: Vec<String>,
    #[serde(rename = "output")]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Json>,
}

impl OperatorNode {
    pub fn is_opaque_flagged(&self) -> bool {
        self.params.get("opaque").and_then(Json::as_bool).unwrap_or(false)
    }
}

/// Producer-consumer pairing through one named connector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub producer: String,
    pub output: String,
    pub consumer: String,
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataflowError {
    #[error("MalformedJson: {0}")]
    MalformedJson(String),
    #[error("UnknownOperator: {0}")]
    UnknownOperator(String),
    #[error("DuplicateNodeId: {0}")]
    DuplicateNodeId(String),
    #[error("DanglingConnector: {0}")]
    DanglingConnector(String),
    #[error("Cycle: {0:?}")]
    Cycle(Vec<String>),
    #[error("UnknownNode: {0}")]
    UnknownNode(String),
}

/// Dataflow DAG. Abstract when `binding` is `None`; concrete once every
/// placeholder is bound and every parameter filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataflowGraph {
    pub gid: String,
    pub description: String,
    pub nodes: Vec<OperatorNode>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<BTreeMap<String, Gid>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_values: Option<BTreeMap<String, Json>>,
    /// Resolved types of bound placeholders (filled by `bind`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub input_types: BTreeMap<String, PortType>,
}

#[derive(Deserialize)]
struct Header {
    #[serde(rename = "GID")]
    gid: Json,
    description: String,
}

#[derive(Deserialize)]
struct RawNode {
    node_id: String,
    operator: String,
    function_alias: String,
    #[serde(default)]
    input: Vec<String>,
    #[serde(default)]
    output: Option<Vec<String>>,
    #[serde(default)]
    params: Option<BTreeMap<String, Json>>,
}

#[derive(Serialize)]
struct HeaderOut<'a> {
    #[serde(rename = "GID")]
    gid: &'a str,
    description: &'a str,
}

#[derive(Serialize)]
struct NodeOut<'a> {
    node_id: &'a str,
    operator: &'a str,
    function_alias: &'a str,
    input: &'a [String],
    output: Option<&'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<&'a BTreeMap<String, Json>>,
}

impl DataflowGraph {
    /// Builds a graph from nodes, deriving edges by connector name.
    pub fn from_nodes(gid: impl Into<String>, description: impl Into<String>, nodes: Vec<OperatorNode>) -> Result<Self, DataflowError> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.node_id.as_str()) {
                return Err(DataflowError::DuplicateNodeId(n.node_id.clone()));
            }
        }
        let edges = derive_edges(&nodes)?;
        Ok(DataflowGraph {
            gid: gid.into(),
            description: description.into(),
            nodes,
            edges,
            binding: None,
            param_values: None,
            input_types: BTreeMap::new(),
        })
    }

    /// Parses the JSON dataflow dialect.
    pub fn parse(text: &str) -> Result<Self, DataflowError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| DataflowError::MalformedJson(e.to_string()))?;
        let items = doc
            .as_array()
            .ok_or_else(|| DataflowError::MalformedJson("document must be a JSON array".into()))?;
        let first = items
            .first()
            .ok_or_else(|| DataflowError::MalformedJson("missing GID/description header".into()))?;
        let header: Header =
            serde_json::from_value(first.clone()).map_err(|e| DataflowError::MalformedJson(format!("header: {e}")))?;
        let gid = match header.gid {
            Json::String(s) => s,
            other => other.to_string(),
        };
        let mut nodes = Vec::with_capacity(items.len() - 1);
        for (i, item) in items.iter().enumerate().skip(1) {
            let raw: RawNode =
                serde_json::from_value(item.clone()).map_err(|e| DataflowError::MalformedJson(format!("element {i}: {e}")))?;
            let operator = OperatorClass::parse(&raw.operator).ok_or(DataflowError::UnknownOperator(raw.operator))?;
            nodes.push(OperatorNode {
                node_id: raw.node_id,
                operator,
                function_alias: raw.function_alias,
                inputs: raw.input,
                outputs: raw.output.unwrap_or_default(),
                params: raw.params.unwrap_or_default(),
            });
        }
        Self::from_nodes(gid, header.description, nodes)
    }

    /// Renders the graph back to the JSON dialect with normalized field order.
    pub fn to_document(&self) -> String {
        let mut items = vec![serde_json::to_value(HeaderOut { gid: &self.gid, description: &self.description }).unwrap()];
        for n in &self.nodes {
            let out = NodeOut {
                node_id: &n.node_id,
                operator: n.operator.name(),
                function_alias: &n.function_alias,
                input: &n.inputs,
                output: if n.outputs.is_empty() && n.operator == OperatorClass::Sink { None } else { Some(&n.outputs) },
                params: if n.params.is_empty() { None } else { Some(&n.params) },
            };
            items.push(serde_json::to_value(out).unwrap());
        }
        serde_json::to_string_pretty(&Json::Array(items)).unwrap()
    }

    pub fn node(&self, id: &str) -> Option<&OperatorNode> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut OperatorNode> {
        self.nodes.iter_mut().find(|n| n.node_id == id)
    }

    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.node_id.clone()).collect()
    }

    pub fn is_concrete(&self) -> bool {
        self.binding.is_some()
    }

    /// Connector name to producing node id.
    pub fn producers(&self) -> BTreeMap<&str, &str> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            for o in &n.outputs {
                m.insert(o.as_str(), n.node_id.as_str());
            }
        }
        m
    }

    /// Connector name to consuming node ids (in document order).
    pub fn consumers(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for n in &self.nodes {
            for i in &n.inputs {
                m.entry(i.as_str()).or_default().push(n.node_id.as_str());
            }
        }
        m
    }

    /// Input names with no producer.
    pub fn placeholders(&self) -> BTreeSet<String> {
        let producers = self.producers();
        self.nodes
            .iter()
            .flat_map(|n| n.inputs.iter())
            .filter(|i| !producers.contains_key(i.as_str()))
            .cloned()
            .collect()
    }

    /// Placeholders read by source nodes (dataset or model inputs).
    pub fn source_placeholders(&self) -> BTreeSet<String> {
        let producers = self.producers();
        self.nodes
            .iter()
            .filter(|n| n.operator == OperatorClass::Source)
            .flat_map(|n| n.inputs.iter())
            .filter(|i| !producers.contains_key(i.as_str()))
            .cloned()
            .collect()
    }

    pub fn predecessors(&self, id: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self.edges.iter().filter(|e| e.consumer == id).map(|e| e.producer.as_str()).collect();
        v.dedup();
        v
    }

    pub fn successors(&self, id: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self.edges.iter().filter(|e| e.producer == id).map(|e| e.consumer.as_str()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Kahn's algorithm with ties broken by node id. On a cycle, returns one
    /// cycle rotated to start at its smallest node id.
    pub fn topo_order(&self) -> Result<Vec<String>, DataflowError> {
        let mut indeg: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.node_id.as_str(), 0)).collect();
        let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &self.edges {
            if succ.entry(e.producer.as_str()).or_default().insert(e.consumer.as_str()) {
                *indeg.get_mut(e.consumer.as_str()).expect("edge endpoints are nodes") += 1;
            }
        }
        let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            order.push(n.to_string());
            if let Some(ss) = succ.get(n) {
                for s in ss {
                    let d = indeg.get_mut(s).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(s);
                    }
                }
            }
        }
        if order.len() == self.nodes.len() {
            return Ok(order);
        }
        let remaining: BTreeSet<&str> = indeg.iter().filter(|(_, d)| **d > 0).map(|(n, _)| *n).collect();
        Err(DataflowError::Cycle(find_cycle(&remaining, &succ)))
    }
}

fn find_cycle(remaining: &BTreeSet<&str>, succ: &BTreeMap<&str, BTreeSet<&str>>) -> Vec<String> {
    // Every remaining node lies on or downstream of a cycle; walk until a repeat.
    let Some(&start) = remaining.first() else { return vec![] };
    let mut path: Vec<&str> = vec![start];
    let mut pos: BTreeMap<&str, usize> = BTreeMap::from([(start, 0)]);
    let mut cur = start;
    loop {
        let next = succ
            .get(cur)
            .and_then(|ss| ss.iter().find(|s| remaining.contains(*s)))
            .copied()
            .expect("node in cyclic remainder has a cyclic successor");
        if let Some(&i) = pos.get(next) {
            let mut cycle: Vec<String> = path[i..].iter().map(|s| s.to_string()).collect();
            let min = cycle.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i).unwrap();
            cycle.rotate_left(min);
            return cycle;
        }
        pos.insert(next, path.len());
        path.push(next);
        cur = next;
    }
}

fn derive_edges(nodes: &[OperatorNode]) -> Result<Vec<Edge>, DataflowError> {
    let mut producer: BTreeMap<&str, &str> = BTreeMap::new();
    for n in nodes {
        for o in &n.outputs {
            if producer.insert(o.as_str(), n.node_id.as_str()).is_some() {
                return Err(DataflowError::DanglingConnector(o.clone()));
            }
        }
    }
    let mut edges = Vec::new();
    for n in nodes {
        for i in &n.inputs {
            if let Some(p) = producer.get(i.as_str()) {
                edges.push(Edge {
                    producer: p.to_string(),
                    output: i.clone(),
                    consumer: n.node_id.clone(),
                    input: i.clone(),
                });
            }
        }
    }
    Ok(edges)
}

//! Per-operator semantics: parameter parsing, schema propagation and the
//! read/write attribute sets the optimizer reasons about.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::dataflow::{DataflowGraph, OperatorClass, OperatorNode};
use super::schema::{AttrType, Schema};
use crate::expr::{self, Expr, ExprError, PredicateExpr};

/// Signature of a trained model as seen by `predict`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSignature {
    pub features: Vec<String>,
    pub target: String,
}

/// What flows through a connector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "port", rename_all = "lowercase")]
pub enum PortType {
    Table { schema: Schema },
    Model { signature: ModelSignature },
    Unknown,
}

impl PortType {
    pub fn table(schema: Schema) -> Self {
        PortType::Table { schema }
    }

    pub fn schema(&self) -> Option<&Schema> {
        match self {
            PortType::Table { schema } => Some(schema),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PortType::Table { schema } => schema.to_string(),
            PortType::Model { signature } => format!("model{:?}->{}", signature.features, signature.target),
            PortType::Unknown => "unknown".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Sum,
    Count,
    Mean,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(rename = "fn")]
    pub func: AggFn,
    #[serde(default)]
    pub column: Option<String>,
    #[serde(rename = "as", default)]
    pub alias: Option<String>,
}

impl Aggregate {
    pub fn output_name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| match (&self.column, self.func) {
            (Some(c), f) => format!("{}_{c}", serde_json::to_value(f).unwrap().as_str().unwrap()),
            (None, _) => "count".to_string(),
        })
    }
}

/// Compiled node semantics.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSpec {
    Source,
    Sink { name: Option<String>, bucket: Option<String> },
    Filter { predicate: PredicateExpr },
    Map { column: String, expr: Expr, ty: AttrType, appends: bool },
    Cast { columns: Vec<(String, AttrType)> },
    /// Left-deep n-way equi-join; `keys[i]` joins input `i + 1` to the accumulated left side.
    Join { keys: Vec<Vec<String>> },
    GroupBy { keys: Vec<String>, aggs: Vec<Aggregate> },
    /// Empty `keys` means all columns.
    Dedup { keys: Vec<String> },
    Train { features: Vec<String>, target: String, gpus: u32 },
    /// `model_input` is the position of the model among the node inputs.
    Predict { model_input: usize, features: Vec<String> },
}

/// Pseudo-attribute written by operators that change column layout.
pub const LAYOUT_ATTR: &str = "#layout";

impl NodeSpec {
    pub fn reads(&self) -> BTreeSet<String> {
        match self {
            NodeSpec::Filter { predicate } => predicate.columns(),
            NodeSpec::Map { expr, .. } => expr.columns(),
            NodeSpec::Cast { columns } => columns.iter().map(|(c, _)| c.clone()).collect(),
            NodeSpec::Join { keys } => keys.iter().flatten().cloned().collect(),
            NodeSpec::GroupBy { keys, aggs } => keys.iter().cloned().chain(aggs.iter().filter_map(|a| a.column.clone())).collect(),
            NodeSpec::Dedup { keys } => keys.iter().cloned().collect(),
            NodeSpec::Train { features, target, .. } => features.iter().cloned().chain([target.clone()]).collect(),
            NodeSpec::Predict { features, .. } => features.iter().cloned().collect(),
            NodeSpec::Source | NodeSpec::Sink { .. } => BTreeSet::new(),
        }
    }

    pub fn writes(&self) -> BTreeSet<String> {
        match self {
            NodeSpec::Map { column, appends, .. } => {
                let mut w = BTreeSet::from([column.clone()]);
                if *appends {
                    w.insert(LAYOUT_ATTR.to_string());
                }
                w
            }
            NodeSpec::Cast { columns } => columns.iter().map(|(c, _)| c.clone()).collect(),
            NodeSpec::GroupBy { aggs, .. } => aggs.iter().map(Aggregate::output_name).collect(),
            NodeSpec::Predict { .. } => BTreeSet::from(["prediction".to_string()]),
            _ => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NodeError {
    #[error("UnknownColumn: {0}")]
    UnknownColumn(String),
    #[error("TypeError: {0}")]
    TypeError(String),
    #[error("MissingParam: {0}")]
    MissingParam(String),
    #[error("BadParam: {0}")]
    BadParam(String),
    #[error("SchemaMismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
}

impl From<ExprError> for NodeError {
    fn from(e: ExprError) -> Self {
        match e {
            ExprError::UnknownColumn(c) => NodeError::UnknownColumn(c),
            ExprError::TypeError(m) => NodeError::TypeError(m),
            e @ ExprError::SyntaxError { .. } => NodeError::BadParam(e.to_string()),
        }
    }
}

fn param_str<'a>(node: &'a OperatorNode, key: &str) -> Result<&'a str, NodeError> {
    match node.params.get(key) {
        None => Err(NodeError::MissingParam(key.to_string())),
        Some(Json::String(s)) => Ok(s),
        Some(other) => Err(NodeError::BadParam(format!("{key} must be a string, found {other}"))),
    }
}

fn param_list(node: &OperatorNode, key: &str) -> Result<Option<Vec<String>>, NodeError> {
    match node.params.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(Json::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(String::from).ok_or_else(|| NodeError::BadParam(format!("{key} must list strings"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(Json::String(s)) => Ok(Some(s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect())),
        Some(other) => Err(NodeError::BadParam(format!("{key} must be a list, found {other}"))),
    }
}

fn table<'a>(port: &'a PortType, what: &str) -> Result<&'a Schema, NodeError> {
    port.schema().ok_or_else(|| NodeError::SchemaMismatch { expected: format!("table for {what}"), found: port.describe() })
}

fn require_columns<'a>(schema: &Schema, cols: impl IntoIterator<Item = &'a String>) -> Result<(), NodeError> {
    for c in cols {
        if !schema.contains(c) {
            return Err(NodeError::SchemaMismatch { expected: format!("column {c}"), found: schema.to_string() });
        }
    }
    Ok(())
}

/// Parses the schema hint an abstract source may carry for its inputs.
pub(crate) fn source_schema_hint(node: &OperatorNode, input: &str) -> Option<Schema> {
    let parse = |v: &Json| -> Option<Schema> {
        match v {
            Json::String(s) => Schema::parse_spec(s).ok(),
            other => serde_json::from_value(other.clone()).ok(),
        }
    };
    if let Some(Json::Object(m)) = node.params.get("schemas") {
        if let Some(v) = m.get(input) {
            return parse(v);
        }
    }
    node.params.get("schema").and_then(parse)
}

/// Compiles one node given its input port types. Returns `None` for the
/// spec when an input type is unknown; the outputs are then unknown too.
pub fn compile_node(node: &OperatorNode, inputs: &[PortType]) -> Result<(Option<NodeSpec>, Vec<PortType>), NodeError> {
    let unknown = || (None, vec![PortType::Unknown; node.outputs.len()]);
    match node.operator {
        OperatorClass::Source => {
            let outs = (0..node.outputs.len()).map(|i| inputs.get(i).cloned().unwrap_or(PortType::Unknown)).collect();
            return Ok((Some(NodeSpec::Source), outs));
        }
        OperatorClass::Sink => {
            let name = node.params.get("name").and_then(Json::as_str).map(String::from);
            let bucket = node.params.get("bucket").and_then(Json::as_str).map(String::from);
            return Ok((Some(NodeSpec::Sink { name, bucket }), vec![]));
        }
        _ => {}
    }
    if inputs.iter().any(|p| *p == PortType::Unknown) {
        return Ok(unknown());
    }
    let (spec, outs) = match node.operator {
        OperatorClass::Filter => {
            let schema = table(&inputs[0], "filter")?;
            let predicate = expr::parse_predicate(param_str(node, "predicate")?, schema)?;
            (NodeSpec::Filter { predicate }, vec![PortType::table(schema.clone())])
        }
        OperatorClass::Map => {
            let schema = table(&inputs[0], "map")?;
            let column = param_str(node, "column")?.to_string();
            let (expr, ty) = expr::parse_scalar(param_str(node, "expr")?, schema)?;
            let appends = !schema.contains(&column);
            let out = schema.with_attribute(&column, ty);
            (NodeSpec::Map { column, expr, ty, appends }, vec![PortType::table(out)])
        }
        OperatorClass::Cast => {
            let schema = table(&inputs[0], "cast")?;
            let Some(Json::Object(m)) = node.params.get("columns") else {
                return Err(NodeError::MissingParam("columns".into()));
            };
            let mut columns = Vec::new();
            let mut out = schema.clone();
            for (c, t) in m {
                let ty: AttrType = t
                    .as_str()
                    .ok_or_else(|| NodeError::BadParam(format!("cast type for {c} must be a string")))?
                    .parse()
                    .map_err(|e: super::schema::SchemaError| NodeError::BadParam(e.to_string()))?;
                if !schema.contains(c) {
                    return Err(NodeError::UnknownColumn(c.clone()));
                }
                out = out.with_attribute(c, ty);
                columns.push((c.clone(), ty));
            }
            (NodeSpec::Cast { columns }, vec![PortType::table(out)])
        }
        OperatorClass::Join => {
            let explicit = param_list(node, "keys")?;
            let mut acc = table(&inputs[0], "join")?.clone();
            let mut keys = Vec::new();
            for port in &inputs[1..] {
                let right = table(port, "join")?;
                let step: Vec<String> = match &explicit {
                    Some(k) => k.clone(),
                    None => acc.names().filter(|n| right.contains(n)).map(String::from).collect(),
                };
                if step.is_empty() {
                    return Err(NodeError::SchemaMismatch {
                        expected: "at least one shared join key".into(),
                        found: format!("{acc} and {right}"),
                    });
                }
                require_columns(&acc, &step)?;
                require_columns(right, &step)?;
                for k in &step {
                    if acc.type_of(k) != right.type_of(k) {
                        return Err(NodeError::SchemaMismatch {
                            expected: format!("{k}:{}", acc.type_of(k).unwrap()),
                            found: format!("{k}:{}", right.type_of(k).unwrap()),
                        });
                    }
                }
                let mut attrs = acc.attributes().to_vec();
                for a in right.attributes() {
                    if step.contains(&a.name) {
                        continue;
                    }
                    if acc.contains(&a.name) {
                        return Err(NodeError::SchemaMismatch {
                            expected: format!("unique non-key column {}", a.name),
                            found: format!("{acc} and {right}"),
                        });
                    }
                    attrs.push(a.clone());
                }
                acc = Schema::new(attrs).expect("join output names are unique");
                keys.push(step);
            }
            (NodeSpec::Join { keys }, vec![PortType::table(acc)])
        }
        OperatorClass::GroupBy => {
            let schema = table(&inputs[0], "groupby")?;
            let keys = param_list(node, "keys")?.ok_or_else(|| NodeError::MissingParam("keys".into()))?;
            require_columns(schema, &keys)?;
            let aggs: Vec<Aggregate> = match node.params.get("aggs") {
                None => vec![],
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| NodeError::BadParam(format!("aggs: {e}")))?,
            };
            let mut attrs: Vec<(String, AttrType)> = keys.iter().map(|k| (k.clone(), schema.type_of(k).unwrap())).collect();
            for a in &aggs {
                let col_ty = match &a.column {
                    Some(c) => Some(schema.type_of(c).ok_or_else(|| NodeError::UnknownColumn(c.clone()))?),
                    None if a.func == AggFn::Count => None,
                    None => return Err(NodeError::MissingParam(format!("column for {:?}", a.func))),
                };
                let ty = match (a.func, col_ty) {
                    (AggFn::Count, _) => AttrType::Int64,
                    (AggFn::Sum, Some(AttrType::Int64)) => AttrType::Int64,
                    (AggFn::Sum | AggFn::Mean, Some(t)) if t.is_numeric() => AttrType::Float64,
                    (AggFn::Min | AggFn::Max, Some(t)) => t,
                    (f, t) => return Err(NodeError::TypeError(format!("{f:?} over {t:?}"))),
                };
                attrs.push((a.output_name(), ty));
            }
            let out = Schema::from_pairs(attrs).map_err(|e| NodeError::BadParam(e.to_string()))?;
            (NodeSpec::GroupBy { keys, aggs }, vec![PortType::table(out)])
        }
        OperatorClass::Dedup => {
            let schema = table(&inputs[0], "dedup")?;
            let keys = param_list(node, "keys")?.unwrap_or_default();
            require_columns(schema, &keys)?;
            (NodeSpec::Dedup { keys }, vec![PortType::table(schema.clone())])
        }
        OperatorClass::Train => {
            let schema = table(&inputs[0], "train")?;
            let features = param_list(node, "features")?.ok_or_else(|| NodeError::MissingParam("features".into()))?;
            let target = param_str(node, "target")?.to_string();
            for c in features.iter().chain([&target]) {
                match schema.type_of(c) {
                    None => return Err(NodeError::UnknownColumn(c.clone())),
                    Some(t) if !t.is_numeric() => return Err(NodeError::TypeError(format!("{c} is {t}, learner needs numbers"))),
                    _ => {}
                }
            }
            let gpus = match node.params.get("gpus") {
                None => 1,
                Some(v) => v.as_u64().ok_or_else(|| NodeError::BadParam("gpus must be a non-negative integer".into()))? as u32,
            };
            let mut outs = vec![PortType::Model { signature: ModelSignature { features: features.clone(), target: target.clone() } }];
            if node.outputs.len() > 1 {
                outs.push(PortType::table(
                    Schema::from_pairs([("rmse", AttrType::Float64), ("n_rows", AttrType::Int64)]).unwrap(),
                ));
            }
            (NodeSpec::Train { features, target, gpus }, outs)
        }
        OperatorClass::Predict => {
            let model_input = inputs
                .iter()
                .position(|p| matches!(p, PortType::Model { .. }))
                .ok_or_else(|| NodeError::SchemaMismatch { expected: "a model input".into(), found: "tables only".into() })?;
            let data_input = 1 - model_input.min(1);
            let PortType::Model { signature } = &inputs[model_input] else { unreachable!() };
            let schema = table(&inputs[data_input], "predict")?;
            for f in &signature.features {
                match schema.type_of(f) {
                    Some(t) if t.is_numeric() => {}
                    _ => return Err(NodeError::SchemaMismatch { expected: format!("numeric feature {f}"), found: schema.to_string() }),
                }
            }
            let out = schema.with_attribute("prediction", AttrType::Float64);
            (NodeSpec::Predict { model_input, features: signature.features.clone() }, vec![PortType::table(out)])
        }
        OperatorClass::Source | OperatorClass::Sink => unreachable!("handled above"),
    };
    Ok((Some(spec), outs))
}

/// Result of propagating types through a graph in topological order.
#[derive(Debug, Clone, Default)]
pub struct Propagation {
    pub ports: BTreeMap<String, PortType>,
    pub specs: BTreeMap<String, NodeSpec>,
    pub errors: Vec<(String, NodeError)>,
}

impl Propagation {
    pub fn schema_of(&self, connector: &str) -> Option<&Schema> {
        self.ports.get(connector).and_then(PortType::schema)
    }
}

/// Propagates port types through an acyclic graph. Placeholder types come
/// from `graph.input_types`, falling back to source schema hints.
pub fn propagate(graph: &DataflowGraph) -> Propagation {
    let mut prop = Propagation::default();
    let Ok(order) = graph.topo_order() else { return prop };
    for id in order {
        let node = graph.node(&id).expect("topo order lists graph nodes");
        let inputs: Vec<PortType> = node
            .inputs
            .iter()
            .map(|i| {
                if let Some(p) = prop.ports.get(i) {
                    return p.clone();
                }
                if let Some(p) = graph.input_types.get(i) {
                    return p.clone();
                }
                if node.operator == OperatorClass::Source {
                    if let Some(s) = source_schema_hint(node, i) {
                        return PortType::table(s);
                    }
                }
                PortType::Unknown
            })
            .collect();
        match compile_node(node, &inputs) {
            Ok((spec, outs)) => {
                if let Some(spec) = spec {
                    prop.specs.insert(id.clone(), spec);
                }
                for (name, port) in node.outputs.iter().zip(outs) {
                    prop.ports.insert(name.clone(), port);
                }
            }
            Err(e) => {
                prop.errors.push((id.clone(), e));
                for name in &node.outputs {
                    prop.ports.insert(name.clone(), PortType::Unknown);
                }
            }
        }
    }
    prop
}

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value as Json;

use super::dataflow::{DataflowGraph, OperatorClass};
use super::function::FunctionRegistry;
use super::gid::Gid;
use super::ops::{propagate, NodeError, PortType};
use super::validate::{validate, ValidationReport};

/// Looks up the port type of a bound artifact (dataset schema or model signature).
pub trait ArtifactResolver {
    fn resolve_input(&self, gid: Gid) -> Option<PortType>;
}

impl ArtifactResolver for BTreeMap<Gid, PortType> {
    fn resolve_input(&self, gid: Gid) -> Option<PortType> {
        self.get(&gid).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BindError {
    #[error("MissingBinding: {0}")]
    MissingBinding(String),
    #[error("UnknownGid: {0}")]
    UnknownGid(Gid),
    #[error("SchemaMismatch at {node}: expected {expected}, found {found}")]
    SchemaMismatch { node: String, expected: String, found: String },
    #[error("MissingParam: {0}")]
    MissingParam(String),
    #[error("InvalidGraph:\n{0}")]
    Invalid(ValidationReport),
}

/// Replaces `$name` references inside string parameters.
fn substitute(value: &Json, params: &BTreeMap<String, Json>, missing: &mut BTreeSet<String>) -> Json {
    match value {
        Json::String(s) if s.starts_with('$') && is_ident(&s[1..]) => match params.get(&s[1..]) {
            Some(v) => v.clone(),
            None => {
                missing.insert(s[1..].to_string());
                value.clone()
            }
        },
        Json::String(s) if s.contains('$') => {
            let mut out = String::new();
            let mut rest = s.as_str();
            while let Some(i) = rest.find('$') {
                out.push_str(&rest[..i]);
                let tail = &rest[i + 1..];
                let end = tail.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(tail.len());
                let name = &tail[..end];
                match params.get(name) {
                    Some(Json::String(v)) => out.push_str(v),
                    Some(v) => out.push_str(&v.to_string()),
                    None => {
                        missing.insert(name.to_string());
                        out.push('$');
                        out.push_str(name);
                    }
                }
                rest = &tail[end..];
            }
            out.push_str(rest);
            Json::String(out)
        }
        Json::Array(items) => Json::Array(items.iter().map(|v| substitute(v, params, missing)).collect()),
        Json::Object(m) => Json::Object(m.iter().map(|(k, v)| (k.clone(), substitute(v, params, missing))).collect()),
        other => other.clone(),
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Binds placeholders to artifacts and fills parameters, producing a
/// concrete graph whose input types are resolved and propagated.
///
/// Source placeholders must be bound to GIDs. Sink path placeholders may be
/// bound through `params` (as the output name) instead.
pub fn bind(
    graph: &DataflowGraph,
    bindings: &BTreeMap<String, Gid>,
    params: &BTreeMap<String, Json>,
    resolver: &dyn ArtifactResolver,
    registry: &FunctionRegistry,
) -> Result<DataflowGraph, BindError> {
    let mut concrete = graph.clone();
    let mut missing = BTreeSet::new();
    for node in &mut concrete.nodes {
        node.params = node.params.iter().map(|(k, v)| (k.clone(), substitute(v, params, &mut missing))).collect();
    }
    if let Some(name) = missing.into_iter().next() {
        return Err(BindError::MissingParam(name));
    }

    let producers: BTreeSet<String> = graph.producers().keys().map(|s| s.to_string()).collect();
    let mut binding = BTreeMap::new();
    let mut input_types = BTreeMap::new();
    for node in &graph.nodes {
        for input in node.inputs.iter().filter(|i| !producers.contains(*i)) {
            match node.operator {
                OperatorClass::Source => {
                    let gid = *bindings.get(input).ok_or_else(|| BindError::MissingBinding(input.clone()))?;
                    let port = resolver.resolve_input(gid).ok_or(BindError::UnknownGid(gid))?;
                    binding.insert(input.clone(), gid);
                    input_types.insert(input.clone(), port);
                }
                OperatorClass::Sink => {
                    if let Some(gid) = bindings.get(input) {
                        binding.insert(input.clone(), *gid);
                    } else if !params.contains_key(input) {
                        return Err(BindError::MissingBinding(input.clone()));
                    }
                }
                _ => {}
            }
        }
    }
    concrete.binding = Some(binding);
    concrete.param_values = Some(params.clone());
    concrete.input_types = input_types;

    let prop = propagate(&concrete);
    if let Some((node, e)) = prop.errors.into_iter().next() {
        let (expected, found) = match e {
            NodeError::SchemaMismatch { expected, found } => (expected, found),
            NodeError::UnknownColumn(c) => (format!("column {c}"), "absent".into()),
            NodeError::MissingParam(p) => return Err(BindError::MissingParam(p)),
            other => (other.to_string(), "incompatible input".into()),
        };
        return Err(BindError::SchemaMismatch { node, expected, found });
    }
    let report = validate(&concrete, registry);
    if !report.is_empty() {
        return Err(BindError::Invalid(report));
    }
    Ok(concrete)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dataflow::tests::INFERENCE_FLOW;
    use crate::model::{AttrType, ModelSignature, Schema};

    fn schema(spec: &str) -> PortType {
        PortType::table(Schema::parse_spec(spec).unwrap())
    }

    fn fixtures() -> (BTreeMap<Gid, PortType>, BTreeMap<String, Gid>) {
        let mut catalog = BTreeMap::new();
        let mut bindings = BTreeMap::new();
        let entries = [
            ("radar_data_path", schema("cell:int64,dbz:float64")),
            ("rain_gauge_data_path", schema("cell:int64,rain:float64")),
            ("grid_data_path", schema("cell:int64,lat:float64,lon:float64")),
            (
                "model_path",
                PortType::Model { signature: ModelSignature { features: vec!["dbz".into(), "rain".into()], target: "rain_next".into() } },
            ),
        ];
        for (i, (name, port)) in entries.into_iter().enumerate() {
            let gid = Gid::from_u128(i as u128 + 1);
            catalog.insert(gid, port);
            bindings.insert(name.to_string(), gid);
        }
        (catalog, bindings)
    }

    #[test]
    fn binds_inference_listing() {
        let g = DataflowGraph::parse(INFERENCE_FLOW).unwrap();
        let (catalog, bindings) = fixtures();
        let params = BTreeMap::from([("output_path".to_string(), Json::from("predictions"))]);
        let c = bind(&g, &bindings, &params, &catalog, &FunctionRegistry::new()).unwrap();
        assert!(c.is_concrete());
        assert_eq!(c.binding.as_ref().unwrap().len(), 4);
        let prop = propagate(&c);
        let out = prop.schema_of("output").unwrap();
        assert_eq!(out.names().collect::<Vec<_>>(), vec!["cell", "dbz", "rain", "lat", "lon", "prediction"]);
        assert_eq!(out.type_of("prediction"), Some(AttrType::Float64));
    }

    #[test]
    fn missing_model_binding() {
        let g = DataflowGraph::parse(INFERENCE_FLOW).unwrap();
        let (catalog, mut bindings) = fixtures();
        bindings.remove("model_path");
        let params = BTreeMap::from([("output_path".to_string(), Json::from("p"))]);
        assert_eq!(
            bind(&g, &bindings, &params, &catalog, &FunctionRegistry::new()).unwrap_err(),
            BindError::MissingBinding("model_path".into())
        );
    }

    #[test]
    fn missing_output_name_and_unknown_gid() {
        let g = DataflowGraph::parse(INFERENCE_FLOW).unwrap();
        let (catalog, mut bindings) = fixtures();
        assert_eq!(
            bind(&g, &bindings, &BTreeMap::new(), &catalog, &FunctionRegistry::new()).unwrap_err(),
            BindError::MissingBinding("output_path".into())
        );
        bindings.insert("grid_data_path".into(), Gid::from_u128(99));
        let params = BTreeMap::from([("output_path".to_string(), Json::from("p"))]);
        assert_eq!(
            bind(&g, &bindings, &params, &catalog, &FunctionRegistry::new()).unwrap_err(),
            BindError::UnknownGid(Gid::from_u128(99))
        );
    }

    #[test]
    fn join_key_absent_from_bound_dataset() {
        let doc = r#"[{"GID":"g","description":"d"},
            {"node_id":"read","operator":"source","function_alias":"csv","input":["a","b"],"output":["ra","rb"]},
            {"node_id":"join","operator":"join","function_alias":"join","input":["ra","rb"],"output":["j"],"params":{"keys":["station"]}},
            {"node_id":"save","operator":"sink","function_alias":"csv","input":["j"],"output":null}]"#;
        let g = DataflowGraph::parse(doc).unwrap();
        let a = Gid::from_u128(1);
        let b = Gid::from_u128(2);
        let catalog = BTreeMap::from([
            (a, schema("station:string,t:int64,dbz:float64")),
            (b, schema("gauge:string,t:int64,rain:float64")),
        ]);
        let bindings = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]);
        let err = bind(&g, &bindings, &BTreeMap::new(), &catalog, &FunctionRegistry::new()).unwrap_err();
        assert_eq!(
            err,
            BindError::SchemaMismatch {
                node: "join".into(),
                expected: "column station".into(),
                found: "(gauge:string, t:int64, rain:float64)".into()
            }
        );
    }

    #[test]
    fn parameter_substitution() {
        let doc = r#"[{"GID":"g","description":"d"},
            {"node_id":"read","operator":"source","function_alias":"csv","input":["a"],"output":["r"]},
            {"node_id":"keep","operator":"filter","function_alias":"filter","input":["r"],"output":["f"],"params":{"predicate":"dbz >= $threshold"}},
            {"node_id":"save","operator":"sink","function_alias":"csv","input":["f"],"output":null,"params":{"name":"$out"}}]"#;
        let g = DataflowGraph::parse(doc).unwrap();
        let a = Gid::from_u128(1);
        let catalog = BTreeMap::from([(a, schema("dbz:float64"))]);
        let bindings = BTreeMap::from([("a".to_string(), a)]);
        let err = bind(&g, &bindings, &BTreeMap::new(), &catalog, &FunctionRegistry::new()).unwrap_err();
        assert!(matches!(err, BindError::MissingParam(_)));
        let params = BTreeMap::from([("threshold".to_string(), Json::from(20.5)), ("out".to_string(), Json::from("strong"))]);
        let c = bind(&g, &bindings, &params, &catalog, &FunctionRegistry::new()).unwrap();
        assert_eq!(c.node("keep").unwrap().params["predicate"], Json::from("dbz >= 20.5"));
        assert_eq!(c.node("save").unwrap().params["name"], Json::from("strong"));
    }
}

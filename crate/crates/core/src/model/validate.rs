use std::fmt;

use serde::Serialize;

use super::dataflow::{DataflowGraph, OperatorClass};
use super::function::{FunctionDescriptor, FunctionKind, FunctionRegistry};
use super::ops::{propagate, NodeError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation")]
pub enum Violation {
    Cycle { nodes: Vec<String> },
    ArityMismatch { node: String, expected: String, found: usize },
    KindMismatch { node: String, operator: OperatorClass, kind: FunctionKind },
    UnresolvedInput { node: String, connector: String },
    UnconsumedOutput { node: String, connector: String },
    UnknownColumn { node: String, column: String },
    TypeError { node: String, message: String },
    MissingParam { node: String, param: String },
    BadParam { node: String, message: String },
    SchemaMismatch { node: String, expected: String, found: String },
}

impl Violation {
    pub fn from_node_error(node: &str, e: NodeError) -> Violation {
        let node = node.to_string();
        match e {
            NodeError::UnknownColumn(column) => Violation::UnknownColumn { node, column },
            NodeError::TypeError(message) => Violation::TypeError { node, message },
            NodeError::MissingParam(param) => Violation::MissingParam { node, param },
            NodeError::BadParam(message) => Violation::BadParam { node, message },
            NodeError::SchemaMismatch { expected, found } => Violation::SchemaMismatch { node, expected, found },
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { nodes } => write!(f, "Cycle({})", nodes.join(", ")),
            Violation::ArityMismatch { node, expected, found } => write!(f, "ArityMismatch at {node}: expected {expected}, found {found}"),
            Violation::KindMismatch { node, operator, kind } => write!(f, "KindMismatch at {node}: operator {operator} cannot use a {kind:?} function"),
            Violation::UnresolvedInput { node, connector } => write!(f, "UnresolvedInput at {node}: {connector} has no producer"),
            Violation::UnconsumedOutput { node, connector } => write!(f, "UnconsumedOutput at {node}: {connector} has no consumer"),
            Violation::UnknownColumn { node, column } => write!(f, "UnknownColumn at {node}: {column}"),
            Violation::TypeError { node, message } => write!(f, "TypeError at {node}: {message}"),
            Violation::MissingParam { node, param } => write!(f, "MissingParam at {node}: {param}"),
            Violation::BadParam { node, message } => write!(f, "BadParam at {node}: {message}"),
            Violation::SchemaMismatch { node, expected, found } => write!(f, "SchemaMismatch at {node}: expected {expected}, found {found}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every structural, arity, kind and schema violation in `graph`.
pub fn validate(graph: &DataflowGraph, registry: &FunctionRegistry) -> ValidationReport {
    let mut out = Vec::new();
    if let Err(super::DataflowError::Cycle(nodes)) = graph.topo_order() {
        out.push(Violation::Cycle { nodes });
    }
    let producers = graph.producers();
    let consumers = graph.consumers();

    for node in &graph.nodes {
        let id = node.node_id.clone();
        let n_in = node.inputs.len();
        let n_out = node.outputs.len();
        let arity = |expected: &str, found: usize| Violation::ArityMismatch { node: id.clone(), expected: expected.into(), found };
        match node.operator {
            OperatorClass::Source => {
                if n_in == 0 {
                    out.push(arity("at least 1 input", 0));
                }
                if n_out != n_in {
                    out.push(arity(&format!("{n_in} outputs (one per input)"), n_out));
                }
            }
            OperatorClass::Sink => {
                if !(1..=2).contains(&n_in) {
                    out.push(arity("1 data input plus an optional path", n_in));
                }
                if n_out != 0 {
                    out.push(arity("no outputs", n_out));
                }
            }
            OperatorClass::Join => {
                if n_in < 2 {
                    out.push(arity("at least 2 inputs", n_in));
                }
                if n_out != 1 {
                    out.push(arity("1 output", n_out));
                }
            }
            OperatorClass::Predict => {
                if n_in != 2 {
                    out.push(arity("2 inputs (data, model)", n_in));
                }
                if n_out != 1 {
                    out.push(arity("1 output", n_out));
                }
            }
            OperatorClass::Train => {
                if n_in != 1 {
                    out.push(arity("1 input", n_in));
                }
                if !(1..=2).contains(&n_out) {
                    out.push(arity("a model output and an optional metrics output", n_out));
                }
            }
            OperatorClass::Map | OperatorClass::Filter | OperatorClass::Cast | OperatorClass::GroupBy | OperatorClass::Dedup => {
                if n_in != 1 {
                    out.push(arity("1 input", n_in));
                }
                if n_out != 1 {
                    out.push(arity("1 output", n_out));
                }
            }
        }

        // Inputs that must come from another node.
        let data_inputs: &[String] = match node.operator {
            OperatorClass::Source => &[],
            OperatorClass::Sink => &node.inputs[..n_in.min(1)],
            _ => &node.inputs,
        };
        for c in data_inputs {
            if !producers.contains_key(c.as_str()) {
                out.push(Violation::UnresolvedInput { node: id.clone(), connector: c.clone() });
            }
        }
        if node.operator != OperatorClass::Sink {
            for c in &node.outputs {
                if !consumers.contains_key(c.as_str()) {
                    out.push(Violation::UnconsumedOutput { node: id.clone(), connector: c.clone() });
                }
            }
        }

        let expected_kind = FunctionKind::for_operator(node.operator);
        let builtin = FunctionDescriptor::builtin(node.operator);
        let descriptor = registry.get(&node.function_alias);
        if let Some(d) = descriptor {
            if d.kind != expected_kind {
                out.push(Violation::KindMismatch { node: id.clone(), operator: node.operator, kind: d.kind });
            }
            let data_in = data_inputs.len();
            let data_out = node.outputs.len();
            let in_ok = if d.variadic { data_in >= d.arity_in } else { data_in == d.arity_in };
            if !in_ok && node.operator != OperatorClass::Source {
                out.push(arity(&format!("{} inputs per function {}", d.arity_in, d.alias), data_in));
            }
            if !d.variadic && data_out != d.arity_out && node.operator != OperatorClass::Train {
                out.push(arity(&format!("{} outputs per function {}", d.arity_out, d.alias), data_out));
            }
        }
        let params_schema = descriptor.map_or(&builtin.params_schema, |d| &d.params_schema);
        for (name, ty) in params_schema {
            match node.params.get(name) {
                None => out.push(Violation::MissingParam { node: id.clone(), param: name.clone() }),
                Some(serde_json::Value::String(s)) if s.starts_with('$') => {}
                Some(v) if !ty.accepts(v) => out.push(Violation::BadParam {
                    node: id.clone(),
                    message: format!("{name} should be {ty:?}, found {v}"),
                }),
                _ => {}
            }
        }
    }

    let prop = propagate(graph);
    for (node, e) in prop.errors {
        let v = Violation::from_node_error(&node, e);
        if !out.contains(&v) && !matches!(v, Violation::MissingParam { .. } if out.iter().any(|o| matches!(o, Violation::MissingParam { node: n, .. } if *n == node))) {
            out.push(v);
        }
    }
    ValidationReport { violations: out }
}

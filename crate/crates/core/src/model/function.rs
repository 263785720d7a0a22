use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::dataflow::OperatorClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Source,
    Sink,
    TransformElement,
    TransformSet,
    Learner,
    ModelApply,
}

impl FunctionKind {
    /// The function kind an operator class requires.
    pub fn for_operator(op: OperatorClass) -> FunctionKind {
        match op {
            OperatorClass::Source => FunctionKind::Source,
            OperatorClass::Sink => FunctionKind::Sink,
            OperatorClass::Map | OperatorClass::Filter | OperatorClass::Cast => FunctionKind::TransformElement,
            OperatorClass::Join | OperatorClass::GroupBy | OperatorClass::Dedup => FunctionKind::TransformSet,
            OperatorClass::Train => FunctionKind::Learner,
            OperatorClass::Predict => FunctionKind::ModelApply,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Int64,
    Float64,
    String,
    Bool,
    List,
    Object,
}

impl ParamType {
    pub fn accepts(self, v: &serde_json::Value) -> bool {
        match self {
            ParamType::Int64 => v.is_i64() || v.is_u64(),
            ParamType::Float64 => v.is_number(),
            ParamType::String => v.is_string(),
            ParamType::Bool => v.is_boolean(),
            ParamType::List => v.is_array(),
            ParamType::Object => v.is_object(),
        }
    }
}

/// Declared behavior of a function implementation.
///
/// `arity_in` counts in-memory datasets consumed (file placeholders of a
/// source do not count). `variadic` allows more inputs than `arity_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDescriptor {
    pub alias: String,
    pub kind: FunctionKind,
    #[serde(default)]
    pub reads: BTreeSet<String>,
    #[serde(default)]
    pub writes: BTreeSet<String>,
    pub arity_in: usize,
    pub arity_out: usize,
    #[serde(default)]
    pub variadic: bool,
    #[serde(default)]
    pub params_schema: Vec<(String, ParamType)>,
    #[serde(default)]
    pub opaque: bool,
}

impl FunctionDescriptor {
    pub fn builtin(op: OperatorClass) -> FunctionDescriptor {
        let (arity_in, arity_out, variadic) = match op {
            OperatorClass::Source => (0, 1, true),
            OperatorClass::Sink => (1, 0, false),
            OperatorClass::Join => (2, 1, true),
            OperatorClass::Predict => (2, 1, false),
            OperatorClass::Train => (1, 2, false),
            _ => (1, 1, false),
        };
        let params_schema = match op {
            OperatorClass::Filter => vec![("predicate".to_string(), ParamType::String)],
            OperatorClass::Map => vec![("column".to_string(), ParamType::String), ("expr".to_string(), ParamType::String)],
            OperatorClass::Cast => vec![("columns".to_string(), ParamType::Object)],
            OperatorClass::GroupBy => vec![("keys".to_string(), ParamType::List)],
            OperatorClass::Train => vec![("features".to_string(), ParamType::List), ("target".to_string(), ParamType::String)],
            _ => vec![],
        };
        FunctionDescriptor {
            alias: op.name().to_string(),
            kind: FunctionKind::for_operator(op),
            reads: BTreeSet::new(),
            writes: BTreeSet::new(),
            arity_in,
            arity_out,
            variadic,
            params_schema,
            opaque: false,
        }
    }
}

/// Function descriptors by alias. Aliases without an entry fall back to the
/// builtin semantics of the node's operator class.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FunctionRegistry {
    entries: BTreeMap<String, FunctionDescriptor>,
}

impl FunctionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, descriptor: FunctionDescriptor) {
        self.entries.insert(descriptor.alias.clone(), descriptor);
    }

    pub fn get(&self, alias: &str) -> Option<&FunctionDescriptor> {
        self.entries.get(alias)
    }

    /// Registered descriptor for `alias`, or the builtin for `op`.
    pub fn resolve(&self, alias: &str, op: OperatorClass) -> FunctionDescriptor {
        self.entries.get(alias).cloned().unwrap_or_else(|| {
            let mut d = FunctionDescriptor::builtin(op);
            d.alias = alias.to_string();
            d
        })
    }
}

//! Dataflow language data model: identifiers, schemas, functions, operator
//! nodes and the DAG that connects them.

mod bind;
mod dataflow;
mod function;
mod gid;
mod ops;
mod schema;
mod validate;

pub use bind::{bind, ArtifactResolver, BindError};
pub use dataflow::{DataflowError, DataflowGraph, Edge, OperatorClass, OperatorNode};
pub use function::{FunctionDescriptor, FunctionKind, FunctionRegistry, ParamType};
pub use gid::{Gid, ParseGidError};
pub(crate) use ops::source_schema_hint;
pub use ops::{compile_node, propagate, Aggregate, AggFn, ModelSignature, NodeError, NodeSpec, PortType, Propagation};
pub use schema::{format_float, parse_timestamp, AttrType, Attribute, Row, Schema, SchemaError, Value};
pub use validate::{validate, ValidationReport, Violation};

//! Cross-platform dataflow engine: a dataflow language with a predicate
//! mini-language, a rank-based rewriter, a fragmenting cost-based scheduler,
//! two interchangeable executors, and a GID-indexed artifact catalog with
//! provenance capture and a Datalog knowledge graph over it.

pub mod catalog;
pub mod executor;
pub mod expr;
pub mod kgraph;
pub mod model;
pub mod optimizer;
pub mod provenance;
pub mod scheduler;
pub mod synth;

pub use model::{DataflowGraph, Gid, OperatorClass, OperatorNode, Schema};

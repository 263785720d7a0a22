//! Knowledge graph over the catalog: base facts from artifacts and
//! provenance, positive recursive Datalog with a `concat` head builtin, and
//! conjunctive queries.

mod eval;
mod facts;
mod parser;
mod syntax;

pub use eval::{evaluate, evaluate_with_cap, query, Binding, FactBase, Tuple, DEFAULT_DEPTH_CAP};
pub use facts::{build_facts, BASE_PREDICATES};
pub use parser::{parse_program, parse_query};
pub use syntax::{Atom, Program, Rule, Sym, Term};

/// Activity generalization and the labelled transitive closure of dataset
/// transformations.
pub const STANDARD_RULES: &str = r#"
is_activity(IDMR) :- model_run(IDMR).
is_activity(IDMT) :- model_training(IDMT).
is_activity(IDTR) :- trans_run(IDTR).

transformation(IDDSI, Name, IDDSO) :- has_input(IDTR, IDDSI),
    uses(IDTR, IDTF), has_name(IDTF, Name), has_output(IDDSO, IDTR),
    dataSet(IDDSO).
transformation(X, ig:concat(W1, ig:concat(" + ", W2)), Z) :-
    transformation(X, W1, Y), transformation(Y, W2, Z).
"#;

pub fn standard_rules() -> Vec<Rule> {
    parse_program(STANDARD_RULES).expect("standard rules parse").rules
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KgError {
    #[error("SyntaxError at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("UnsafeRule: {0}")]
    UnsafeRule(String),
    #[error("UnknownPredicate: {0}")]
    UnknownPredicate(String),
    #[error("ArityMismatch: {predicate} has arity {expected}, used with {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("NonGroundFact: {0}")]
    NonGroundFact(String),
    #[error("DepthExceeded: no fixpoint within {0} rounds")]
    DepthExceeded(usize),
}

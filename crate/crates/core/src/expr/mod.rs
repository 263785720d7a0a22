//! Predicate and scalar expression mini-language.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or      := and ("or" and)*
//! and     := not ("and" not)*
//! not     := "not" not | cmp
//! cmp     := add (("<" | "<=" | "=" | "==" | "!=" | ">=" | ">") add)?
//! add     := mul (("+" | "-") mul)*
//! mul     := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | string | "true" | "false" | column | "(" or ")"
//! ```
//!
//! Error positions are 1-based character columns.

mod eval;
mod parser;
mod typecheck;

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{AttrType, Schema, Value};

pub use eval::{BoundExpr, EvalError};
pub use parser::parse_expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "!=",
            BinaryOp::Ge => ">=",
            BinaryOp::Gt => ">",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Ge | BinaryOp::Gt
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Unary { op: UnaryOp, expr: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    /// Column names referenced anywhere in the expression.
    pub fn columns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Column(c) => {
                out.insert(c.clone());
            }
            Expr::Literal(_) => {}
            Expr::Unary { expr, .. } => expr.collect_columns(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_columns(out);
                rhs.collect_columns(out);
            }
        }
    }

    /// Infers the result type against `schema`.
    pub fn type_of(&self, schema: &Schema) -> Result<AttrType, ExprError> {
        typecheck::infer(self, schema)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => f.write_str(c),
            Expr::Literal(Value::Str(s)) => write!(f, "'{}'", s.replace('\'', "''")),
            Expr::Literal(Value::Timestamp(t)) => write!(f, "'{}'", Value::Timestamp(*t).to_cell()),
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Unary { op: UnaryOp::Neg, expr } => write!(f, "-({expr})"),
            Expr::Unary { op: UnaryOp::Not, expr } => write!(f, "not ({expr})"),
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("SyntaxError at position {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("UnknownColumn: {0}")]
    UnknownColumn(String),
    #[error("TypeError: {0}")]
    TypeError(String),
}

/// A boolean expression checked against an input schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateExpr {
    pub text: String,
    pub expr: Expr,
}

impl PredicateExpr {
    pub fn columns(&self) -> BTreeSet<String> {
        self.expr.columns()
    }

    pub fn is_constant_true(&self) -> bool {
        matches!(self.expr, Expr::Literal(Value::Bool(true)))
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundExpr, ExprError> {
        BoundExpr::bind(&self.expr, schema)
    }
}

/// Parses `text` and checks that it is a well-typed boolean over `schema`.
pub fn parse_predicate(text: &str, schema: &Schema) -> Result<PredicateExpr, ExprError> {
    let expr = parse_expr(text)?;
    let expr = typecheck::coerce_literals(expr, schema);
    match expr.type_of(schema)? {
        AttrType::Bool => Ok(PredicateExpr { text: text.to_string(), expr }),
        other => Err(ExprError::TypeError(format!("predicate must be bool, found {other}"))),
    }
}

/// Parses a scalar expression (used by `map`) and returns it with its type.
pub fn parse_scalar(text: &str, schema: &Schema) -> Result<(Expr, AttrType), ExprError> {
    let expr = typecheck::coerce_literals(parse_expr(text)?, schema);
    let ty = expr.type_of(schema)?;
    Ok((expr, ty))
}

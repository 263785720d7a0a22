use std::cmp::Ordering;

use super::{BinaryOp, Expr, ExprError, UnaryOp};
use crate::model::{Schema, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("EvalError: {0}")]
pub struct EvalError(pub String);

/// Expression with column references resolved to row positions.
#[derive(Debug, Clone)]
pub enum BoundExpr {
    Column(usize),
    Literal(Value),
    Unary(UnaryOp, Box<BoundExpr>),
    Binary(BinaryOp, Box<BoundExpr>, Box<BoundExpr>),
}

impl BoundExpr {
    pub fn bind(expr: &Expr, schema: &Schema) -> Result<BoundExpr, ExprError> {
        Ok(match expr {
            Expr::Column(c) => BoundExpr::Column(schema.index_of(c).ok_or_else(|| ExprError::UnknownColumn(c.clone()))?),
            Expr::Literal(v) => BoundExpr::Literal(v.clone()),
            Expr::Unary { op, expr } => BoundExpr::Unary(*op, Box::new(BoundExpr::bind(expr, schema)?)),
            Expr::Binary { op, lhs, rhs } => BoundExpr::Binary(
                *op,
                Box::new(BoundExpr::bind(lhs, schema)?),
                Box::new(BoundExpr::bind(rhs, schema)?),
            ),
        })
    }

    pub fn eval(&self, row: &[Value]) -> Result<Value, EvalError> {
        match self {
            BoundExpr::Column(i) => Ok(row[*i].clone()),
            BoundExpr::Literal(v) => Ok(v.clone()),
            BoundExpr::Unary(UnaryOp::Not, e) => match e.eval(row)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                v => Err(EvalError(format!("'not' applied to {v}"))),
            },
            BoundExpr::Unary(UnaryOp::Neg, e) => match e.eval(row)? {
                Value::Int(i) => i.checked_neg().map(Value::Int).ok_or_else(|| EvalError("integer overflow".into())),
                Value::Float(f) => Ok(Value::Float(-f)),
                v => Err(EvalError(format!("cannot negate {v}"))),
            },
            BoundExpr::Binary(BinaryOp::And, l, r) => {
                if !truthy(&l.eval(row)?)? {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(truthy(&r.eval(row)?)?))
            }
            BoundExpr::Binary(BinaryOp::Or, l, r) => {
                if truthy(&l.eval(row)?)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(truthy(&r.eval(row)?)?))
            }
            BoundExpr::Binary(op, l, r) => {
                let a = l.eval(row)?;
                let b = r.eval(row)?;
                if op.is_comparison() {
                    compare(*op, &a, &b)
                } else {
                    arith(*op, &a, &b)
                }
            }
        }
    }

    /// Evaluates as a predicate.
    pub fn test(&self, row: &[Value]) -> Result<bool, EvalError> {
        truthy(&self.eval(row)?)
    }
}

fn truthy(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(EvalError(format!("expected bool, found {other}"))),
    }
}

fn compare(op: BinaryOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (x, y) if x.as_f64().is_some() && y.as_f64().is_some() => x.as_f64().unwrap().partial_cmp(&y.as_f64().unwrap()),
        (x, y) if x.attr_type() == y.attr_type() => Some(x.cmp(y)),
        (x, y) => return Err(EvalError(format!("cannot compare {x} with {y}"))),
    };
    let result = match ord {
        // NaN: only '!=' holds.
        None => op == BinaryOp::Ne,
        Some(o) => match op {
            BinaryOp::Lt => o == Ordering::Less,
            BinaryOp::Le => o != Ordering::Greater,
            BinaryOp::Eq => o == Ordering::Equal,
            BinaryOp::Ne => o != Ordering::Equal,
            BinaryOp::Ge => o != Ordering::Less,
            BinaryOp::Gt => o == Ordering::Greater,
            _ => unreachable!("not a comparison"),
        },
    };
    Ok(Value::Bool(result))
}

fn arith(op: BinaryOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    if op == BinaryOp::Div {
        let (x, y) = (num(a)?, num(b)?);
        if y == 0.0 {
            return Err(EvalError("division by zero".into()));
        }
        return Ok(Value::Float(x / y));
    }
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinaryOp::Add => x.checked_add(*y),
                BinaryOp::Sub => x.checked_sub(*y),
                BinaryOp::Mul => x.checked_mul(*y),
                _ => unreachable!("not arithmetic"),
            };
            r.map(Value::Int).ok_or_else(|| EvalError("integer overflow".into()))
        }
        _ => {
            let (x, y) = (num(a)?, num(b)?);
            Ok(Value::Float(match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                _ => unreachable!("not arithmetic"),
            }))
        }
    }
}

fn num(v: &Value) -> Result<f64, EvalError> {
    v.as_f64().ok_or_else(|| EvalError(format!("expected number, found {v}")))
}

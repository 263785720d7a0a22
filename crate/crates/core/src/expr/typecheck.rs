use super::{BinaryOp, Expr, ExprError, UnaryOp};
use crate::model::{AttrType, Schema, Value};

pub(super) fn infer(expr: &Expr, schema: &Schema) -> Result<AttrType, ExprError> {
    match expr {
        Expr::Column(c) => schema.type_of(c).ok_or_else(|| ExprError::UnknownColumn(c.clone())),
        Expr::Literal(v) => Ok(v.attr_type()),
        Expr::Unary { op: UnaryOp::Neg, expr } => {
            let t = infer(expr, schema)?;
            if t.is_numeric() {
                Ok(t)
            } else {
                Err(ExprError::TypeError(format!("cannot negate {t}")))
            }
        }
        Expr::Unary { op: UnaryOp::Not, expr } => match infer(expr, schema)? {
            AttrType::Bool => Ok(AttrType::Bool),
            t => Err(ExprError::TypeError(format!("'not' expects bool, found {t}"))),
        },
        Expr::Binary { op, lhs, rhs } => {
            let l = infer(lhs, schema)?;
            let r = infer(rhs, schema)?;
            if op.is_arithmetic() {
                if !l.is_numeric() || !r.is_numeric() {
                    return Err(ExprError::TypeError(format!("'{}' needs numeric operands, found {l} and {r}", op.symbol())));
                }
                Ok(match (op, l, r) {
                    (BinaryOp::Div, _, _) => AttrType::Float64,
                    (_, AttrType::Int64, AttrType::Int64) => AttrType::Int64,
                    _ => AttrType::Float64,
                })
            } else if op.is_comparison() {
                let compatible = (l.is_numeric() && r.is_numeric()) || l == r;
                if compatible {
                    Ok(AttrType::Bool)
                } else {
                    Err(ExprError::TypeError(format!("cannot compare {l} with {r}")))
                }
            } else if l == AttrType::Bool && r == AttrType::Bool {
                Ok(AttrType::Bool)
            } else {
                Err(ExprError::TypeError(format!("'{}' expects bool operands, found {l} and {r}", op.symbol())))
            }
        }
    }
}

/// Rewrites string literals compared against timestamp columns into
/// timestamp literals when they parse as ISO-8601.
pub(super) fn coerce_literals(expr: Expr, schema: &Schema) -> Expr {
    match expr {
        Expr::Binary { op, lhs, rhs } if op.is_comparison() => {
            let lhs = coerce_literals(*lhs, schema);
            let rhs = coerce_literals(*rhs, schema);
            let lt = infer(&lhs, schema).ok();
            let rt = infer(&rhs, schema).ok();
            let fix = |e: Expr, other: Option<AttrType>| match (e, other) {
                (Expr::Literal(Value::Str(s)), Some(AttrType::Timestamp)) => {
                    match crate::model::parse_timestamp(&s) {
                        Some(t) => Expr::Literal(Value::Timestamp(t)),
                        None => Expr::Literal(Value::Str(s)),
                    }
                }
                (e, _) => e,
            };
            let lhs = fix(lhs, rt);
            let rhs = fix(rhs, lt);
            Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
        }
        Expr::Binary { op, lhs, rhs } => Expr::Binary {
            op,
            lhs: Box::new(coerce_literals(*lhs, schema)),
            rhs: Box::new(coerce_literals(*rhs, schema)),
        },
        Expr::Unary { op, expr } => Expr::Unary { op, expr: Box::new(coerce_literals(*expr, schema)) },
        e => e,
    }
}

//! Row-level implementations of the builtin operators.

use std::collections::{BTreeMap, HashMap};

use crate::expr::{BoundExpr, Expr, PredicateExpr};
use crate::model::{AggFn, Aggregate, AttrType, Row, Schema, Value};
use crate::provenance::stable_sum;

pub(crate) type OpResult<T> = Result<T, String>;

pub(crate) fn filter(rows: &[Row], schema: &Schema, predicate: &PredicateExpr) -> OpResult<Vec<Row>> {
    let bound = predicate.bind(schema).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for r in rows {
        if bound.test(r).map_err(|e| e.to_string())? {
            out.push(r.clone());
        }
    }
    Ok(out)
}

pub(crate) fn map(rows: &[Row], schema: &Schema, column: &str, expr: &Expr, ty: AttrType) -> OpResult<Vec<Row>> {
    let bound = BoundExpr::bind(expr, schema).map_err(|e| e.to_string())?;
    let slot = schema.index_of(column);
    rows.iter()
        .map(|r| {
            let v = bound.eval(r).map_err(|e| e.to_string())?;
            let v = v.cast_to(ty).map_err(|e| format!("CastError: {e}"))?;
            let mut out = r.clone();
            match slot {
                Some(i) => out[i] = v,
                None => out.push(v),
            }
            Ok(out)
        })
        .collect()
}

pub(crate) fn cast(rows: &[Row], schema: &Schema, columns: &[(String, AttrType)]) -> OpResult<Vec<Row>> {
    let slots: Vec<(usize, AttrType)> = columns.iter().map(|(c, t)| (schema.index_of(c).expect("checked at compile"), *t)).collect();
    rows.iter()
        .map(|r| {
            let mut out = r.clone();
            for &(i, t) in &slots {
                out[i] = out[i].cast_to(t).map_err(|e| format!("CastError: {} {e}", schema.attributes()[i].name))?;
            }
            Ok(out)
        })
        .collect()
}

fn key_of(row: &Row, idx: &[usize]) -> Vec<Value> {
    idx.iter().map(|&i| row[i].clone()).collect()
}

/// Inner equi-join of `left` and `right` on `keys`; right key columns are dropped.
pub(crate) fn join_step(left: &[Row], ls: &Schema, right: &[Row], rs: &Schema, keys: &[String]) -> OpResult<Vec<Row>> {
    let lidx: Vec<usize> = keys.iter().map(|k| ls.index_of(k).ok_or_else(|| format!("UnknownKey: {k}"))).collect::<Result<_, _>>()?;
    let ridx: Vec<usize> = keys.iter().map(|k| rs.index_of(k).ok_or_else(|| format!("UnknownKey: {k}"))).collect::<Result<_, _>>()?;
    let keep: Vec<usize> = (0..rs.len()).filter(|i| !ridx.contains(i)).collect();
    let mut table: HashMap<Vec<Value>, Vec<&Row>> = HashMap::new();
    for r in right {
        table.entry(key_of(r, &ridx)).or_default().push(r);
    }
    let mut out = Vec::new();
    for l in left {
        if let Some(matches) = table.get(&key_of(l, &lidx)) {
            for r in matches {
                let mut row = l.clone();
                row.extend(keep.iter().map(|&i| r[i].clone()));
                out.push(row);
            }
        }
    }
    Ok(out)
}

/// Schema after one join step.
pub(crate) fn join_schema(ls: &Schema, rs: &Schema, keys: &[String]) -> Schema {
    let mut attrs = ls.attributes().to_vec();
    attrs.extend(rs.attributes().iter().filter(|a| !keys.contains(&a.name)).cloned());
    Schema::new(attrs).expect("join schema was validated")
}

fn aggregate(agg: &Aggregate, idx: Option<usize>, group: &[&Row]) -> OpResult<Value> {
    let vals = || group.iter().map(move |r| &r[idx.expect("column checked at compile")]);
    Ok(match agg.func {
        AggFn::Count => Value::Int(group.len() as i64),
        AggFn::Sum => match vals().next() {
            Some(Value::Int(_)) => {
                let mut acc: i64 = 0;
                for v in vals() {
                    if let Value::Int(i) = v {
                        acc = acc.checked_add(*i).ok_or("integer overflow in sum")?;
                    }
                }
                Value::Int(acc)
            }
            _ => Value::Float(stable_sum(&mut vals().filter_map(Value::as_f64).collect::<Vec<_>>())),
        },
        AggFn::Mean => {
            let mut v: Vec<f64> = vals().filter_map(Value::as_f64).collect();
            let n = v.len() as f64;
            Value::Float(stable_sum(&mut v) / n)
        }
        AggFn::Min => vals().min().cloned().ok_or("min over empty group")?,
        AggFn::Max => vals().max().cloned().ok_or("max over empty group")?,
    })
}

/// Groups rows on `keys` and evaluates `aggs` per group.
pub(crate) fn groupby(rows: &[Row], schema: &Schema, keys: &[String], aggs: &[Aggregate], out: &Schema) -> OpResult<Vec<Row>> {
    let kidx: Vec<usize> = keys.iter().map(|k| schema.index_of(k).ok_or_else(|| format!("UnknownKey: {k}"))).collect::<Result<_, _>>()?;
    let aidx: Vec<Option<usize>> = aggs.iter().map(|a| a.column.as_ref().and_then(|c| schema.index_of(c))).collect();
    let mut groups: BTreeMap<Vec<Value>, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        groups.entry(key_of(r, &kidx)).or_default().push(r);
    }
    let mut result = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let mut row = key;
        for (a, &i) in aggs.iter().zip(&aidx) {
            row.push(aggregate(a, i, &members)?);
        }
        // Sum of an int column is declared int; mean and float sums are floats.
        for (v, attr) in row.iter_mut().zip(out.attributes()) {
            if v.attr_type() != attr.ty {
                *v = v.cast_to(attr.ty).map_err(|e| format!("CastError: {e}"))?;
            }
        }
        result.push(row);
    }
    Ok(result)
}

/// Keeps one row per key: the smallest under a sort by key then all columns.
pub(crate) fn dedup(rows: &[Row], schema: &Schema, keys: &[String]) -> OpResult<Vec<Row>> {
    let kidx: Vec<usize> = if keys.is_empty() {
        (0..schema.len()).collect()
    } else {
        keys.iter().map(|k| schema.index_of(k).ok_or_else(|| format!("UnknownKey: {k}"))).collect::<Result<_, _>>()?
    };
    let mut best: BTreeMap<Vec<Value>, &Row> = BTreeMap::new();
    for r in rows {
        let k = key_of(r, &kidx);
        match best.get(&k) {
            Some(cur) if *cur <= r => {}
            _ => {
                best.insert(k, r);
            }
        }
    }
    Ok(best.into_values().cloned().collect())
}

/// Extracts numeric `(features, target)` samples.
pub(crate) fn samples(rows: &[Row], schema: &Schema, features: &[String], target: Option<&str>) -> OpResult<Vec<(Vec<f64>, f64)>> {
    let fidx: Vec<usize> = features.iter().map(|f| schema.index_of(f).ok_or_else(|| format!("UnknownKey: {f}"))).collect::<Result<_, _>>()?;
    let tidx = target.map(|t| schema.index_of(t).ok_or_else(|| format!("UnknownKey: {t}"))).transpose()?;
    rows.iter()
        .map(|r| {
            let x = fidx.iter().map(|&i| r[i].as_f64().ok_or_else(|| format!("non-numeric feature {}", r[i]))).collect::<Result<Vec<_>, _>>()?;
            let y = match tidx {
                Some(i) => r[i].as_f64().ok_or_else(|| format!("non-numeric target {}", r[i]))?,
                None => 0.0,
            };
            Ok((x, y))
        })
        .collect()
}

pub(crate) fn predict(rows: &[Row], schema: &Schema, model: &super::ModelArtifact) -> OpResult<Vec<Row>> {
    let xs = samples(rows, schema, &model.feature_names, None)?;
    let slot = schema.index_of("prediction");
    Ok(rows
        .iter()
        .zip(xs)
        .map(|(r, (x, _))| {
            let mut out = r.clone();
            let v = Value::Float(model.predict(&x));
            match slot {
                Some(i) => out[i] = v,
                None => out.push(v),
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_predicate;

    fn schema(spec: &str) -> Schema {
        Schema::parse_spec(spec).unwrap()
    }

    #[test]
    fn filter_keeps_matching_rows() {
        let s = schema("dbz:int64");
        let rows: Vec<Row> = [10, 25, 30].iter().map(|&v| vec![Value::Int(v)]).collect();
        let out = filter(&rows, &s, &parse_predicate("dbz >= 20", &s).unwrap()).unwrap();
        assert_eq!(out, vec![vec![Value::Int(25)], vec![Value::Int(30)]]);
    }

    #[test]
    fn groupby_sums_per_key() {
        let s = schema("k:string, v:int64");
        let rows: Vec<Row> = [("a", 1), ("a", 2), ("b", 5)].iter().map(|(k, v)| vec![Value::Str(k.to_string()), Value::Int(*v)]).collect();
        let aggs: Vec<Aggregate> = serde_json::from_str(r#"[{"fn": "sum", "column": "v", "as": "total"}]"#).unwrap();
        let out_schema = schema("k:string, total:int64");
        let out = groupby(&rows, &s, &["k".into()], &aggs, &out_schema).unwrap();
        let expected: Vec<Row> = vec![
            vec![Value::Str("a".into()), Value::Int(1 + 2)],
            vec![Value::Str("b".into()), Value::Int(5)],
        ];
        assert_eq!(out, expected);
    }

    #[test]
    fn cast_is_strict() {
        let s = schema("dbz:string");
        let ok = cast(&[vec![Value::Str("12.5".into())]], &s, &[("dbz".into(), AttrType::Float64)]).unwrap();
        assert_eq!(ok, vec![vec![Value::Float(12.5)]]);
        let err = cast(&[vec![Value::Str("n/a".into())]], &s, &[("dbz".into(), AttrType::Float64)]).unwrap_err();
        assert!(err.starts_with("CastError"));
    }

    #[test]
    fn dedup_keeps_smallest_full_row_per_key() {
        let s = schema("k:int64, v:int64");
        let rows: Vec<Row> = [(1, 9), (1, 3), (2, 4), (1, 3)].iter().map(|(k, v)| vec![Value::Int(*k), Value::Int(*v)]).collect();
        let out = dedup(&rows, &s, &["k".into()]).unwrap();
        assert_eq!(out, vec![vec![Value::Int(1), Value::Int(3)], vec![Value::Int(2), Value::Int(4)]]);
        assert_eq!(dedup(&rows, &s, &[]).unwrap().len(), 3);
    }

    #[test]
    fn join_matches_keys() {
        let ls = schema("k:int64, a:int64");
        let rs = schema("k:int64, b:int64");
        let left: Vec<Row> = vec![vec![Value::Int(1), Value::Int(10)], vec![Value::Int(2), Value::Int(20)]];
        let right: Vec<Row> = vec![vec![Value::Int(1), Value::Int(7)], vec![Value::Int(1), Value::Int(8)], vec![Value::Int(3), Value::Int(9)]];
        let mut out = join_step(&left, &ls, &right, &rs, &["k".into()]).unwrap();
        out.sort();
        assert_eq!(out, vec![vec![Value::Int(1), Value::Int(10), Value::Int(7)], vec![Value::Int(1), Value::Int(10), Value::Int(8)]]);
        assert_eq!(join_schema(&ls, &rs, &["k".into()]).to_string(), "(k:int64, a:int64, b:int64)");
    }
}

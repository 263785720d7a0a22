use std::collections::BTreeMap;

use super::*;
use crate::model::{DataflowGraph, FunctionDescriptor, FunctionRegistry, OperatorClass};

fn graph(nodes: &str) -> DataflowGraph {
    DataflowGraph::parse(&format!(r#"[{{"GID": "g", "description": "test"}}, {nodes}]"#)).unwrap()
}

fn order(g: &DataflowGraph) -> Vec<String> {
    g.topo_order().unwrap()
}

const CAST_THEN_FILTER_SAME: &str = r#"
  {"node_id": "load", "operator": "source", "function_alias": "read", "input": ["radar"], "output": ["raw"],
   "params": {"schema": "station:string, dbz:string, ts:string"}},
  {"node_id": "cast", "operator": "cast", "function_alias": "to_float", "input": ["raw"], "output": ["typed"],
   "params": {"columns": {"dbz": "float64"}}},
  {"node_id": "keep", "operator": "filter", "function_alias": "strong", "input": ["typed"], "output": ["kept"],
   "params": {"predicate": "dbz >= 20"}},
  {"node_id": "store", "operator": "sink", "function_alias": "write", "input": ["kept"], "output": null}"#;

const CAST_THEN_FILTER_DISJOINT: &str = r#"
  {"node_id": "load", "operator": "source", "function_alias": "read", "input": ["radar"], "output": ["raw"],
   "params": {"schema": "station:string, dbz:float64, ts:string"}},
  {"node_id": "cast", "operator": "cast", "function_alias": "to_time", "input": ["raw"], "output": ["typed"],
   "params": {"columns": {"ts": "timestamp"}}},
  {"node_id": "keep", "operator": "filter", "function_alias": "strong", "input": ["typed"], "output": ["kept"],
   "params": {"predicate": "dbz >= 20"}},
  {"node_id": "store", "operator": "sink", "function_alias": "write", "input": ["kept"], "output": null}"#;

fn selective() -> FixedStats {
    FixedStats::new().with("strong", 0.1, 1e-6).with("to_float", 1.0, 1e-6).with("to_time", 1.0, 5e-6)
}

#[test]
fn filter_rank_from_stats() {
    let g = graph(CAST_THEN_FILTER_SAME);
    let ann = annotate(&g, &selective());
    let expected = (0.1 - 1.0) / 1e-6;
    assert!((ann["keep"].rank - expected).abs() < 1e-6);
    assert!((ann["keep"].rank + 0.9e6).abs() < 1e-6);
    assert!(ann["keep"].movable);
}

#[test]
fn neutral_map_has_zero_rank() {
    let g = graph(
        r#"{"node_id": "load", "operator": "source", "function_alias": "read", "input": ["p"], "output": ["a"],
            "params": {"schema": "x:int64"}},
           {"node_id": "m", "operator": "map", "function_alias": "double", "input": ["a"], "output": ["b"],
            "params": {"column": "y", "expr": "x * 2"}},
           {"node_id": "out", "operator": "sink", "function_alias": "write", "input": ["b"], "output": null}"#,
    );
    let ann = annotate(&g, &FixedStats::new().with("double", 1.0, 3e-6));
    assert_eq!(ann["m"].rank, 0.0);
    assert!(ann["m"].movable);
    assert!(!ann["load"].movable);
    assert!(!ann["out"].movable);
}

#[test]
fn unknown_alias_gets_defaults() {
    let g = graph(CAST_THEN_FILTER_SAME);
    let ann = annotate(&g, &FixedStats::new());
    assert_eq!(ann.len(), 4);
    assert!(ann.values().all(|a| a.selectivity == 1.0 && a.rank == 0.0));
}

#[test]
fn opaque_function_is_never_movable() {
    let g = graph(CAST_THEN_FILTER_SAME);
    let mut reg = FunctionRegistry::new();
    let mut d = FunctionDescriptor::builtin(OperatorClass::Filter);
    d.alias = "strong".into();
    d.opaque = true;
    reg.register(d);
    let ann = annotate_with(&g, &selective(), &reg);
    assert!(!ann["keep"].movable);
    let flagged = graph(&CAST_THEN_FILTER_DISJOINT.replace(r#""predicate": "dbz >= 20""#, r#""predicate": "dbz >= 20", "opaque": true"#));
    let ann = annotate(&flagged, &selective());
    assert!(!ann["keep"].movable);
    let (out, trace) = rewrite(&flagged, &ann).unwrap();
    assert_eq!(out, flagged);
    assert!(trace.is_empty());
}

#[test]
fn dependency_blocks_reorder() {
    let g = graph(CAST_THEN_FILTER_SAME);
    let (out, trace) = rewrite(&g, &annotate(&g, &selective())).unwrap();
    assert!(trace.is_empty());
    assert_eq!(order(&out), vec!["load", "cast", "keep", "store"]);
}

#[test]
fn disjoint_filter_moves_before_cast() {
    let g = graph(CAST_THEN_FILTER_DISJOINT);
    let (out, trace) = rewrite(&g, &annotate(&g, &selective())).unwrap();
    assert_eq!(order(&out), vec!["load", "keep", "cast", "store"]);
    assert_eq!(trace.steps.len(), 1);
    assert_eq!(trace.steps[0].rule, RewriteRule::Reorder);
    assert_eq!(trace.steps[0].before, vec!["cast", "keep"]);
    assert_eq!(trace.steps[0].after, vec!["keep", "cast"]);
    assert_eq!(out.node("keep").unwrap().inputs, vec!["raw"]);
    assert_eq!(out.node("store").unwrap().inputs, vec!["kept"]);
    assert_eq!(replay(&g, &trace).unwrap(), out);
}

#[test]
fn no_movable_nodes_is_identity() {
    let g = graph(
        r#"{"node_id": "load", "operator": "source", "function_alias": "read", "input": ["p"], "output": ["a"],
            "params": {"schema": "k:int64, v:float64"}},
           {"node_id": "agg", "operator": "groupby", "function_alias": "sum_v", "input": ["a"], "output": ["b"],
            "params": {"keys": ["k"], "aggs": [{"fn": "sum", "column": "v"}]}},
           {"node_id": "out", "operator": "sink", "function_alias": "write", "input": ["b"], "output": null}"#,
    );
    let (out, trace) = rewrite(&g, &annotate(&g, &selective())).unwrap();
    assert_eq!(out, g);
    assert!(trace.is_empty());
}

const JOIN_THEN_FILTER: &str = r#"
  {"node_id": "left", "operator": "source", "function_alias": "read", "input": ["lp"], "output": ["l"],
   "params": {"schema": "k:int64, a:float64"}},
  {"node_id": "right", "operator": "source", "function_alias": "read", "input": ["rp"], "output": ["r"],
   "params": {"schema": "k:int64, b:float64"}},
  {"node_id": "j", "operator": "join", "function_alias": "by_k", "input": ["l", "r"], "output": ["lr"],
   "params": {"keys": ["k"]}},
  {"node_id": "f", "operator": "filter", "function_alias": "big_b", "input": ["lr"], "output": ["kept"],
   "params": {"predicate": "b > 5"}},
  {"node_id": "out", "operator": "sink", "function_alias": "write", "input": ["kept"], "output": null}"#;

#[test]
fn filter_pushes_below_join_onto_matching_side() {
    let g = graph(JOIN_THEN_FILTER);
    let stats = FixedStats::new().with("big_b", 0.2, 1e-6);
    let (out, trace) = rewrite(&g, &annotate(&g, &stats)).unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert_eq!(trace.steps[0].rule, RewriteRule::Pushdown);
    assert_eq!(trace.steps[0].side, Some(1));
    let f = out.node("f").unwrap();
    assert_eq!(f.inputs, vec!["r"]);
    let j = out.node("j").unwrap();
    assert_eq!(j.inputs[0], "l");
    assert_eq!(j.inputs[1], f.outputs[0]);
    assert_eq!(j.outputs, vec!["kept"]);
    assert_eq!(replay(&g, &trace).unwrap(), out);
}

#[test]
fn filter_on_key_goes_to_first_side() {
    let g = graph(&JOIN_THEN_FILTER.replace("b > 5", "k < 3"));
    let (out, trace) = rewrite(&g, &annotate(&g, &FixedStats::new())).unwrap();
    assert_eq!(trace.steps[0].side, Some(0));
    assert_eq!(out.node("f").unwrap().inputs, vec!["l"]);
}

#[test]
fn filter_spanning_both_sides_stays() {
    let g = graph(&JOIN_THEN_FILTER.replace("b > 5", "a > b"));
    let (out, trace) = rewrite(&g, &annotate(&g, &FixedStats::new())).unwrap();
    assert!(trace.is_empty());
    assert_eq!(out, g);
}

#[test]
fn rewrite_is_idempotent_on_examples() {
    for nodes in [CAST_THEN_FILTER_SAME, CAST_THEN_FILTER_DISJOINT, JOIN_THEN_FILTER] {
        let g = graph(nodes);
        let stats = selective().with("big_b", 0.3, 2e-6);
        let (once, _) = rewrite(&g, &annotate(&g, &stats)).unwrap();
        let (twice, trace) = rewrite(&once, &annotate(&once, &stats)).unwrap();
        assert_eq!(once, twice);
        assert!(trace.is_empty());
    }
}

#[test]
fn replay_rejects_foreign_trace() {
    let g = graph(CAST_THEN_FILTER_SAME);
    let trace = RewriteTrace {
        steps: vec![RewriteStep { rule: RewriteRule::Reorder, before: vec!["keep".into(), "cast".into()], after: vec!["cast".into(), "keep".into()], side: None }],
    };
    assert!(matches!(replay(&g, &trace), Err(OptimizerError::Replay(_))));
}

#[test]
fn invalid_graph_is_rejected() {
    let g = graph(&CAST_THEN_FILTER_SAME.replace("dbz >= 20", "missing >= 20"));
    let err = rewrite(&g, &annotate(&g, &selective())).unwrap_err();
    assert!(err.to_string().starts_with("InvalidGraph"));
}

fn sizes(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn filter_estimate_scales_by_selectivity() {
    let g = graph(CAST_THEN_FILTER_SAME);
    let est = estimate_cardinalities(&g, &annotate(&g, &selective()), &sizes(&[("radar", 1000)])).unwrap();
    assert!((est.nodes["keep"] - 1000.0 * 0.1).abs() < 1e-9);
    assert_eq!(est.nodes["store"], est.nodes["keep"]);
    assert_eq!(est.inputs["keep"], 1000.0);
}

#[test]
fn join_estimate_normalizes_by_max() {
    let g = graph(JOIN_THEN_FILTER);
    let est = estimate_cardinalities(&g, &annotate(&g, &FixedStats::new()), &sizes(&[("lp", 100), ("rp", 100)])).unwrap();
    assert_eq!(est.nodes["j"], 100.0 * 100.0 / 100.0);
    let est = estimate_cardinalities(&g, &annotate(&g, &FixedStats::new()), &sizes(&[("lp", 40), ("rp", 200)])).unwrap();
    assert_eq!(est.nodes["j"], 40.0 * 200.0 / 200.0);
}

#[test]
fn empty_source_zeroes_downstream() {
    let g = graph(JOIN_THEN_FILTER);
    let est = estimate_cardinalities(&g, &annotate(&g, &FixedStats::new()), &sizes(&[("lp", 0), ("rp", 50)])).unwrap();
    for id in ["j", "f", "out"] {
        assert_eq!(est.nodes[id], 0.0, "{id}");
    }
}

#[test]
fn missing_source_size_is_reported() {
    let g = graph(JOIN_THEN_FILTER);
    let err = estimate_cardinalities(&g, &annotate(&g, &FixedStats::new()), &sizes(&[("lp", 10)])).unwrap_err();
    assert_eq!(err, OptimizerError::MissingSourceSize("rp".into()));
}

#[test]
fn pushdown_lowers_estimated_intermediates() {
    for (nodes, input) in [(CAST_THEN_FILTER_DISJOINT, sizes(&[("radar", 10_000)])), (JOIN_THEN_FILTER, sizes(&[("lp", 500), ("rp", 800)]))] {
        let g = graph(nodes);
        let stats = selective().with("big_b", 0.1, 1e-6);
        let ann = annotate(&g, &stats);
        let (opt, trace) = rewrite(&g, &ann).unwrap();
        assert!(!trace.is_empty());
        let before = estimate_cardinalities(&g, &ann, &input).unwrap().intermediate_total(&g);
        let after = estimate_cardinalities(&opt, &ann, &input).unwrap().intermediate_total(&opt);
        assert!(after < before, "{after} !< {before}");
    }
}

#[test]
fn disabled_rules_do_not_fire() {
    let g = graph(JOIN_THEN_FILTER);
    let ann = annotate(&g, &selective().with("big_b", 0.1, 1e-6));
    let off = RewriteOptions { reorder: true, pushdown: false };
    let (same, trace) = rewrite_configured(&g, &ann, &FunctionRegistry::new(), off).unwrap();
    assert!(trace.steps.iter().all(|s| s.rule != RewriteRule::Pushdown));
    assert_eq!(same.nodes.len(), g.nodes.len());
    let (_, on) = rewrite(&g, &ann).unwrap();
    assert!(on.steps.iter().any(|s| s.rule == RewriteRule::Pushdown));
}

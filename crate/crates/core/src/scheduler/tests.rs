use std::collections::BTreeMap;

use super::*;
use crate::catalog::{BandwidthMatrix, ExecutorKind, PlatformDescriptor, PlatformRegistry};
use crate::model::DataflowGraph;
use crate::optimizer::{annotate, FixedStats};

fn platform(id: &str, gpus: u32, speed: f64) -> PlatformDescriptor {
    PlatformDescriptor {
        platform_id: id.into(),
        cpu_cores: 8,
        gpus,
        relative_speed: speed,
        storage_root: format!("/tmp/{id}"),
        executor_kind: ExecutorKind::Single,
    }
}

fn registry(ps: Vec<PlatformDescriptor>, mbps: f64) -> PlatformRegistry {
    let mut bw = BandwidthMatrix::new();
    for a in &ps {
        for b in &ps {
            if a.platform_id != b.platform_id {
                bw.set(&a.platform_id, &b.platform_id, mbps);
            }
        }
    }
    PlatformRegistry { platforms: ps, bandwidth: bw }
}

fn sites(pairs: &[(&str, &str)]) -> BTreeMap<String, Vec<String>> {
    pairs.iter().map(|(k, v)| (k.to_string(), vec![v.to_string()])).collect()
}

fn sizes(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

const BUILD_FLOW: &str = r#"[
  {"GID": "build", "description": "model build"},
  {"node_id": "load", "operator": "source", "function_alias": "load_inputs", "input": ["radar", "gauges"],
   "output": ["df_radar", "df_gauges"],
   "params": {"schemas": {"radar": "k:int64, dbz:float64", "gauges": "k:int64, rain:float64"}}},
  {"node_id": "prep", "operator": "join", "function_alias": "fuse", "input": ["df_radar", "df_gauges"], "output": ["fused"],
   "params": {"keys": ["k"]}},
  {"node_id": "fit", "operator": "train", "function_alias": "learn", "input": ["fused"], "output": ["model"],
   "params": {"features": ["dbz"], "target": "rain", "gpus": 1}},
  {"node_id": "keep", "operator": "sink", "function_alias": "store_model", "input": ["model"], "output": null}
]"#;

fn kinds(frags: &[Fragment]) -> Vec<(FragmentKind, Vec<String>)> {
    frags.iter().map(|f| (f.kind, f.node_ids.clone())).collect()
}

#[test]
fn gpu_cut_gives_three_fragments() {
    let g = DataflowGraph::parse(BUILD_FLOW).unwrap();
    let reg = registry(vec![platform("cpu", 0, 1.0), platform("hpc", 4, 4.0)], 100.0);
    let frags = fragment(&g, &sites(&[("radar", "cpu"), ("gauges", "cpu")]), &reg).unwrap();
    assert_eq!(
        kinds(&frags),
        vec![
            (FragmentKind::Compute, vec!["load".into(), "prep".into()]),
            (FragmentKind::Compute, vec!["fit".into(), "keep".into()]),
            (FragmentKind::Transfer, vec!["send:fused".into(), "recv:fused".into()]),
        ]
    );
    let ann = annotate(&g, &FixedStats::new());
    let plan = schedule(&g, &reg, &sites(&[("radar", "cpu"), ("gauges", "cpu")]), &ann, &sizes(&[("radar", 10_000), ("gauges", 10_000)]), Strategy::Heuristic).unwrap();
    assert_eq!(plan.assignment.platforms["f0"], "cpu");
    assert_eq!(plan.assignment.platforms["f1"], "hpc");
    assert_eq!(plan.jobs.len(), 3);
    let deps: BTreeMap<&str, Vec<String>> = plan.jobs.iter().map(|j| (j.job_id.as_str(), j.depends_on.clone())).collect();
    assert!(deps["job-f0"].is_empty());
    assert_eq!(deps["job-t0"], vec!["job-f0"]);
    assert_eq!(deps["job-f1"], vec!["job-t0"]);
    assert!(plan.costs.transfer["t0"] > 0.0);
}

#[test]
fn colocated_gpu_data_gives_one_fragment() {
    let g = DataflowGraph::parse(BUILD_FLOW).unwrap();
    let reg = registry(vec![platform("gpu", 2, 1.0), platform("other", 0, 1.0)], 100.0);
    let placed = sites(&[("radar", "gpu"), ("gauges", "gpu")]);
    let frags = fragment(&g, &placed, &reg).unwrap();
    assert_eq!(frags.len(), 1);
    let ann = annotate(&g, &FixedStats::new());
    let plan = schedule(&g, &reg, &placed, &ann, &sizes(&[("radar", 100), ("gauges", 100)]), Strategy::Heuristic).unwrap();
    assert_eq!(plan.jobs.len(), 1);
    assert_eq!(plan.costs.transfer.values().sum::<f64>(), 0.0);
    assert_eq!(plan.assignment.platforms["f0"], "gpu");
}

const TWO_SITE_JOIN: &str = r#"[
  {"GID": "j", "description": "two site join"},
  {"node_id": "la", "operator": "source", "function_alias": "read", "input": ["a_in"], "output": ["a"], "params": {"schema": "k:int64, x:float64"}},
  {"node_id": "lb", "operator": "source", "function_alias": "read", "input": ["b_in"], "output": ["b"], "params": {"schema": "k:int64, y:float64"}},
  {"node_id": "j", "operator": "join", "function_alias": "by_k", "input": ["a", "b"], "output": ["ab"]},
  {"node_id": "out", "operator": "sink", "function_alias": "write", "input": ["ab"], "output": null}
]"#;

#[test]
fn mixed_site_join_colocates_with_larger_side() {
    let g = DataflowGraph::parse(TWO_SITE_JOIN).unwrap();
    let reg = registry(vec![platform("A", 0, 1.0), platform("B", 0, 1.0)], 10.0);
    let placed = sites(&[("a_in", "A"), ("b_in", "B")]);
    let frags = fragment(&g, &placed, &reg).unwrap();
    let compute = frags.iter().filter(|f| f.kind == FragmentKind::Compute).count();
    let transfers = frags.iter().filter(|f| f.kind == FragmentKind::Transfer).count();
    assert_eq!((compute, transfers), (3, 2));
    let ann = annotate(&g, &FixedStats::new());
    let input = sizes(&[("a_in", 1000), ("b_in", 10)]);
    let plan = schedule(&g, &reg, &placed, &ann, &input, Strategy::Heuristic).unwrap();
    // Hand enumeration: moving b (10 rows x 16 bytes) is cheaper than moving a
    // (1000 rows x 16 bytes), and the join's own cost is site-independent.
    let bytes_b = 10.0 * 16.0;
    assert_eq!(plan.assignment.platforms["f2"], "A");
    assert_eq!(plan.elided_transfers.len(), 1);
    let live: Vec<&Job> = plan.jobs.iter().filter(|j| j.kind == FragmentKind::Transfer).collect();
    assert_eq!(live.len(), 1);
    assert!((plan.costs.transfer.values().sum::<f64>() - bytes_b / 10e6).abs() < 1e-15);
    assert_eq!(plan.jobs.len(), 4);
}

#[test]
fn unplaced_input_is_reported() {
    let g = DataflowGraph::parse(TWO_SITE_JOIN).unwrap();
    let reg = registry(vec![platform("A", 0, 1.0)], 10.0);
    let err = fragment(&g, &sites(&[("a_in", "A")]), &reg).unwrap_err();
    assert_eq!(err, SchedulerError::UnplacedInput("b_in".into()));
}

#[test]
fn no_gpu_anywhere_is_infeasible() {
    let g = DataflowGraph::parse(BUILD_FLOW).unwrap();
    let reg = registry(vec![platform("cpu", 0, 1.0), platform("cpu2", 0, 1.0)], 100.0);
    let placed = sites(&[("radar", "cpu"), ("gauges", "cpu")]);
    let frags = fragment(&g, &placed, &reg).unwrap();
    let ann = annotate(&g, &FixedStats::new());
    let est = crate::optimizer::estimate_cardinalities(&g, &ann, &sizes(&[("radar", 10), ("gauges", 10)])).unwrap();
    let (a, costs) = assign(&frags, &reg, &CostInputs::new(&g, &ann, &est), Strategy::Heuristic).unwrap();
    assert!(!a.feasible);
    assert!(a.diagnostics[0].starts_with("NoFeasiblePlatform"));
    assert!(matches!(materialize(&g, &frags, &a, &costs, &reg), Err(SchedulerError::InfeasibleAssignment(_))));
}

#[test]
fn incomplete_bandwidth_is_rejected() {
    let g = DataflowGraph::parse(TWO_SITE_JOIN).unwrap();
    let mut reg = registry(vec![platform("A", 0, 1.0), platform("B", 0, 1.0)], 10.0);
    reg.bandwidth = BandwidthMatrix::new();
    let placed = sites(&[("a_in", "A"), ("b_in", "B")]);
    let ann = annotate(&g, &FixedStats::new());
    let err = schedule(&g, &reg, &placed, &ann, &sizes(&[("a_in", 1), ("b_in", 1)]), Strategy::Heuristic).unwrap_err();
    assert!(matches!(err, SchedulerError::IncompleteBandwidthMatrix(_)));
}

#[test]
fn single_platform_has_zero_transfer() {
    let g = DataflowGraph::parse(TWO_SITE_JOIN).unwrap();
    let reg = registry(vec![platform("only", 0, 1.0)], 1.0);
    let placed = sites(&[("a_in", "only"), ("b_in", "only")]);
    let ann = annotate(&g, &FixedStats::new().with("by_k", 1.0, 1e-6));
    let plan = schedule(&g, &reg, &placed, &ann, &sizes(&[("a_in", 50), ("b_in", 50)]), Strategy::Exhaustive).unwrap();
    assert!(plan.assignment.platforms.values().all(|p| p == "only"));
    assert_eq!(plan.costs.transfer.values().sum::<f64>(), 0.0);
    assert_eq!(plan.costs.total, plan.costs.execution.values().sum::<f64>());
}

#[test]
fn plan_round_trips_through_json() {
    let g = DataflowGraph::parse(BUILD_FLOW).unwrap();
    let reg = registry(vec![platform("cpu", 0, 1.0), platform("hpc", 4, 4.0)], 100.0);
    let ann = annotate(&g, &FixedStats::new());
    let plan = schedule(&g, &reg, &sites(&[("radar", "cpu"), ("gauges", "cpu")]), &ann, &sizes(&[("radar", 5), ("gauges", 5)]), Strategy::Heuristic).unwrap();
    let back = ScheduledPlan::from_json(&plan.to_json()).unwrap();
    assert_eq!(back, plan);
    assert_eq!(back.to_json(), plan.to_json());
}

#[test]
fn replica_site_allows_local_placement() {
    let g = DataflowGraph::parse(BUILD_FLOW).unwrap();
    let reg = registry(vec![platform("cpu", 0, 1.0), platform("hpc", 4, 1.0)], 1.0);
    let mut placed = sites(&[("radar", "cpu"), ("gauges", "cpu")]);
    for v in placed.values_mut() {
        v.push("hpc".into());
    }
    let ann = annotate(&g, &FixedStats::new());
    let plan = schedule(&g, &reg, &placed, &ann, &sizes(&[("radar", 1000), ("gauges", 1000)]), Strategy::Exhaustive).unwrap();
    assert_eq!(plan.assignment.platforms["f0"], "hpc");
    let f0 = plan.jobs.iter().find(|j| j.fragment_id == "f0").unwrap();
    assert!(f0.staging.iter().all(|s| s.mode == StagingMode::Replica));
    assert_eq!(plan.costs.transfer.values().sum::<f64>(), 0.0);
}

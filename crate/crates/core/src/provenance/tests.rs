use std::collections::BTreeSet;
use std::time::Duration;

use chrono::Utc;
use proptest::prelude::*;

use super::*;
use crate::catalog::{Bucket, Catalog, ExecutorKind, Location, NewArtifact, PlatformDescriptor};
use crate::model::{DataflowGraph, Gid, OperatorClass, Schema};

const COPY_FLOW: &str = r#"[
  {"GID": "copy", "description": "copy"},
  {"node_id": "load", "operator": "source", "function_alias": "read_csv", "input": ["in_path"], "output": ["rows"]},
  {"node_id": "clean", "operator": "filter", "function_alias": "keep_positive", "input": ["rows"], "output": ["kept"],
   "params": {"predicate": "v > 0"}},
  {"node_id": "store", "operator": "sink", "function_alias": "write_csv", "input": ["kept", "out_path"], "output": null}
]"#;

const TRAIN_FLOW: &str = r#"[
  {"GID": "fit", "description": "fit"},
  {"node_id": "load", "operator": "source", "function_alias": "read_csv", "input": ["in_path"], "output": ["rows"]},
  {"node_id": "fit", "operator": "train", "function_alias": "ols", "input": ["rows"], "output": ["model"],
   "params": {"features": ["x"], "target": "y"}},
  {"node_id": "keep", "operator": "sink", "function_alias": "write_model", "input": ["model", "out_path"], "output": null}
]"#;

pub(crate) struct Fixture {
    pub catalog: Catalog,
    pub flow: Gid,
}

fn platform(id: &str, speed: f64) -> PlatformDescriptor {
    PlatformDescriptor {
        platform_id: id.into(),
        cpu_cores: 1,
        gpus: 0,
        relative_speed: speed,
        storage_root: "/tmp".into(),
        executor_kind: ExecutorKind::Single,
    }
}

fn fixture(flow: &str) -> Fixture {
    let mut catalog = Catalog::in_memory();
    catalog.register_platform(platform("local", 1.0)).unwrap();
    catalog.register_platform(platform("fast", 2.0)).unwrap();
    let g = DataflowGraph::parse(flow).unwrap();
    let flow = catalog.register_artifact(NewArtifact::dataflow(g)).unwrap();
    Fixture { catalog, flow }
}

fn dataset(c: &mut Catalog, name: &str) -> Gid {
    c.register_artifact(NewArtifact::dataset(
        name,
        Schema::parse_spec("v:int64").unwrap(),
        Bucket::Staging,
        Location::new("local", format!("{name}.csv")),
    ))
    .unwrap()
}

fn trace(run: Gid, node: &str, alias: &str, op: OperatorClass, ins: &[u64], out: u64) -> OperatorTrace {
    OperatorTrace {
        run_id: run,
        node_id: node.into(),
        function_alias: alias.into(),
        operator: op,
        platform_id: "local".into(),
        input_cardinalities: ins.to_vec(),
        output_cardinality: out,
        wall_time: Duration::from_millis(1),
        peak_live_tuples: out,
        produced_gid: None,
        input_gids: vec![],
        extras: Default::default(),
    }
}

fn run_record(c: &Catalog, flow: Gid) -> RunRecord {
    let now = Utc::now();
    RunRecord {
        run_id: c.new_gid(),
        dataflow: flow,
        platform_assignment: Default::default(),
        started_at: now,
        ended_at: now,
        status: RunStatus::Success,
    }
}

/// Records one copy run reading `inputs` and producing `output`.
fn copy_run(fx: &mut Fixture, inputs: &[Gid], output: Gid) -> Gid {
    let run = run_record(&fx.catalog, fx.flow);
    let id = run.run_id;
    let mut sink = trace(id, "store", "write_csv", OperatorClass::Sink, &[5], 5);
    sink.produced_gid = Some(output);
    sink.input_gids = inputs.to_vec();
    let traces = vec![
        trace(id, "load", "read_csv", OperatorClass::Source, &[], 10),
        trace(id, "clean", "keep_positive", OperatorClass::Filter, &[10], 5),
        sink,
    ];
    record_run(&mut fx.catalog, run, traces, vec![]).unwrap()
}

#[test]
fn links_sink_output_to_run_and_inputs() {
    let mut fx = fixture(COPY_FLOW);
    let a = dataset(&mut fx.catalog, "a");
    let b = dataset(&mut fx.catalog, "b");
    let run = copy_run(&mut fx, &[a], b);
    let link = fx.catalog.link_for(b).unwrap();
    assert_eq!((link.run_id, link.dataflow, link.node_id.as_str()), (run, fx.flow, "store"));
    assert_eq!(link.function_alias, "write_csv");
    assert_eq!(link.inputs, vec![a]);
    assert_eq!(link.activity, ActivityKind::Transformation);
    for alias in ["read_csv", "keep_positive", "write_csv"] {
        assert!(fx.catalog.function_by_alias(alias).is_some(), "{alias}");
    }
}

#[test]
fn bound_sources_feed_link_inputs() {
    let mut fx = fixture(COPY_FLOW);
    let a = dataset(&mut fx.catalog, "a");
    let b = dataset(&mut fx.catalog, "b");
    let mut g = fx.catalog.artifact(fx.flow).unwrap().dataflow.clone().unwrap();
    g.binding = Some([("in_path".to_string(), a)].into());
    let flow = fx.catalog.register_artifact(NewArtifact::dataflow(g)).unwrap();
    let run = run_record(&fx.catalog, flow);
    let mut sink = trace(run.run_id, "store", "write_csv", OperatorClass::Sink, &[1], 1);
    sink.produced_gid = Some(b);
    record_run(&mut fx.catalog, run, vec![sink], vec![]).unwrap();
    assert_eq!(fx.catalog.link_for(b).unwrap().inputs, vec![a]);
}

#[test]
fn rejects_unknown_node_and_dataflow() {
    let mut fx = fixture(COPY_FLOW);
    let run = run_record(&fx.catalog, fx.flow);
    let t = trace(run.run_id, "zz", "x", OperatorClass::Map, &[1], 1);
    assert_eq!(record_run(&mut fx.catalog, run.clone(), vec![t], vec![]), Err(ProvenanceError::UnknownNode("zz".into())));
    let ghost = Gid::from_u128(7);
    let bad = RunRecord { dataflow: ghost, ..run.clone() };
    assert_eq!(record_run(&mut fx.catalog, bad, vec![], vec![]), Err(ProvenanceError::UnknownDataflow(ghost)));
    assert_eq!(record_run(&mut fx.catalog, run, vec![], vec![]).unwrap(), fx.catalog.runs().next().unwrap().run_id);
    assert_eq!(derive_stats(&fx.catalog, "x", StatsDefaults::default()).sample_count, 0);
}

#[test]
fn rejects_inconsistent_traces() {
    let mut fx = fixture(COPY_FLOW);
    let b = dataset(&mut fx.catalog, "b");
    let run = run_record(&fx.catalog, fx.flow);
    let mut t = trace(run.run_id, "clean", "keep_positive", OperatorClass::Filter, &[1], 1);
    t.produced_gid = Some(b);
    assert!(matches!(record_run(&mut fx.catalog, run.clone(), vec![t], vec![]), Err(ProvenanceError::InvalidTrace(_))));
    let sink = trace(run.run_id, "store", "write_csv", OperatorClass::Sink, &[1], 1);
    assert!(matches!(record_run(&mut fx.catalog, run.clone(), vec![sink], vec![]), Err(ProvenanceError::InvalidTrace(_))));
    let backwards = RunRecord { ended_at: run.started_at - chrono::Duration::seconds(1), ..run };
    assert!(matches!(record_run(&mut fx.catalog, backwards, vec![], vec![]), Err(ProvenanceError::InvalidRun(_))));
}

#[test]
fn stats_examples() {
    let mut fx = fixture(COPY_FLOW);
    let run = run_record(&fx.catalog, fx.flow);
    let id = run.run_id;
    let traces = vec![
        trace(id, "clean", "keep_positive", OperatorClass::Filter, &[100], 10),
        trace(id, "clean", "keep_positive", OperatorClass::Filter, &[200], 20),
        trace(id, "clean", "wide_join", OperatorClass::Join, &[100, 100], 400),
    ];
    record_run(&mut fx.catalog, RunRecord { status: RunStatus::Failed, ..run }, traces, vec![]).unwrap();
    let s = derive_stats(&fx.catalog, "keep_positive", StatsDefaults::default());
    assert!((s.mean_selectivity - 0.1).abs() < 1e-15);
    assert_eq!(s.sample_count, 2);
    assert!((s.mean_cost_per_tuple - 0.002 / 300.0).abs() < 1e-15);
    assert_eq!(derive_stats(&fx.catalog, "wide_join", StatsDefaults::default()).mean_selectivity, 2.0);
    let d = derive_stats(&fx.catalog, "never_ran", StatsDefaults::default());
    assert_eq!((d.mean_selectivity, d.mean_cost_per_tuple, d.sample_count), (1.0, 1e-6, 0));
}

#[test]
fn stats_normalize_by_platform_speed() {
    let mut fx = fixture(COPY_FLOW);
    let run = run_record(&fx.catalog, fx.flow);
    let mut slow = trace(run.run_id, "clean", "f", OperatorClass::Filter, &[1000], 10);
    slow.wall_time = Duration::from_millis(2);
    let mut fast = slow.clone();
    fast.platform_id = "fast".into();
    fast.wall_time = Duration::from_millis(1);
    record_run(&mut fx.catalog, RunRecord { status: RunStatus::Failed, ..run }, vec![slow, fast], vec![]).unwrap();
    let s = derive_stats(&fx.catalog, "f", StatsDefaults::default());
    assert!((s.per_platform["local"] - 2e-6).abs() < 1e-15);
    assert!((s.per_platform["fast"] - 2e-6).abs() < 1e-15);
    assert!((s.mean_cost_per_tuple - 2e-6).abs() < 1e-15);
}

#[test]
fn chain_export_and_lineage() {
    let mut fx = fixture(COPY_FLOW);
    let d: Vec<Gid> = (0..4).map(|i| dataset(&mut fx.catalog, &format!("d{i}"))).collect();
    for w in d.windows(2) {
        copy_run(&mut fx, &[w[0]], w[1]);
    }
    assert_eq!(lineage(&fx.catalog, d[3]).unwrap(), d[..3].iter().copied().collect());
    assert!(lineage(&fx.catalog, d[0]).unwrap().is_empty());
    let doc = export_prov(&fx.catalog, d[3]).unwrap();
    assert_eq!(doc.activity.len(), 3);
    assert_eq!(doc.entity.len(), 4);
    let derived: BTreeSet<(String, String)> = doc
        .was_derived_from
        .values()
        .map(|v| (v["generatedEntity"].as_str().unwrap().to_string(), v["usedEntity"].as_str().unwrap().to_string()))
        .collect();
    let expected: BTreeSet<(String, String)> = d.windows(2).map(|w| (w[1].to_string(), w[0].to_string())).collect();
    assert_eq!(derived, expected);
    let lone = export_prov(&fx.catalog, d[0]).unwrap();
    assert_eq!((lone.entity.len(), lone.activity.len()), (1, 0));
    assert_eq!(lineage(&fx.catalog, Gid::from_u128(99)), Err(ProvenanceError::UnknownGid(Gid::from_u128(99))));
}

#[test]
fn diamond_lineage() {
    let mut fx = fixture(COPY_FLOW);
    let [a, b, c, d] = ["a", "b", "c", "d"].map(|n| dataset(&mut fx.catalog, n));
    copy_run(&mut fx, &[a], b);
    copy_run(&mut fx, &[a], c);
    copy_run(&mut fx, &[b, c], d);
    assert_eq!(lineage(&fx.catalog, d).unwrap(), BTreeSet::from([a, b, c]));
}

#[test]
fn trained_model_provenance() {
    let mut fx = fixture(TRAIN_FLOW);
    let data = dataset(&mut fx.catalog, "train");
    let model = fx.catalog.register_artifact(NewArtifact::model("m", "regression", "global")).unwrap();
    let run = run_record(&fx.catalog, fx.flow);
    let id = run.run_id;
    let mut fit = trace(id, "fit", "ols", OperatorClass::Train, &[100], 1);
    fit.produced_gid = Some(model);
    fit.input_gids = vec![data];
    let training = TrainingTrace {
        run_id: id,
        node_id: "fit".into(),
        per_epoch: vec![EpochMetric { epoch: 1, metric: "rmse".into(), value: 0.0 }],
        final_metrics: [("rmse".to_string(), 0.0)].into(),
    };
    record_run(&mut fx.catalog, run, vec![fit], vec![training]).unwrap();
    let doc = export_prov(&fx.catalog, model).unwrap();
    let act = format!("{id}:fit");
    assert_eq!(doc.was_generated_by[&format!("gen:{model}")]["activity"], act.as_str());
    assert_eq!(doc.used[&format!("use:{act}:{data}")]["entity"], data.to_string().as_str());
    assert_eq!(doc.activity[&act]["kind"], "model_training");
    assert_eq!(fx.catalog.training_traces().len(), 1);
}

#[test]
fn epochs_must_start_at_one() {
    let mut fx = fixture(TRAIN_FLOW);
    let run = run_record(&fx.catalog, fx.flow);
    let t = TrainingTrace {
        run_id: run.run_id,
        node_id: "fit".into(),
        per_epoch: vec![EpochMetric { epoch: 2, metric: "rmse".into(), value: 0.0 }],
        final_metrics: Default::default(),
    };
    assert!(matches!(record_run(&mut fx.catalog, run, vec![], vec![t]), Err(ProvenanceError::InvalidTrace(_))));
}

proptest! {
    #[test]
    fn stats_are_order_insensitive(samples in prop::collection::vec((0u64..500, 0u64..500, 0u64..5000, any::<bool>()), 1..20), seed in any::<u64>()) {
        let build = |order: &[usize]| {
            let mut fx = fixture(COPY_FLOW);
            let run = run_record(&fx.catalog, fx.flow);
            let traces = order.iter().map(|&i| {
                let (input, out, micros, fast) = samples[i];
                let mut t = trace(run.run_id, "clean", "f", OperatorClass::Filter, &[input], out);
                t.wall_time = Duration::from_micros(micros);
                if fast { t.platform_id = "fast".into(); }
                t
            }).collect();
            record_run(&mut fx.catalog, RunRecord { status: RunStatus::Failed, ..run }, traces, vec![]).unwrap();
            derive_stats(&fx.catalog, "f", StatsDefaults::default())
        };
        let forward: Vec<usize> = (0..samples.len()).collect();
        let mut shuffled = forward.clone();
        let n = shuffled.len();
        for i in 0..n {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % n as u64) as usize;
            shuffled.swap(i, j);
        }
        let a = build(&forward);
        let b = build(&shuffled);
        prop_assert_eq!(a.mean_selectivity.to_bits(), b.mean_selectivity.to_bits());
        prop_assert_eq!(a.mean_cost_per_tuple.to_bits(), b.mean_cost_per_tuple.to_bits());
        prop_assert_eq!(a.per_platform, b.per_platform);
    }

    #[test]
    fn export_matches_lineage_on_random_dags(edges in prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..3), 1..12)) {
        let mut fx = fixture(COPY_FLOW);
        let mut ds = vec![dataset(&mut fx.catalog, "root")];
        for (i, inputs) in edges.iter().enumerate() {
            let out = dataset(&mut fx.catalog, &format!("d{i}"));
            let ins: BTreeSet<Gid> = inputs.iter().map(|ix| ds[ix.index(ds.len())]).collect();
            copy_run(&mut fx, &ins.into_iter().collect::<Vec<_>>(), out);
            ds.push(out);
        }
        // Reachability oracle over the generated edge list.
        for &g in &ds {
            let mut reach = BTreeSet::new();
            let mut stack = vec![g];
            while let Some(x) = stack.pop() {
                if let Some(l) = fx.catalog.link_for(x) {
                    for i in &l.inputs {
                        if reach.insert(*i) { stack.push(*i); }
                    }
                }
            }
            let lin = lineage(&fx.catalog, g).unwrap();
            prop_assert!(!lin.contains(&g));
            prop_assert_eq!(&lin, &reach);
            let doc = export_prov(&fx.catalog, g).unwrap();
            prop_assert_eq!(doc.entity.len(), lin.len() + 1);
        }
    }
}

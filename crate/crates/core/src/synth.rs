//! Seeded generators for random dataflows and synthetic radar-like data.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value as Json};

use crate::catalog::{BandwidthMatrix, ExecutorKind, PlatformDescriptor, PlatformRegistry};
use crate::executor::{InMemoryDataset, Port};
use crate::model::{AttrType, DataflowGraph, OperatorClass, OperatorNode, PortType, Row, Schema, Value};
use crate::optimizer::FixedStats;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Upper bound on nodes, sources and sink included.
    pub max_nodes: usize,
    /// Upper bound on rows of the main input.
    pub max_rows: usize,
    /// Upper bound on rows of the secondary join input.
    pub max_side_rows: usize,
    pub opaque_probability: f64,
    pub join_probability: f64,
    pub train_probability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_nodes: 12,
            max_rows: 10_000,
            max_side_rows: 300,
            opaque_probability: 0.15,
            join_probability: 0.4,
            train_probability: 0.15,
        }
    }
}

/// A random dataflow with its inputs and per-function statistics.
#[derive(Debug, Clone)]
pub struct SynthCase {
    pub graph: DataflowGraph,
    pub inputs: BTreeMap<String, Port>,
    pub stats: FixedStats,
}

struct Builder<'a> {
    rng: &'a mut StdRng,
    cfg: &'a SynthConfig,
    nodes: Vec<OperatorNode>,
    stats: FixedStats,
    fresh: usize,
}

type Cols = Vec<(String, AttrType)>;

impl Builder<'_> {
    fn budget(&self) -> usize {
        // One node is reserved for the sink.
        self.cfg.max_nodes.saturating_sub(self.nodes.len() + 1)
    }

    fn push(&mut self, op: OperatorClass, inputs: Vec<String>, params: Json) -> String {
        self.fresh += 1;
        let id = format!("{}{}", op.name(), self.fresh);
        let out = format!("c{}", self.fresh);
        let mut params: BTreeMap<String, Json> = serde_json::from_value(params).unwrap_or_default();
        if matches!(op, OperatorClass::Filter | OperatorClass::Map | OperatorClass::Cast) && self.rng.gen_bool(self.cfg.opaque_probability) {
            params.insert("opaque".into(), Json::Bool(true));
        }
        let alias = format!("fn_{id}");
        let sel = match op {
            OperatorClass::Filter => self.rng.gen_range(0.05..1.0),
            OperatorClass::Map | OperatorClass::Cast => 1.0,
            _ => self.rng.gen_range(0.1..1.0),
        };
        let cost = self.rng.gen_range(1..50) as f64 * 1e-7;
        self.stats = std::mem::take(&mut self.stats).with(&alias, sel, cost);
        self.nodes.push(OperatorNode { node_id: id, operator: op, function_alias: alias, inputs, outputs: vec![out.clone()], params });
        out
    }

    fn numeric(cols: &Cols, ty: AttrType) -> Vec<String> {
        cols.iter().filter(|(_, t)| *t == ty).map(|(c, _)| c.clone()).collect()
    }

    fn filter_text(&mut self, cols: &Cols) -> Option<String> {
        let ints = Self::numeric(cols, AttrType::Int64);
        let floats = Self::numeric(cols, AttrType::Float64);
        let strings = Self::numeric(cols, AttrType::String);
        let ops = ["<", "<=", ">", ">=", "!="];
        let atom = |rng: &mut StdRng| -> Option<String> {
            let op = ops[rng.gen_range(0..ops.len())];
            match rng.gen_range(0..3) {
                0 if !ints.is_empty() => Some(format!("{} {op} {}", ints[rng.gen_range(0..ints.len())], rng.gen_range(-40..40))),
                1 if !floats.is_empty() => {
                    Some(format!("{} {op} {:.2}", floats[rng.gen_range(0..floats.len())], rng.gen_range(-80..80) as f64 * 0.5))
                }
                _ if !strings.is_empty() => Some(format!("{} != '{}'", strings[rng.gen_range(0..strings.len())], ["p", "q", "r"][rng.gen_range(0..3)])),
                _ if !ints.is_empty() => Some(format!("{} {op} {}", ints[0], rng.gen_range(-40..40))),
                _ => None,
            }
        };
        let first = atom(self.rng)?;
        if self.rng.gen_bool(0.25) {
            if let Some(second) = atom(self.rng) {
                let join = if self.rng.gen_bool(0.5) { "and" } else { "or" };
                return Some(format!("{first} {join} {second}"));
            }
        }
        Some(first)
    }

    /// Appends one random transformation; returns the new connector.
    fn step(&mut self, c: String, cols: &mut Cols, allow_set_ops: bool) -> String {
        loop {
            match self.rng.gen_range(0..10) {
                0..=3 => {
                    if let Some(pred) = self.filter_text(cols) {
                        return self.push(OperatorClass::Filter, vec![c], json!({"predicate": pred}));
                    }
                }
                4..=5 => {
                    let ints = Self::numeric(cols, AttrType::Int64);
                    let floats = Self::numeric(cols, AttrType::Float64);
                    let use_float = !floats.is_empty() && (ints.is_empty() || self.rng.gen_bool(0.4));
                    let (src, expr, ty) = if use_float {
                        let a = &floats[self.rng.gen_range(0..floats.len())];
                        (a.clone(), format!("{a} * 0.5 + {}", self.rng.gen_range(-3..4)), AttrType::Float64)
                    } else if !ints.is_empty() {
                        let a = &ints[self.rng.gen_range(0..ints.len())];
                        let b = &ints[self.rng.gen_range(0..ints.len())];
                        let e = match self.rng.gen_range(0..3) {
                            0 => format!("{a} + {}", self.rng.gen_range(-5..6)),
                            1 => format!("{a} - {b}"),
                            _ => format!("{a} * 2"),
                        };
                        (a.clone(), e, AttrType::Int64)
                    } else {
                        continue;
                    };
                    let target = if self.rng.gen_bool(0.5) {
                        format!("m{}", self.fresh + 1)
                    } else {
                        let same: Vec<String> = Self::numeric(cols, ty).into_iter().filter(|n| *n != src || self.rng.gen_bool(0.5)).collect();
                        same.first().cloned().unwrap_or_else(|| format!("m{}", self.fresh + 1))
                    };
                    match cols.iter_mut().find(|(n, _)| *n == target) {
                        Some(slot) => slot.1 = ty,
                        None => cols.push((target.clone(), ty)),
                    }
                    return self.push(OperatorClass::Map, vec![c], json!({"column": target, "expr": expr}));
                }
                6 => {
                    let ints = Self::numeric(cols, AttrType::Int64);
                    // Join keys keep their type so later joins stay valid.
                    let candidates: Vec<&String> = ints.iter().filter(|n| n.as_str() != "k").collect();
                    if let Some(col) = candidates.first().map(|c| (*c).clone()) {
                        cols.iter_mut().find(|(n, _)| *n == col).unwrap().1 = AttrType::Float64;
                        return self.push(OperatorClass::Cast, vec![c], json!({"columns": {col: "float64"}}));
                    }
                }
                7 if allow_set_ops => {
                    let keys: Vec<String> = match self.rng.gen_range(0..3) {
                        0 => vec![],
                        _ => cols.iter().take(1 + self.rng.gen_range(0..2)).map(|(n, _)| n.clone()).collect(),
                    };
                    return self.push(OperatorClass::Dedup, vec![c], json!({"keys": keys}));
                }
                8 if allow_set_ops && cols.iter().any(|(n, _)| n == "g") => {
                    let mut aggs = vec![json!({"fn": "count"})];
                    let mut out: Cols = vec![("g".into(), AttrType::Int64), ("count".into(), AttrType::Int64)];
                    for (n, t) in cols.iter().filter(|(n, t)| t.is_numeric() && n != "g") {
                        if self.rng.gen_bool(0.5) {
                            let f = ["sum", "mean", "min", "max"][self.rng.gen_range(0..4)];
                            let ty = match (f, t) {
                                ("sum", AttrType::Int64) => AttrType::Int64,
                                ("sum" | "mean", _) => AttrType::Float64,
                                _ => *t,
                            };
                            aggs.push(json!({"fn": f, "column": n}));
                            out.push((format!("{f}_{n}"), ty));
                        }
                    }
                    *cols = out;
                    return self.push(OperatorClass::GroupBy, vec![c], json!({"keys": ["g"], "aggs": aggs}));
                }
                _ => {}
            }
        }
    }
}

fn left_rows(rng: &mut StdRng, n: usize) -> Vec<Row> {
    (0..n)
        .map(|_| {
            vec![
                Value::Int(rng.gen_range(0..1000)),
                Value::Int(rng.gen_range(0..10)),
                Value::Int(rng.gen_range(-50..=50)),
                Value::Float(rng.gen_range(-400..400) as f64 * 0.25),
                Value::Str(["p", "q", "r", "s"][rng.gen_range(0..4)].to_string()),
            ]
        })
        .collect()
}

fn right_rows(rng: &mut StdRng, n: usize) -> Vec<Row> {
    (0..n)
        .map(|_| vec![Value::Int(rng.gen_range(0..1000)), Value::Int(rng.gen_range(-50..=50)), Value::Float(rng.gen_range(-200..200) as f64 * 0.5)])
        .collect()
}

pub const LEFT_SCHEMA: &str = "k:int64, g:int64, a:int64, x:float64, s:string";
pub const RIGHT_SCHEMA: &str = "k:int64, b:int64, y:float64";

fn cols_of(spec: &str) -> Cols {
    Schema::parse_spec(spec).unwrap().attributes().iter().map(|a| (a.name.clone(), a.ty)).collect()
}

/// Builds a random valid dataflow of at most `cfg.max_nodes` nodes over one
/// or two sources, with matching random inputs.
pub fn random_case(seed: u64, cfg: &SynthConfig) -> SynthCase {
    let mut rng = StdRng::seed_from_u64(seed);
    let rows = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=cfg.max_rows.max(1)) };
    let left = left_rows(&mut rng, rows);
    let two = cfg.max_nodes >= 5 && rng.gen_bool(cfg.join_probability);
    let side_rows = rng.gen_range(0..=cfg.max_side_rows);
    let side = if two { right_rows(&mut rng, side_rows) } else { vec![] };
    let train = rng.gen_bool(cfg.train_probability);

    let mut b = Builder { rng: &mut rng, cfg, nodes: vec![], stats: FixedStats::new(), fresh: 0 };
    let mut inputs = BTreeMap::new();
    inputs.insert("left_in".to_string(), Port::Table(InMemoryDataset::new(Schema::parse_spec(LEFT_SCHEMA).unwrap(), left)));
    b.nodes.push(OperatorNode {
        node_id: "load_left".into(),
        operator: OperatorClass::Source,
        function_alias: "read_left".into(),
        inputs: vec!["left_in".into()],
        outputs: vec!["left".into()],
        params: BTreeMap::from([("schema".to_string(), Json::String(LEFT_SCHEMA.into()))]),
    });
    let mut cols = cols_of(LEFT_SCHEMA);
    let mut c = "left".to_string();
    if two {
        inputs.insert("right_in".to_string(), Port::Table(InMemoryDataset::new(Schema::parse_spec(RIGHT_SCHEMA).unwrap(), side)));
        b.nodes.push(OperatorNode {
            node_id: "load_right".into(),
            operator: OperatorClass::Source,
            function_alias: "read_right".into(),
            inputs: vec!["right_in".into()],
            outputs: vec!["right".into()],
            params: BTreeMap::from([("schema".to_string(), Json::String(RIGHT_SCHEMA.into()))]),
        });
        let mut rc = "right".to_string();
        let mut rcols = cols_of(RIGHT_SCHEMA);
        let pre = b.rng.gen_range(0..=2usize).min(b.budget().saturating_sub(2));
        for _ in 0..pre {
            c = b.step(c, &mut cols, false);
        }
        if b.budget() > 2 && b.rng.gen_bool(0.5) {
            rc = b.step(rc, &mut rcols, false);
        }
        // Column names other than the key must not collide across sides.
        let clash = rcols.iter().any(|(n, _)| n != "k" && cols.iter().any(|(m, _)| m == n));
        let key_ok = cols.iter().any(|(n, t)| n == "k" && *t == AttrType::Int64);
        if !clash && key_ok {
            c = b.push(OperatorClass::Join, vec![c, rc], json!({"keys": ["k"]}));
            cols.extend(rcols.into_iter().filter(|(n, _)| n != "k"));
        } else {
            b.nodes.retain(|n| n.node_id != "load_right" && !n.inputs.contains(&"right".to_string()));
            inputs.remove("right_in");
        }
    }
    let reserve = if train { 2 } else { 0 };
    let n_steps = b.rng.gen_range(0..=b.budget().saturating_sub(reserve));
    let mut set_ops = 0;
    for _ in 0..n_steps {
        let allow = set_ops < 2;
        let before = b.nodes.len();
        c = b.step(c, &mut cols, allow);
        if matches!(b.nodes[before].operator, OperatorClass::Dedup | OperatorClass::GroupBy) {
            set_ops += 1;
        }
    }
    let numeric: Vec<String> = cols.iter().filter(|(_, t)| t.is_numeric()).map(|(n, _)| n.clone()).collect();
    if train && numeric.len() >= 2 && b.budget() >= 2 {
        let target = numeric[0].clone();
        let features: Vec<String> = numeric[1..].iter().take(2).cloned().collect();
        let model = b.push(OperatorClass::Train, vec![c.clone()], json!({"features": features, "target": target}));
        c = b.push(OperatorClass::Predict, vec![c, model], json!({}));
    }
    b.nodes.push(OperatorNode {
        node_id: "store".into(),
        operator: OperatorClass::Sink,
        function_alias: "write_out".into(),
        inputs: vec![c],
        outputs: vec![],
        params: BTreeMap::from([("name".to_string(), Json::String("out".into()))]),
    });
    let stats = std::mem::take(&mut b.stats);
    let graph = DataflowGraph::from_nodes(format!("synth-{seed}"), "random dataflow", std::mem::take(&mut b.nodes)).expect("generated graph is well formed");
    SynthCase { graph, inputs, stats }
}

pub const RADAR_SCHEMA: &str = "station:string, ts:string, lat:string, lon:string, dbz:float64";

/// Concatenated rows of `n_files` radar-like files. Reflectivity is uniform
/// on [0, 100) and about 2% of rows repeat their predecessor.
pub fn radar_rows(n_files: usize, rows_per_file: usize, seed: u64) -> InMemoryDataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let base = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut rows: Vec<Row> = Vec::with_capacity(n_files * rows_per_file);
    for f in 0..n_files {
        for r in 0..rows_per_file {
            if r > 0 && rng.gen_bool(0.02) {
                let prev = rows.last().unwrap().clone();
                rows.push(prev);
                continue;
            }
            let station = r % 50;
            let ts = base + Duration::seconds((f * 300 + r / 50) as i64);
            rows.push(vec![
                Value::Str(format!("S{station:03}")),
                Value::Str(ts.format("%Y-%m-%dT%H:%M:%S").to_string()),
                Value::Str(format!("{:.3}", -22.9 + station as f64 * 0.01)),
                Value::Str(format!("{:.3}", -43.2 - station as f64 * 0.01)),
                Value::Float(rng.gen_range(0..1000) as f64 * 0.1),
            ]);
        }
    }
    InMemoryDataset::new(Schema::parse_spec(RADAR_SCHEMA).unwrap(), rows)
}

/// Radar cleaning flow: cast of the coordinate and time columns, a
/// reflectivity filter keeping about `keep` of the rows, dedup, store.
pub fn radar_pipeline(keep: f64) -> DataflowGraph {
    let threshold = 100.0 * (1.0 - keep.clamp(0.0, 1.0));
    let doc = json!([
        {"GID": "radar-clean", "description": "radar cleaning"},
        {"node_id": "load", "operator": "source", "function_alias": "radar_read", "input": ["radar_files"], "output": ["raw"],
         "params": {"schema": RADAR_SCHEMA}},
        {"node_id": "cast", "operator": "cast", "function_alias": "radar_cast", "input": ["raw"], "output": ["typed"],
         "params": {"columns": {"ts": "timestamp", "lat": "float64", "lon": "float64"}}},
        {"node_id": "strong", "operator": "filter", "function_alias": "radar_filter", "input": ["typed"], "output": ["kept"],
         "params": {"predicate": format!("dbz >= {threshold:.1}")}},
        {"node_id": "dedup", "operator": "dedup", "function_alias": "radar_dedup", "input": ["kept"], "output": ["unique"],
         "params": {"keys": ["station", "ts"]}},
        {"node_id": "store", "operator": "sink", "function_alias": "radar_store", "input": ["unique"], "output": null,
         "params": {"name": "radar_clean"}}
    ]);
    DataflowGraph::parse(&doc.to_string()).expect("radar pipeline is well formed")
}

/// A random scheduling instance: a bound-shape dataflow, platforms with
/// random speeds, GPUs and bandwidths, input sites and sizes.
#[derive(Debug, Clone)]
pub struct ScheduleCase {
    pub graph: DataflowGraph,
    pub registry: PlatformRegistry,
    pub placements: BTreeMap<String, Vec<String>>,
    pub sizes: BTreeMap<String, u64>,
    pub stats: FixedStats,
}

/// Up to three sources joined pairwise, with filters and an optional
/// GPU learner, spread over one to three platforms. Yields at most six
/// compute fragments.
pub fn random_schedule_case(seed: u64) -> ScheduleCase {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_platforms = rng.gen_range(1..=3);
    let ids: Vec<String> = (0..n_platforms).map(|i| format!("p{i}")).collect();
    let train = rng.gen_bool(0.5);
    let gpu_needed = train && rng.gen_bool(0.6);
    let gpu_host = rng.gen_range(0..n_platforms);
    let platforms = ids
        .iter()
        .enumerate()
        .map(|(i, id)| PlatformDescriptor {
            platform_id: id.clone(),
            cpu_cores: 8,
            gpus: u32::from(i == gpu_host || rng.gen_bool(0.2)),
            relative_speed: rng.gen_range(0.5..4.0),
            storage_root: format!("/data/{id}"),
            executor_kind: ExecutorKind::Single,
        })
        .collect();
    let mut bandwidth = BandwidthMatrix::new();
    for a in &ids {
        for b in &ids {
            if a != b {
                bandwidth.set(a, b, rng.gen_range(1.0..1000.0));
            }
        }
    }

    let mut stats = FixedStats::new();
    let mut nodes = Vec::new();
    let mut placements = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    let mut input_types = BTreeMap::new();
    let mut streams = Vec::new();
    let n_src = rng.gen_range(1..=3);
    for i in 0..n_src {
        let placeholder = format!("in{i}");
        let schema = if i == 0 { "k:int64, v0:float64, y:float64".to_string() } else { format!("k:int64, v{i}:float64") };
        let mut sites = vec![ids[rng.gen_range(0..n_platforms)].clone()];
        if n_platforms > 1 && rng.gen_bool(0.25) {
            let extra = ids[rng.gen_range(0..n_platforms)].clone();
            if !sites.contains(&extra) {
                sites.push(extra);
            }
        }
        placements.insert(placeholder.clone(), sites);
        input_types.insert(placeholder.clone(), PortType::table(Schema::parse_spec(&schema).expect("valid schema")));
        sizes.insert(placeholder.clone(), 10u64.pow(rng.gen_range(2..=6)) * rng.gen_range(1..10));
        let alias = format!("read{i}");
        stats = stats.with(&alias, 1.0, rng.gen_range(1e-8..1e-6));
        nodes.push(OperatorNode {
            node_id: format!("load{i}"),
            operator: OperatorClass::Source,
            function_alias: alias,
            inputs: vec![placeholder],
            outputs: vec![format!("s{i}")],
            params: BTreeMap::from([("schema".to_string(), json!(schema))]),
        });
        let mut cur = format!("s{i}");
        for j in 0..rng.gen_range(0..=2) {
            let id = format!("f{i}_{j}");
            stats = stats.with(&id, rng.gen_range(0.05..1.0), rng.gen_range(1e-8..1e-5));
            let out = format!("{id}_out");
            nodes.push(OperatorNode {
                node_id: id.clone(),
                operator: OperatorClass::Filter,
                function_alias: id.clone(),
                inputs: vec![cur],
                outputs: vec![out.clone()],
                params: BTreeMap::from([("predicate".to_string(), json!(format!("v{i} >= {}", j)))]),
            });
            cur = out;
        }
        streams.push(cur);
    }
    let mut joins = 0;
    while streams.len() > 1 {
        let a = streams.remove(0);
        let b = streams.remove(rng.gen_range(0..streams.len()));
        let id = format!("j{joins}");
        joins += 1;
        stats = stats.with(&id, rng.gen_range(0.1..1.0), rng.gen_range(1e-8..1e-5));
        nodes.push(OperatorNode {
            node_id: id.clone(),
            operator: OperatorClass::Join,
            function_alias: id.clone(),
            inputs: vec![a, b],
            outputs: vec![format!("{id}_out")],
            params: BTreeMap::from([("keys".to_string(), json!(["k"]))]),
        });
        streams.push(format!("{id}_out"));
    }
    let mut last = streams.pop().expect("one stream remains");
    if train {
        stats = stats.with("learn", 1.0, rng.gen_range(1e-7..1e-4));
        nodes.push(OperatorNode {
            node_id: "fit".into(),
            operator: OperatorClass::Train,
            function_alias: "learn".into(),
            inputs: vec![last],
            outputs: vec!["model".into()],
            params: BTreeMap::from([
                ("features".to_string(), json!(["v0"])),
                ("target".to_string(), json!("y")),
                ("gpus".to_string(), json!(u32::from(gpu_needed))),
            ]),
        });
        last = "model".into();
    }
    nodes.push(OperatorNode {
        node_id: "store".into(),
        operator: OperatorClass::Sink,
        function_alias: "store".into(),
        inputs: vec![last],
        outputs: vec![],
        params: BTreeMap::new(),
    });
    let mut graph = DataflowGraph::from_nodes(format!("sched-{seed}"), "random schedule case", nodes).expect("generated graph is acyclic");
    graph.input_types = input_types;
    ScheduleCase { graph, registry: PlatformRegistry { platforms, bandwidth }, placements, sizes, stats }
}

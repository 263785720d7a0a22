#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use artiflow_core::catalog::{Bucket, Catalog, ExecutorKind, Location, NewArtifact, PlatformDescriptor};
use artiflow_core::executor::{run, RunOptions, RunResult};
use artiflow_core::model::{bind, FunctionRegistry, Gid};
use artiflow_core::optimizer::{annotate, FixedStats};
use artiflow_core::scheduler::{placements_from_catalog, schedule, ScheduledPlan, Strategy};
use artiflow_core::{DataflowGraph, Schema};
use serde_json::Value as Json;
use tempfile::TempDir;

pub struct World {
    pub dir: TempDir,
    pub catalog: Catalog,
}

impl World {
    /// A catalog with one platform per `(id, gpus)` entry, each with its own storage root.
    pub fn new(platforms: &[(&str, u32)]) -> World {
        let dir = tempfile::tempdir().unwrap();
        let mut catalog = Catalog::open(dir.path().join("catalog.ndjson")).unwrap();
        for (id, gpus) in platforms {
            let root = dir.path().join(id);
            fs::create_dir_all(&root).unwrap();
            catalog
                .register_platform(PlatformDescriptor {
                    platform_id: id.to_string(),
                    cpu_cores: 4,
                    gpus: *gpus,
                    relative_speed: 1.0,
                    storage_root: root.to_string_lossy().into_owned(),
                    executor_kind: ExecutorKind::Single,
                })
                .unwrap();
        }
        let ids: Vec<String> = platforms.iter().map(|p| p.0.to_string()).collect();
        let mut entries = Vec::new();
        for a in &ids {
            for b in &ids {
                if a != b {
                    entries.push(artiflow_core::catalog::BandwidthEntry { from: a.clone(), to: b.clone(), mbps: 100.0 });
                }
            }
        }
        catalog.set_bandwidth(&entries).unwrap();
        World { dir, catalog }
    }

    pub fn root(&self, platform: &str) -> PathBuf {
        self.dir.path().join(platform)
    }

    /// Writes a CSV on `platform` and registers it as a landing dataset.
    pub fn dataset(&mut self, name: &str, platform: &str, schema: &str, rows: &[String]) -> Gid {
        let path = self.root(platform).join(format!("{name}.csv"));
        let schema = Schema::parse_spec(schema).unwrap();
        let header: Vec<&str> = schema.names().collect();
        let mut text = header.join(",") + "\n";
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        fs::write(&path, text).unwrap();
        let mut new = NewArtifact::dataset(name, schema, Bucket::Landing, Location::new(platform, path.to_string_lossy()));
        new.dataset.as_mut().unwrap().rows = Some(rows.len() as u64);
        self.catalog.register_artifact(new).unwrap()
    }

    pub fn plan(&self, flow: &str, bindings: &[(&str, Gid)], params: &[(&str, &str)]) -> ScheduledPlan {
        let graph = DataflowGraph::parse(flow).unwrap();
        let bindings: BTreeMap<String, Gid> = bindings.iter().map(|(k, g)| (k.to_string(), *g)).collect();
        let params: BTreeMap<String, Json> = params.iter().map(|(k, v)| (k.to_string(), Json::from(*v))).collect();
        let concrete = bind(&graph, &bindings, &params, &self.catalog, &FunctionRegistry::new()).unwrap();
        let (sites, rows) = placements_from_catalog(&self.catalog, &concrete).unwrap();
        let registry = self.catalog.platform_registry().unwrap();
        let ann = annotate(&concrete, &FixedStats::new());
        schedule(&concrete, &registry, &sites, &ann, &rows, Strategy::Heuristic).unwrap()
    }

    pub fn run(&mut self, plan: &ScheduledPlan, backend: Option<ExecutorKind>) -> RunResult {
        run(&mut self.catalog, plan, RunOptions { backend, workers: 3 }).unwrap()
    }

    pub fn output_text(&self, gid: Gid) -> String {
        let rec = self.catalog.artifact(gid).unwrap();
        let path = rec.dataset.as_ref().map(|d| d.location.path.clone()).or_else(|| rec.location.as_ref().map(|l| l.path.clone())).unwrap();
        fs::read_to_string(path).unwrap()
    }
}

pub const RADAR: &str = "k:int64, dbz:float64";
pub const GAUGES: &str = "k:int64, rain:float64";
pub const GRID: &str = "k:int64, elev:float64";

/// Training flow: three sources, one join, a GPU learner, a model sink.
pub const TRAIN_FLOW: &str = r#"[
  {"GID": "train", "description": "rain model training"},
  {"node_id": "load_data", "operator": "source", "function_alias": "training_load_data",
   "input": ["radar_data_path", "rain_gauge_data_path", "grid_data_path"], "output": ["df_radar", "df_rain_gauge", "df_grid"]},
  {"node_id": "preprocess", "operator": "join", "function_alias": "training_preprocessing",
   "input": ["df_radar", "df_rain_gauge", "df_grid"], "output": ["X"]},
  {"node_id": "fit", "operator": "train", "function_alias": "training_fit", "input": ["X"], "output": ["model"],
   "params": {"features": ["dbz", "elev"], "target": "rain", "gpus": 1}},
  {"node_id": "save", "operator": "sink", "function_alias": "training_save", "input": ["model"], "output": null,
   "params": {"name": "rain_model"}}
]"#;

/// Inference flow: three table sources, a model source, a join, predict and a sink.
pub const INFER_FLOW: &str = r#"[
  {"GID": "hash_id", "description": "inference"},
  {"node_id": "load_data", "operator": "source", "function_alias": "inference_load_data",
   "input": ["radar_data_path", "rain_gauge_data_path", "grid_data_path"], "output": ["df_radar", "df_rain_gauge", "df_grid"]},
  {"node_id": "load_model", "operator": "source", "function_alias": "inference_load_model", "input": ["model_path"], "output": ["model"]},
  {"node_id": "preprocess", "operator": "Join", "function_alias": "inference_preprocessing",
   "input": ["df_radar", "df_rain_gauge", "df_grid"], "output": ["X"]},
  {"node_id": "predict", "operator": "predict", "function_alias": "inference_predict", "input": ["X", "model"], "output": ["output"]},
  {"node_id": "save", "operator": "sink", "function_alias": "inference_save", "input": ["output", "output_path"], "output": null}
]"#;

/// rain = 0.5 dbz + 2 elev + 1 on keys 0..n.
pub fn weather_rows(n: i64) -> (Vec<String>, Vec<String>, Vec<String>) {
    let dbz = |k: i64| (k * 7 % 50) as f64;
    let elev = |k: i64| (k % 5) as f64 * 1.5;
    let radar = (0..n).map(|k| format!("{k},{}", dbz(k))).collect();
    let gauges = (0..n).map(|k| format!("{k},{}", 0.5 * dbz(k) + 2.0 * elev(k) + 1.0)).collect();
    let grid = (0..n).map(|k| format!("{k},{}", elev(k))).collect();
    (radar, gauges, grid)
}

pub struct Weather {
    pub radar: Gid,
    pub gauges: Gid,
    pub grid: Gid,
}

pub fn weather(w: &mut World, platform: &str, n: i64) -> Weather {
    let (r, g, e) = weather_rows(n);
    Weather {
        radar: w.dataset("radar", platform, RADAR, &r),
        gauges: w.dataset("gauges", platform, GAUGES, &g),
        grid: w.dataset("grid", platform, GRID, &e),
    }
}

impl Weather {
    pub fn bindings(&self) -> Vec<(&'static str, Gid)> {
        vec![("radar_data_path", self.radar), ("rain_gauge_data_path", self.gauges), ("grid_data_path", self.grid)]
    }
}

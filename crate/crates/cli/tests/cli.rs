use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;
use tempfile::TempDir;

struct Session {
    dir: TempDir,
}

impl Session {
    fn new() -> Session {
        Session { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn cmd(&self, args: &[&str]) -> Command {
        let mut c = Command::new(env!("CARGO_BIN_EXE_artiflow"));
        c.args(args).current_dir(self.dir.path()).env("GYP_CATALOG", self.path("catalog.ndjson")).env_remove("GYP_WORKERS");
        c
    }

    fn raw(&self, args: &[&str]) -> Output {
        self.cmd(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.raw(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap().trim().to_string()
    }

    fn json(&self, args: &[&str]) -> Json {
        let mut full = vec!["--json"];
        full.extend_from_slice(args);
        let text = self.ok(&full);
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("{args:?} printed invalid JSON ({e}): {text}"))
    }

    fn code(&self, args: &[&str]) -> i32 {
        self.raw(args).status.code().unwrap()
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn platforms(&self) {
        for (id, gpus) in [("cpu", "0"), ("hpc", "2")] {
            let root = self.path(id);
            self.ok(&["platforms", "add", "--id", id, "--gpus", gpus, "--root", root.to_str().unwrap()]);
        }
        self.ok(&["platforms", "bandwidth", "--from", "cpu", "--to", "hpc", "--mbps", "100", "--both"]);
    }

    /// Registers radar, gauge and grid tables where rain = 0.5 dbz + 2 elev + 1.
    fn weather(&self, n: i64) -> [String; 3] {
        let dbz = |k: i64| (k * 7 % 50) as f64;
        let elev = |k: i64| (k % 5) as f64 * 1.5;
        let mut radar = String::from("k,dbz\n");
        let mut gauges = String::from("k,rain\n");
        let mut grid = String::from("k,elev\n");
        for k in 0..n {
            radar += &format!("{k},{}\n", dbz(k));
            gauges += &format!("{k},{}\n", 0.5 * dbz(k) + 2.0 * elev(k) + 1.0);
            grid += &format!("{k},{}\n", elev(k));
        }
        let reg = |name: &str, text: &str, schema: &str| {
            let f = self.write(&format!("{name}.csv"), text);
            self.ok(&["register", "--kind", "dataset", "--file", &f, "--schema", schema, "--platform", "cpu", "--domain", "weather"])
        };
        [
            reg("radar", &radar, "k:int64, dbz:float64"),
            reg("gauges", &gauges, "k:int64, rain:float64"),
            reg("grid", &grid, "k:int64, elev:float64"),
        ]
    }
}

const TRAIN_FLOW: &str = r#"[
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

const FILTER_FLOW: &str = r#"[
  {"GID": "clean", "description": "strong echoes"},
  {"node_id": "load", "operator": "source", "function_alias": "read_radar", "input": ["radar_in"], "output": ["r"]},
  {"node_id": "strong", "operator": "filter", "function_alias": "strong_echo", "input": ["r"], "output": ["s"],
   "params": {"predicate": "dbz >= 25"}},
  {"node_id": "store", "operator": "sink", "function_alias": "store", "input": ["s"], "output": null,
   "params": {"name": "strong_radar"}}
]"#;

fn bindings(gids: &[String; 3]) -> Vec<String> {
    ["radar_data_path", "rain_gauge_data_path", "grid_data_path"]
        .iter()
        .zip(gids)
        .flat_map(|(p, g)| ["--bind".to_string(), format!("{p}={g}")])
        .collect()
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn pipeline_trains_on_gpu_platform_and_prints_outputs() {
    let s = Session::new();
    s.platforms();
    let gids = s.weather(30);
    let flow = s.write("train.json", TRAIN_FLOW);
    let mut args = vec!["pipeline", flow.as_str()];
    let b = bindings(&gids);
    args.extend(strs(&b));
    let out = s.json(&args);
    let model = out["outputs"]["save"].as_str().unwrap().to_string();
    assert_eq!(out["status"], "success");

    let shown = s.json(&["show", &model]);
    assert_eq!(shown["kind"], "model");
    assert_eq!(shown["location"]["platform"], "hpc");
    let path = shown["location"]["path"].as_str().unwrap();
    let stored: Json = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let coef = stored["coefficients"].as_array().unwrap();
    assert!((coef[0].as_f64().unwrap() - 0.5).abs() < 1e-9 && (coef[1].as_f64().unwrap() - 2.0).abs() < 1e-9, "{stored}");

    let lineage = s.json(&["prov", "lineage", &model]);
    let mut up: Vec<String> = lineage["upstream"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    up.sort();
    let mut expected = gids.to_vec();
    expected.push(out["outputs"]["fit"].as_str().unwrap().to_string());
    expected.sort();
    assert_eq!(up, expected);
}

#[test]
fn activities_are_queryable_after_one_run() {
    let s = Session::new();
    s.platforms();
    let gids = s.weather(10);
    let flow = s.write("train.json", TRAIN_FLOW);
    let mut args = vec!["pipeline", flow.as_str()];
    let b = bindings(&gids);
    args.extend(strs(&b));
    let run = s.json(&args);
    let run_id = run["run_id"].as_str().unwrap();
    let answers = s.json(&["kg", "query", "?- is_activity(A)."]);
    let mut acts: Vec<&str> = answers["answers"].as_array().unwrap().iter().map(|a| a["A"].as_str().unwrap()).collect();
    acts.sort();
    // one activity per node that produced an artifact
    assert_eq!(acts, vec![format!("{run_id}:fit"), format!("{run_id}:save")]);
}

#[test]
fn classify_change_prints_the_class() {
    let s = Session::new();
    s.platforms();
    let model = s.write(
        "m.json",
        r#"{"kind": "least-squares-linear", "coefficients": [1.0], "intercept": 0.0,
            "feature_names": ["x"], "target_name": "y", "training_metrics": {"rmse": 0.0}}"#,
    );
    let gid = s.ok(&["register", "--kind", "model", "--file", &model, "--platform", "cpu", "--name", "m"]);
    assert_eq!(s.ok(&["classify-change", &gid, "--flags", "algorithm_changed"]), "NewModel");
    assert_eq!(s.ok(&["classify-change", &gid, "--flags", "hyperparameters_changed,minor_refactor"]), "NewVersion");
    assert_eq!(s.ok(&["classify-change", &gid, "--flags", "training_data_changed,domain_changed"]), "NewModel");
    assert_eq!(s.code(&["classify-change", &gid]), 1, "empty change set");
    assert_eq!(s.code(&["classify-change", &gid, "--flags", "renamed"]), 1);
}

#[test]
fn mutations_are_visible_to_later_queries() {
    let s = Session::new();
    s.platforms();
    let listed = s.json(&["platforms", "list"]);
    assert_eq!(listed["platforms"].as_array().unwrap().len(), 2);
    assert_eq!(listed["bandwidth"].as_array().unwrap().len(), 2);

    let [radar, _, _] = s.weather(5);
    let shown = s.json(&["show", &radar]);
    assert_eq!(shown["dataset"]["bucket"], "landing");
    assert_eq!(shown["dataset"]["rows"], 5);
    s.ok(&["promote", &radar, "staging"]);
    assert_eq!(s.json(&["show", &radar])["dataset"]["bucket"], "staging");
    assert_eq!(s.code(&["promote", &radar, "landing"]), 1, "backward transition");

    let f = s.write(
        "fn.json",
        r#"{"alias": "scale", "kind": "transform_element", "reads": ["dbz"], "writes": ["dbz"], "arity_in": 1, "arity_out": 1}"#,
    );
    let fgid = s.ok(&["register", "--kind", "function", "--file", &f]);
    let functions = s.json(&["list", "--kind", "function"]);
    assert!(functions["artifacts"].as_array().unwrap().iter().any(|a| a["gid"] == fgid.as_str()));

    let flow = s.write("flow.json", FILTER_FLOW);
    let dgid = s.ok(&["register", "--kind", "dataflow", "--file", &flow]);
    assert_eq!(s.json(&["show", &dgid])["kind"], "dataflow");
}

#[test]
fn staged_commands_match_the_one_shot_pipeline() {
    let s = Session::new();
    s.platforms();
    let [radar, _, _] = s.weather(50);
    let flow = s.write("flow.json", FILTER_FLOW);
    let bind = format!("radar_in={radar}");
    s.ok(&["optimize", &flow, "--bind", &bind, "-o", "opt.json", "--trace", "trace.json"]);
    let trace: Json = serde_json::from_str(&fs::read_to_string(s.path("trace.json")).unwrap()).unwrap();
    assert!(trace["steps"].is_array());
    s.ok(&["schedule", "opt.json", "-o", "sched.json"]);
    let plan: Json = serde_json::from_str(&fs::read_to_string(s.path("sched.json")).unwrap()).unwrap();
    assert_eq!(plan["assignment"]["feasible"], true);
    let staged = s.json(&["run", "sched.json", "--backend", "partitioned", "--workers", "3"]);
    let one_shot = s.json(&["pipeline", &flow, "--bind", &bind]);

    let text = |gid: &str| {
        let rec = s.json(&["show", gid]);
        fs::read_to_string(rec["dataset"]["location"]["path"].as_str().unwrap()).unwrap()
    };
    let a = text(staged["outputs"]["store"].as_str().unwrap());
    let b = text(one_shot["outputs"]["store"].as_str().unwrap());
    assert_eq!(a, b);
    let expected = (0..50).filter(|k| (k * 7 % 50) >= 25).count();
    assert_eq!(a.lines().count(), expected + 1);
}

#[test]
fn exit_codes_follow_the_contract() {
    let s = Session::new();
    assert_eq!(s.code(&["--help"]), 0);
    assert_eq!(s.code(&["--version"]), 0);
    assert_eq!(s.code(&["no-such-command"]), 1);
    assert_eq!(s.code(&["show", "not-a-gid"]), 1);
    assert_eq!(s.code(&["show", "0123456789abcdef0123456789abcdef"]), 1, "unknown GID");
    assert_eq!(s.code(&["optimize", "missing.json"]), 1);
    let bad = s.write("bad.json", "[{\"GID\": 1, \"description\": \"x\"}, {\"node_id\": \"a\", \"operator\": \"teleport\", \"function_alias\": \"f\"}]");
    assert_eq!(s.code(&["optimize", &bad]), 1);
    assert_eq!(s.code(&["kg", "query", "?- is_activity(A"]), 1);
    assert_eq!(s.code(&["platforms", "bandwidth", "--from", "x", "--to", "y", "--mbps", "1"]), 1);
    assert_eq!(s.code(&["bench", "--files", "3:1:1"]), 1);

    fs::write(s.path("catalog.ndjson"), "{not json\n").unwrap();
    assert_eq!(s.code(&["list"]), 2, "corrupt catalog is an internal failure");
    let out = s.raw(&["list"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Corrupt"));
}

#[test]
fn error_text_names_the_module_error() {
    let s = Session::new();
    s.platforms();
    let out = s.raw(&["show", "0123456789abcdef0123456789abcdef"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("UnknownGid"));
    let out = s.raw(&["platforms", "add", "--id", "cpu", "--root", s.path("cpu").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DuplicateId"));
}

#[test]
fn json_output_parses_for_every_command() {
    let s = Session::new();
    s.platforms();
    let gids = s.weather(12);
    let flow = s.write("train.json", TRAIN_FLOW);
    let b = bindings(&gids);
    let mut pipeline = vec!["pipeline", flow.as_str()];
    pipeline.extend(strs(&b));
    let run = s.json(&pipeline);
    let model = run["outputs"]["save"].as_str().unwrap().to_string();
    let mut bind = vec!["bind", flow.as_str()];
    bind.extend(strs(&b));
    let rules = s.write("r.dl", "big(X) :- dataSet(X).\n");
    let registry = s.write(
        "reg.json",
        &format!(
            r#"{{"platforms": [{{"platform_id": "edge", "cpu_cores": 1, "gpus": 0, "relative_speed": 0.5, "storage_root": "{}"}}],
                "bandwidth": [{{"from": "edge", "to": "cpu", "mbps": 10}}, {{"from": "cpu", "to": "edge", "mbps": 10}},
                              {{"from": "edge", "to": "hpc", "mbps": 10}}, {{"from": "hpc", "to": "edge", "mbps": 10}}]}}"#,
            s.path("edge").display()
        ),
    );
    let commands: Vec<Vec<&str>> = vec![
        vec!["list"],
        vec!["list", "--kind", "dataset"],
        vec!["show", &gids[0]],
        vec!["platforms", "list"],
        vec!["platforms", "load", &registry],
        vec!["platforms", "load", &registry],
        bind,
        vec!["optimize", "train.json"],
        vec!["kg", "eval"],
        vec!["kg", "eval", &rules, "--facts"],
        vec!["kg", "query", "?- big(X).", "--rules", &rules],
        vec!["kg", "query", "?- is_activity(A)."],
        vec!["prov", "export", &model],
        vec!["prov", "export", &model, "-o", "prov.json"],
        vec!["prov", "stats", "training_fit"],
        vec!["prov", "lineage", &model],
        vec!["models", "select", "--task", "regression", "--domain", "weather", "--schema", "dbz:float64", "-k", "2"],
        vec!["classify-change", &model, "--flags", "minor_refactor"],
        vec!["replicate"],
        vec!["promote", &gids[1], "staging"],
        vec!["bench", "--files", "1:2:1", "--rows", "50", "--reps", "1", "--csv", "bench.csv"],
    ];
    for c in commands {
        let v = s.json(&c);
        assert!(v.is_object(), "{c:?}: {v}");
    }
    let csv = fs::read_to_string(s.path("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn environment_beats_flag_beats_file() {
    let s = Session::new();
    let cfg = s.write("cfg.json", &format!(r#"{{"catalog": "{}"}}"#, s.path("from_file.ndjson").display()));
    let root = s.path("cpu");
    let add = |extra: &[&str], id: &str| {
        let mut args = vec!["--config", cfg.as_str()];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["platforms", "add", "--id", id, "--root", root.to_str().unwrap()]);
        let mut c = Command::new(env!("CARGO_BIN_EXE_artiflow"));
        c.args(&args).current_dir(s.dir.path()).env_remove("GYP_CATALOG");
        c
    };
    let flag = s.path("from_flag.ndjson");
    let env = s.path("from_env.ndjson");
    assert!(add(&[], "a").output().unwrap().status.success());
    assert!(add(&["--catalog", flag.to_str().unwrap()], "b").output().unwrap().status.success());
    assert!(add(&["--catalog", flag.to_str().unwrap()], "c").env("GYP_CATALOG", &env).output().unwrap().status.success());
    let has = |p: &Path, id: &str| fs::read_to_string(p).unwrap().contains(&format!("\"platform_id\":\"{id}\""));
    assert!(has(&s.path("from_file.ndjson"), "a"));
    assert!(has(&flag, "b") && !has(&flag, "c"));
    assert!(has(&env, "c"));

    let bad = s.write("bad.json", r#"{"stats": {"selectivity": 0.0, "cost_per_tuple": 1e-6}}"#);
    assert_eq!(s.code(&["--config", &bad, "list"]), 1);
    let out = s.cmd(&["list"]).env("GYP_WORKERS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

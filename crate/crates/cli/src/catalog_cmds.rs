use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use artiflow_core::catalog::{
    ArtifactKind, ArtifactRecord, BandwidthEntry, Bucket, Catalog, ChangeSet, ExecutorKind, Location, ModelQuery, NewArtifact,
    PlatformDescriptor, PlatformRegistry,
};
use artiflow_core::executor::{InMemoryDataset, ModelArtifact};
use artiflow_core::model::{FunctionDescriptor, FunctionRegistry, Gid};
use artiflow_core::{DataflowGraph, Schema};
use chrono::Utc;
use serde_json::{json, Value as Json};

use crate::config::Config;
use crate::output::{table, usage, Report};
use crate::{Backend, Kind, PlatformCmd, RegisterArgs};

/// Opens the catalog for writing, applying the configured replication policy.
pub fn open_writer(cfg: &Config) -> anyhow::Result<Catalog> {
    let mut c = Catalog::open(&cfg.catalog)?;
    c.set_replication_policy(cfg.replication);
    Ok(c)
}

/// Opens the catalog for reading; a missing file reads as empty.
pub fn open_reader(cfg: &Config) -> anyhow::Result<Catalog> {
    let mut c = if cfg.catalog.exists() { Catalog::open_read_only(&cfg.catalog)? } else { Catalog::in_memory() };
    c.set_replication_policy(cfg.replication);
    Ok(c)
}

pub fn parse_gid(s: &str) -> anyhow::Result<Gid> {
    s.trim().parse::<Gid>().with_context(|| format!("invalid GID {s:?}"))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// `key=value` where the value is JSON when it parses, a string otherwise.
pub fn parse_kv(s: &str) -> anyhow::Result<(String, Json)> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected key=value, got {s:?}")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(usage(format!("empty key in {s:?}")));
    }
    let v = serde_json::from_str(v).unwrap_or_else(|_| Json::String(v.to_string()));
    Ok((k.to_string(), v))
}

/// Function descriptors registered in the catalog.
pub fn function_registry(catalog: &Catalog) -> FunctionRegistry {
    let mut reg = FunctionRegistry::new();
    for a in catalog.artifacts().filter(|a| a.kind == ArtifactKind::Function) {
        if let Some(d) = &a.function {
            reg.register(d.clone());
        }
    }
    reg
}

fn executor_kind(b: Backend) -> ExecutorKind {
    match b {
        Backend::Single => ExecutorKind::Single,
        Backend::Partitioned => ExecutorKind::Partitioned,
    }
}

pub fn backend_kind(b: Option<Backend>) -> Option<ExecutorKind> {
    b.map(executor_kind)
}

fn registered(gid: Gid, kind: ArtifactKind, name: &str) -> Report {
    Report::new(json!({ "gid": gid.to_string(), "kind": kind.name(), "name": name }), gid.to_string())
}

pub fn register(cfg: &Config, a: RegisterArgs) -> anyhow::Result<Report> {
    let mut catalog = open_writer(cfg)?;
    let mut meta = BTreeMap::new();
    for m in &a.meta {
        let (k, v) = parse_kv(m)?;
        meta.insert(k, v);
    }
    let mut new = match a.kind {
        Kind::Dataset => {
            let spec = a.schema.as_deref().ok_or_else(|| usage("a dataset needs --schema"))?;
            let schema = Schema::parse_spec(spec)?;
            let platform = a.platform.clone().or(cfg.default_platform.clone()).ok_or_else(|| usage("a dataset needs --platform"))?;
            let bucket: Bucket = a.bucket.parse().map_err(usage)?;
            let rows = InMemoryDataset::read_csv(&a.file, &schema)?.len() as u64;
            let path = fs::canonicalize(&a.file).unwrap_or_else(|_| a.file.clone());
            let name = a.name.clone().unwrap_or_else(|| file_stem(&a.file));
            let mut new = NewArtifact::dataset(name, schema, bucket, Location::new(platform, path.to_string_lossy()));
            if let Some(d) = new.dataset.as_mut() {
                d.rows = Some(rows);
            }
            new
        }
        Kind::Model => {
            let platform = a.platform.clone().or(cfg.default_platform.clone()).ok_or_else(|| usage("a model needs --platform"))?;
            let model = ModelArtifact::read_json(&a.file)?;
            let path = fs::canonicalize(&a.file).unwrap_or_else(|_| a.file.clone());
            let name = a.name.clone().unwrap_or_else(|| file_stem(&a.file));
            let mut new = NewArtifact::model(name, &a.task, &a.scope)
                .with_meta("kind", model.kind.clone())
                .with_meta("features", model.feature_names.clone())
                .with_meta("target", model.target_name.clone())
                .at(Location::new(platform, path.to_string_lossy()));
            if let Some(rmse) = model.training_metrics.get("rmse") {
                new = new.with_meta("rmse", *rmse);
            }
            if let Some(t) = &a.training_dataset {
                new = new.with_meta("training_dataset", parse_gid(t)?.to_string());
            }
            new
        }
        Kind::Function => {
            let d: FunctionDescriptor = serde_json::from_str(&read_text(&a.file)?)?;
            NewArtifact::function(d)
        }
        Kind::Dataflow => NewArtifact::dataflow(DataflowGraph::parse(&read_text(&a.file)?)?),
    };
    if let Some(d) = &a.domain {
        new = new.in_domain(d.clone());
    }
    if let Some(v) = &a.version_of {
        new = new.version_of(parse_gid(v)?);
    }
    new.metadata.extend(meta);
    let (kind, name) = (new.kind, new.name.clone());
    let gid = catalog.register_artifact(new)?;
    Ok(registered(gid, kind, &name))
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "unnamed".into())
}

fn platform_row(p: &PlatformDescriptor) -> Vec<String> {
    vec![
        p.platform_id.clone(),
        p.cpu_cores.to_string(),
        p.gpus.to_string(),
        p.relative_speed.to_string(),
        format!("{:?}", p.executor_kind).to_lowercase(),
        p.storage_root.clone(),
    ]
}

/// Registers new platforms, skips identical ones and sets all bandwidth entries.
pub fn load_registry(catalog: &mut Catalog, reg: &PlatformRegistry) -> anyhow::Result<(Vec<String>, Vec<String>)> {
    let (mut added, mut kept) = (Vec::new(), Vec::new());
    for p in &reg.platforms {
        match catalog.platform(&p.platform_id) {
            Some(existing) if existing == p => kept.push(p.platform_id.clone()),
            Some(_) => return Err(usage(format!("platform {} is already registered with different attributes", p.platform_id))),
            None => {
                fs::create_dir_all(&p.storage_root).with_context(|| format!("creating {}", p.storage_root))?;
                added.push(catalog.register_platform(p.clone())?);
            }
        }
    }
    let entries = reg.bandwidth.entries();
    if !entries.is_empty() {
        catalog.set_bandwidth(&entries)?;
    }
    Ok((added, kept))
}

pub fn platforms(cfg: &Config, cmd: PlatformCmd) -> anyhow::Result<Report> {
    match cmd {
        PlatformCmd::Add { id, cpus, gpus, speed, root, executor } => {
            let mut catalog = open_writer(cfg)?;
            fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
            let root = fs::canonicalize(&root).unwrap_or(root);
            let d = PlatformDescriptor {
                platform_id: id,
                cpu_cores: cpus,
                gpus,
                relative_speed: speed,
                storage_root: root.to_string_lossy().into_owned(),
                executor_kind: executor_kind(executor),
            };
            let id = catalog.register_platform(d.clone())?;
            Ok(Report::new(serde_json::to_value(&d)?, format!("added platform {id}")))
        }
        PlatformCmd::List => {
            let catalog = open_reader(cfg)?;
            let ps: Vec<&PlatformDescriptor> = catalog.platforms().collect();
            let bw = catalog.bandwidth().entries();
            let mut text = table(&["id", "cpus", "gpus", "speed", "executor", "root"], &ps.iter().map(|p| platform_row(p)).collect::<Vec<_>>());
            if !bw.is_empty() {
                let rows: Vec<Vec<String>> = bw.iter().map(|e| vec![e.from.clone(), e.to.clone(), e.mbps.to_string()]).collect();
                text = format!("{text}\n\n{}", table(&["from", "to", "MB/s"], &rows));
            }
            Ok(Report::new(json!({ "platforms": ps, "bandwidth": bw }), text))
        }
        PlatformCmd::Bandwidth { from, to, mbps, both } => {
            let mut catalog = open_writer(cfg)?;
            let mut entries = vec![BandwidthEntry { from: from.clone(), to: to.clone(), mbps }];
            if both {
                entries.push(BandwidthEntry { from: to, to: from, mbps });
            }
            catalog.set_bandwidth(&entries)?;
            let text = entries.iter().map(|e| format!("{} -> {}: {} MB/s", e.from, e.to, e.mbps)).collect::<Vec<_>>().join("\n");
            Ok(Report::new(json!({ "bandwidth": entries }), text))
        }
        PlatformCmd::Load { file } => {
            let reg: PlatformRegistry = serde_json::from_str(&read_text(&file)?)?;
            let mut catalog = open_writer(cfg)?;
            let (added, kept) = load_registry(&mut catalog, &reg)?;
            let text = format!("added {} platform(s), {} unchanged", added.len(), kept.len());
            Ok(Report::new(json!({ "added": added, "unchanged": kept }), text))
        }
    }
}

pub fn promote(cfg: &Config, gid: &str, bucket: &str) -> anyhow::Result<Report> {
    let gid = parse_gid(gid)?;
    let to: Bucket = bucket.parse().map_err(usage)?;
    let mut catalog = open_writer(cfg)?;
    let rec = catalog.promote_dataset(gid, to)?;
    Ok(Report::new(json!({ "gid": gid.to_string(), "bucket": to.name() }), format!("{} {gid} -> {to}", rec.name)))
}

pub fn show(cfg: &Config, gid: &str) -> anyhow::Result<Report> {
    let gid = parse_gid(gid)?;
    let catalog = open_reader(cfg)?;
    let rec = catalog.require(gid)?;
    let mut value = serde_json::to_value(rec)?;
    value["version_chain"] = json!(catalog.version_chain(gid).iter().map(Gid::to_string).collect::<Vec<_>>());
    value["retired"] = json!(catalog.is_retired(gid));
    let text = serde_json::to_string_pretty(&value)?;
    Ok(Report::new(value, text))
}

fn list_row(a: &ArtifactRecord) -> Vec<String> {
    let detail = match (&a.dataset, &a.location) {
        (Some(d), _) => format!("{} on {}", d.bucket, d.location.platform),
        (None, Some(l)) => format!("on {}", l.platform),
        _ => String::new(),
    };
    vec![a.gid.to_string(), a.kind.name().into(), a.name.clone(), a.version.to_string(), a.domain.clone().unwrap_or_default(), detail]
}

pub fn list(cfg: &Config, kind: Option<&str>) -> anyhow::Result<Report> {
    let kind: Option<ArtifactKind> = kind.map(str::parse).transpose().map_err(usage)?;
    let catalog = open_reader(cfg)?;
    let mut items: Vec<&ArtifactRecord> = catalog.artifacts().filter(|a| kind.is_none_or(|k| a.kind == k)).collect();
    items.sort_by(|a, b| (a.created_at, a.gid).cmp(&(b.created_at, b.gid)));
    let rows: Vec<Vec<String>> = items.iter().map(|a| list_row(a)).collect();
    let summary: Vec<Json> = items
        .iter()
        .map(|a| json!({ "gid": a.gid.to_string(), "kind": a.kind.name(), "name": a.name, "version": a.version, "domain": a.domain }))
        .collect();
    Ok(Report::new(json!({ "artifacts": summary }), table(&["gid", "kind", "name", "version", "domain", "where"], &rows)))
}

pub fn classify_change(cfg: &Config, gid: &str, flags: &[String]) -> anyhow::Result<Report> {
    let gid = parse_gid(gid)?;
    let mut change = ChangeSet::default();
    for f in flags.iter().map(|f| f.trim()).filter(|f| !f.is_empty()) {
        if !change.set(f) {
            return Err(usage(format!("unknown change flag {f:?}; expected one of {}", ChangeSet::FLAGS.join(", "))));
        }
    }
    let catalog = open_reader(cfg)?;
    let class = catalog.classify_change(gid, &change)?;
    Ok(Report::new(json!({ "gid": gid.to_string(), "class": class.to_string(), "flags": change }), class.to_string()))
}

pub fn select(cfg: &Config, task: &str, domain: &str, schema: &str, k: usize) -> anyhow::Result<Report> {
    let query = ModelQuery { task: task.into(), domain: domain.into(), input_schema: Schema::parse_spec(schema)? };
    let catalog = open_reader(cfg)?;
    let ranked = catalog.select_models(&query, k);
    let rows: Vec<Vec<String>> = ranked
        .iter()
        .map(|(g, s)| vec![g.to_string(), catalog.artifact(*g).map(|a| a.name.clone()).unwrap_or_default(), format!("{s:.4}")])
        .collect();
    let items: Vec<Json> = ranked.iter().map(|(g, s)| json!({ "gid": g.to_string(), "score": s })).collect();
    Ok(Report::new(json!({ "models": items }), table(&["gid", "name", "score"], &rows)))
}

/// Applies the replication policy and copies or removes replica files.
pub fn replicate_now(catalog: &mut Catalog) -> anyhow::Result<Json> {
    let changes = catalog.apply_replication(Utc::now())?;
    for r in &changes.created {
        let src = catalog.artifact(r.dataset).and_then(|a| a.dataset.as_ref()).map(|d| d.location.path.clone());
        if let Some(src) = src {
            if let Some(dir) = Path::new(&r.path).parent() {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::copy(&src, &r.path).with_context(|| format!("copying {src} to {}", r.path))?;
        }
    }
    for (g, p) in &changes.evicted {
        let root = catalog.platform(p).map(|d| d.storage_root.clone()).unwrap_or_default();
        let _ = fs::remove_file(Path::new(&root).join("replicas").join(format!("{g}.csv")));
    }
    Ok(json!({
        "created": changes.created.iter().map(|r| json!({ "dataset": r.dataset.to_string(), "platform": r.platform, "path": r.path })).collect::<Vec<_>>(),
        "evicted": changes.evicted.iter().map(|(g, p)| json!({ "dataset": g.to_string(), "platform": p })).collect::<Vec<_>>(),
    }))
}

pub fn replicate(cfg: &Config) -> anyhow::Result<Report> {
    let mut catalog = open_writer(cfg)?;
    let changes = replicate_now(&mut catalog)?;
    let n = |k: &str| changes[k].as_array().map_or(0, Vec::len);
    let text = format!("created {} replica(s), evicted {}", n("created"), n("evicted"));
    Ok(Report::new(changes, text))
}

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use artiflow_core::catalog::{ArtifactKind, Catalog, NewArtifact, PlatformRegistry};
use artiflow_core::executor::{run, run_benchmark, BenchConfig, RunOptions, RunResult};
use artiflow_core::model::{bind, Gid};
use artiflow_core::optimizer::{annotate_with, rewrite_configured, CatalogStats, FixedStats, RewriteAnnotation, StatsProvider};
use artiflow_core::scheduler::{placements_from_catalog, schedule, ScheduledPlan, Strategy};
use artiflow_core::DataflowGraph;
use serde_json::{json, Value as Json};

use crate::catalog_cmds::{backend_kind, function_registry, load_registry, open_reader, open_writer, parse_gid, parse_kv, read_text, replicate_now};
use crate::config::Config;
use crate::output::{table, usage, Report};
use crate::{BenchArgs, BindArgs, BindingArgs, OptimizeArgs, PipelineArgs, RunArgs, ScheduleArgs};

/// Reads a flow as either a serialized graph (object) or the node-list dialect.
pub fn load_graph(path: &Path) -> anyhow::Result<DataflowGraph> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).with_context(|| format!("reading graph {}", path.display()));
    }
    Ok(DataflowGraph::parse(&text)?)
}

fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Binds the graph when bindings or parameters are given.
fn apply_binding(catalog: &Catalog, graph: DataflowGraph, b: &BindingArgs) -> anyhow::Result<DataflowGraph> {
    if b.bind.is_empty() && b.param.is_empty() {
        return Ok(graph);
    }
    let mut bindings = BTreeMap::new();
    for s in &b.bind {
        let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected name=GID, got {s:?}")))?;
        bindings.insert(k.trim().to_string(), parse_gid(v)?);
    }
    let params: BTreeMap<String, Json> = b.param.iter().map(|s| parse_kv(s)).collect::<anyhow::Result<_>>()?;
    Ok(bind(&graph, &bindings, &params, catalog, &function_registry(catalog))?)
}

fn annotations(cfg: &Config, catalog: &Catalog, graph: &DataflowGraph, from_provenance: bool) -> BTreeMap<String, RewriteAnnotation> {
    let fixed = FixedStats { entries: BTreeMap::new(), defaults: cfg.stats };
    let observed = CatalogStats { catalog, defaults: cfg.stats };
    let stats: &dyn StatsProvider = if from_provenance { &observed } else { &fixed };
    annotate_with(graph, stats, &function_registry(catalog))
}

pub fn bind_cmd(cfg: &Config, a: BindArgs) -> anyhow::Result<Report> {
    let catalog = open_reader(cfg)?;
    let graph = load_graph(&a.flow)?;
    if a.binding.bind.is_empty() && a.binding.param.is_empty() {
        return Err(usage("nothing to bind; pass --bind or --param"));
    }
    let bound = apply_binding(&catalog, graph, &a.binding)?;
    emit_graph(&bound, a.output.as_deref(), "bound")
}

fn emit_graph(graph: &DataflowGraph, out: Option<&Path>, what: &str) -> anyhow::Result<Report> {
    let text = serde_json::to_string_pretty(graph)?;
    match out {
        Some(p) => {
            write_out(p, &text)?;
            Ok(Report::new(json!({ "output": p.display().to_string(), "nodes": graph.nodes.len() }), format!("{what} graph written to {}", p.display())))
        }
        None => Ok(Report::new(serde_json::to_value(graph)?, text)),
    }
}

/// Rewrites the graph with the configured rules.
fn optimized(cfg: &Config, catalog: &Catalog, graph: &DataflowGraph, from_provenance: bool) -> anyhow::Result<(DataflowGraph, artiflow_core::optimizer::RewriteTrace)> {
    let ann = annotations(cfg, catalog, graph, from_provenance);
    Ok(rewrite_configured(graph, &ann, &function_registry(catalog), cfg.rewrite)?)
}

pub fn optimize(cfg: &Config, a: OptimizeArgs) -> anyhow::Result<Report> {
    let catalog = open_reader(cfg)?;
    let graph = apply_binding(&catalog, load_graph(&a.flow)?, &a.binding)?;
    let (g, trace) = optimized(cfg, &catalog, &graph, a.stats_from_provenance)?;
    if let Some(p) = &a.trace {
        write_out(p, &serde_json::to_string_pretty(&trace)?)?;
    }
    let steps: Vec<String> = trace
        .steps
        .iter()
        .map(|s| format!("{:?}: [{}] -> [{}]", s.rule, s.before.join(", "), s.after.join(", ")).to_lowercase())
        .collect();
    let mut text = format!("{} rewrite step(s)", trace.steps.len());
    for s in &steps {
        text.push_str(&format!("\n  {s}"));
    }
    let mut value = json!({ "steps": trace.steps });
    match &a.output {
        Some(p) => {
            write_out(p, &serde_json::to_string_pretty(&g)?)?;
            value["output"] = json!(p.display().to_string());
            text.push_str(&format!("\noptimized graph written to {}", p.display()));
        }
        None => {
            value["graph"] = serde_json::to_value(&g)?;
            text = format!("{}\n{text}", serde_json::to_string_pretty(&g)?);
        }
    }
    Ok(Report::new(value, text))
}

/// Loads a registry file when given, replicates hot datasets, and plans.
fn plan(
    cfg: &Config,
    catalog: &mut Catalog,
    graph: &DataflowGraph,
    platforms: Option<&Path>,
    exhaustive: bool,
    from_provenance: bool,
) -> anyhow::Result<ScheduledPlan> {
    if let Some(p) = platforms {
        let reg: PlatformRegistry = serde_json::from_str(&read_text(p)?)?;
        load_registry(catalog, &reg)?;
    }
    if !graph.is_concrete() {
        return Err(usage("the flow has unbound placeholders; pass --bind name=GID"));
    }
    replicate_now(catalog)?;
    let (sites, rows) = placements_from_catalog(catalog, graph)?;
    let registry = catalog.platform_registry()?;
    let ann = annotations(cfg, catalog, graph, from_provenance);
    let strategy = if exhaustive { Strategy::Exhaustive } else { Strategy::Heuristic };
    let mut plan = schedule(graph, &registry, &sites, &ann, &rows, strategy)?;
    plan.dataflow = dataflow_artifact(catalog, &graph.gid);
    Ok(plan)
}

/// The dataflow artifact a graph was built from, when its header names one.
fn dataflow_artifact(catalog: &Catalog, gid: &str) -> Option<Gid> {
    let g = gid.parse::<Gid>().ok()?;
    catalog.artifact(g).filter(|a| a.kind == ArtifactKind::Dataflow).map(|a| a.gid)
}

fn plan_summary(plan: &ScheduledPlan) -> String {
    let rows: Vec<Vec<String>> = plan
        .fragments
        .iter()
        .map(|f| {
            let cost = plan.costs.execution.get(&f.fragment_id).or_else(|| plan.costs.transfer.get(&f.fragment_id)).copied().unwrap_or(0.0);
            let platform = plan.assignment.platforms.get(&f.fragment_id).cloned().unwrap_or_else(|| "-".into());
            vec![f.fragment_id.clone(), format!("{:?}", f.kind).to_lowercase(), platform, f.node_ids.join(","), format!("{cost:.6}")]
        })
        .collect();
    let mut s = table(&["fragment", "kind", "platform", "nodes", "seconds"], &rows);
    if !plan.elided_transfers.is_empty() {
        s.push_str(&format!("\nelided transfers: {}", plan.elided_transfers.join(", ")));
    }
    s.push_str(&format!("\nestimated total: {:.6} s", plan.costs.total));
    s
}

pub fn schedule_cmd(cfg: &Config, a: ScheduleArgs) -> anyhow::Result<Report> {
    let mut catalog = open_writer(cfg)?;
    let graph = apply_binding(&catalog, load_graph(&a.flow)?, &a.binding)?;
    let plan = plan(cfg, &mut catalog, &graph, a.platforms.as_deref(), a.exhaustive, a.stats_from_provenance)?;
    let mut text = plan_summary(&plan);
    let mut value = json!({ "assignment": plan.assignment, "costs": plan.costs, "jobs": plan.jobs });
    if let Some(p) = &a.output {
        write_out(p, &plan.to_json())?;
        value["output"] = json!(p.display().to_string());
        text.push_str(&format!("\nplan written to {}", p.display()));
    }
    Ok(Report::new(value, text))
}

fn run_report(r: &RunResult, catalog: &Catalog) -> Report {
    let rows: Vec<Vec<String>> = r
        .outputs
        .iter()
        .map(|(node, g)| vec![node.clone(), g.to_string(), catalog.artifact(*g).map(|a| a.name.clone()).unwrap_or_default()])
        .collect();
    let text = format!(
        "run {} finished in {:.3} s (peak {} live tuples)\n{}",
        r.run_id,
        r.wall_time.as_secs_f64(),
        r.peak_live_tuples,
        table(&["node", "gid", "name"], &rows)
    );
    let outputs: BTreeMap<&String, String> = r.outputs.iter().map(|(k, g)| (k, g.to_string())).collect();
    let value = json!({
        "run_id": r.run_id.to_string(),
        "dataflow": r.dataflow.to_string(),
        "status": r.status,
        "outputs": outputs,
        "wall_time_secs": r.wall_time.as_secs_f64(),
        "peak_live_tuples": r.peak_live_tuples,
    });
    Report::new(value, text)
}

pub fn run_cmd(cfg: &Config, a: RunArgs) -> anyhow::Result<Report> {
    let plan = ScheduledPlan::from_json(&read_text(&a.plan)?)?;
    let mut catalog = open_writer(cfg)?;
    let r = run(&mut catalog, &plan, RunOptions { backend: backend_kind(a.backend), workers: cfg.workers })?;
    Ok(run_report(&r, &catalog))
}

pub fn pipeline(cfg: &Config, a: PipelineArgs) -> anyhow::Result<Report> {
    let mut catalog = open_writer(cfg)?;
    let mut graph = load_graph(&a.flow)?;
    if dataflow_artifact(&catalog, &graph.gid).is_none() {
        let gid = catalog.register_artifact(NewArtifact::dataflow(graph.clone()))?;
        graph.gid = gid.to_string();
    }
    let bound = apply_binding(&catalog, graph, &a.binding)?;
    let (g, trace) = optimized(cfg, &catalog, &bound, a.stats_from_provenance)?;
    let plan = plan(cfg, &mut catalog, &g, a.platforms.as_deref(), a.exhaustive, a.stats_from_provenance)?;
    if let Some(p) = &a.plan_out {
        write_out(p, &plan.to_json())?;
    }
    let r = run(&mut catalog, &plan, RunOptions { backend: backend_kind(a.backend), workers: cfg.workers })?;
    let mut report = run_report(&r, &catalog);
    report.json["rewrite_steps"] = json!(trace.steps.len());
    report.json["estimated_cost"] = json!(plan.costs.total);
    Ok(report)
}

/// Parses `start:end:step` (inclusive) or a single count.
fn file_range(spec: &str) -> anyhow::Result<Vec<usize>> {
    let parts: Vec<usize> = spec
        .split(':')
        .map(|p| p.trim().parse::<usize>().map_err(|_| usage(format!("bad --files {spec:?}; expected start:end:step"))))
        .collect::<anyhow::Result<_>>()?;
    let (start, end, step) = match parts.as_slice() {
        [n] => (*n, *n, 1),
        [s, e] => (*s, *e, 1),
        [s, e, st] => (*s, *e, *st),
        _ => return Err(usage(format!("bad --files {spec:?}; expected start:end:step"))),
    };
    if start == 0 || step == 0 || end < start {
        return Err(usage(format!("bad --files {spec:?}; need 0 < start <= end and step > 0")));
    }
    Ok((start..=end).step_by(step).collect())
}

pub fn bench(cfg: &Config, a: BenchArgs) -> anyhow::Result<Report> {
    if a.rows == 0 || a.reps == 0 {
        return Err(usage("--rows and --reps must be positive"));
    }
    let defaults = BenchConfig::default();
    let bc = BenchConfig {
        n_files: file_range(&a.files)?,
        rows_per_file: a.rows,
        repetitions: a.reps,
        workers: if cfg.workers > 0 { cfg.workers } else { defaults.workers },
        seed: a.seed,
    };
    let report = run_benchmark(&bc)?;
    if let Some(p) = &a.csv {
        write_out(p, &report.to_csv())?;
    }
    let text = format!("{}\n{}", report.to_csv().trim_end(), report.summary());
    Ok(Report::new(serde_json::to_value(&report)?, text))
}

#[cfg(test)]
mod tests {
    use super::file_range;

    #[test]
    fn file_range_is_inclusive() {
        assert_eq!(file_range("10:70:10").unwrap(), vec![10, 20, 30, 40, 50, 60, 70]);
        assert_eq!(file_range("3").unwrap(), vec![3]);
        assert!(file_range("5:1:1").is_err());
        assert!(file_range("1:5:0").is_err());
    }
}

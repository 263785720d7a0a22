use std::collections::BTreeMap;

use artiflow_core::kgraph::{build_facts, evaluate, parse_program, parse_query, query, standard_rules, FactBase};
use artiflow_core::provenance::{derive_stats, export_prov, lineage};
use serde_json::{json, Value as Json};

use crate::catalog_cmds::{open_reader, parse_gid, read_text};
use crate::config::Config;
use crate::output::{table, Report};
use crate::{KgCmd, ProvCmd};

/// Catalog facts closed under the standard rules and an optional program file.
fn knowledge(catalog: &artiflow_core::catalog::Catalog, rules: Option<&std::path::Path>) -> anyhow::Result<FactBase> {
    let mut base = build_facts(catalog);
    let mut all = standard_rules();
    if let Some(p) = rules {
        let program = parse_program(&read_text(p)?)?;
        for f in &program.facts {
            base.insert(f)?;
        }
        all.extend(program.rules);
    }
    Ok(evaluate(&base, &all)?)
}

pub fn kg(cfg: &Config, cmd: KgCmd) -> anyhow::Result<Report> {
    let catalog = open_reader(cfg)?;
    match cmd {
        KgCmd::Eval { rules, facts } => {
            let fb = knowledge(&catalog, rules.as_deref())?;
            let preds = fb.predicates();
            let counts: BTreeMap<&String, usize> = preds.keys().map(|p| (p, fb.tuples(p).len())).collect();
            let mut text = table(
                &["predicate", "arity", "facts"],
                &preds.iter().map(|(p, a)| vec![p.clone(), a.to_string(), counts[p].to_string()]).collect::<Vec<_>>(),
            );
            let mut value = json!({ "base_facts": fb.base_len(), "total_facts": fb.len(), "counts": counts });
            if facts {
                let all: BTreeMap<&String, Vec<Vec<String>>> = preds.keys().map(|p| (p, fb.tuples(p))).collect();
                value["facts"] = json!(all);
                for atom in fb.to_atoms() {
                    text.push_str(&format!("\n{atom}."));
                }
            }
            Ok(Report::new(value, text))
        }
        KgCmd::Query { query: q, rules } => {
            let fb = knowledge(&catalog, rules.as_deref())?;
            let atoms = parse_query(&q)?;
            let answers = query(&fb, &atoms)?;
            let vars: Vec<String> = answers.first().map(|b| b.iter().map(|(v, _)| v.clone()).collect()).unwrap_or_default();
            let rows: Vec<Vec<String>> = answers.iter().map(|b| b.iter().map(|(_, v)| v.clone()).collect()).collect();
            let objects: Vec<Json> =
                answers.iter().map(|b| Json::Object(b.iter().map(|(k, v)| (k.clone(), Json::String(v.clone()))).collect())).collect();
            let text = if answers.is_empty() {
                "no answers".to_string()
            } else if vars.is_empty() {
                "yes".to_string()
            } else {
                table(&vars.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
            };
            Ok(Report::new(json!({ "answers": objects }), text))
        }
    }
}

pub fn prov(cfg: &Config, cmd: ProvCmd) -> anyhow::Result<Report> {
    let catalog = open_reader(cfg)?;
    match cmd {
        ProvCmd::Export { gid, output } => {
            let doc = export_prov(&catalog, parse_gid(&gid)?)?;
            let value = serde_json::to_value(&doc)?;
            match output {
                Some(p) => {
                    std::fs::write(&p, serde_json::to_string_pretty(&value)?)?;
                    let n = |k: &str| value.get(k).and_then(Json::as_object).map_or(0, |m| m.len());
                    let text = format!("{} entities, {} activities written to {}", n("entity"), n("activity"), p.display());
                    Ok(Report::new(json!({ "output": p.display().to_string(), "entities": n("entity"), "activities": n("activity") }), text))
                }
                None => {
                    let text = serde_json::to_string_pretty(&value)?;
                    Ok(Report::new(value, text))
                }
            }
        }
        ProvCmd::Stats { alias } => {
            let s = derive_stats(&catalog, &alias, cfg.stats);
            let text = format!(
                "{}: selectivity {:.6}, cost {:.3e} s/tuple over {} sample(s)",
                s.function_alias, s.mean_selectivity, s.mean_cost_per_tuple, s.sample_count
            );
            Ok(Report::new(serde_json::to_value(&s)?, text))
        }
        ProvCmd::Lineage { gid } => {
            let gid = parse_gid(&gid)?;
            let up = lineage(&catalog, gid)?;
            let rows: Vec<Vec<String>> = up
                .iter()
                .map(|g| {
                    let a = catalog.artifact(*g);
                    vec![g.to_string(), a.map(|a| a.kind.name().to_string()).unwrap_or_default(), a.map(|a| a.name.clone()).unwrap_or_default()]
                })
                .collect();
            let ids: Vec<String> = up.iter().map(|g| g.to_string()).collect();
            Ok(Report::new(json!({ "gid": gid.to_string(), "upstream": ids }), table(&["gid", "kind", "name"], &rows)))
        }
    }
}

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use serde_json::{json, Value as Json};

use super::ProvenanceError;
use crate::catalog::Catalog;
use crate::model::Gid;

/// Every artifact upstream of `gid` through provenance links.
pub fn lineage(catalog: &Catalog, gid: Gid) -> Result<BTreeSet<Gid>, ProvenanceError> {
    if catalog.artifact(gid).is_none() && catalog.link_for(gid).is_none() {
        return Err(ProvenanceError::UnknownGid(gid));
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([gid]);
    while let Some(g) = queue.pop_front() {
        if let Some(link) = catalog.link_for(g) {
            for i in &link.inputs {
                if *i != gid && seen.insert(*i) {
                    queue.push_back(*i);
                }
            }
        }
    }
    Ok(seen)
}

/// PROV-JSON style document.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProvDocument {
    pub prefix: BTreeMap<String, String>,
    pub entity: BTreeMap<String, Json>,
    pub activity: BTreeMap<String, Json>,
    pub agent: BTreeMap<String, Json>,
    pub used: BTreeMap<String, Json>,
    #[serde(rename = "wasGeneratedBy")]
    pub was_generated_by: BTreeMap<String, Json>,
    #[serde(rename = "wasDerivedFrom")]
    pub was_derived_from: BTreeMap<String, Json>,
    #[serde(rename = "wasAssociatedWith")]
    pub was_associated_with: BTreeMap<String, Json>,
}

pub const ENGINE_AGENT: &str = "engine";

fn entity_attrs(catalog: &Catalog, gid: Gid) -> Json {
    match catalog.artifact(gid) {
        Some(a) => {
            let mut m = json!({ "kind": a.kind.name(), "name": a.name, "version": a.version });
            if let Some(d) = &a.domain {
                m["domain"] = json!(d);
            }
            if let Some(ds) = &a.dataset {
                m["bucket"] = json!(ds.bucket.name());
                m["location"] = json!(format!("{}:{}", ds.location.platform, ds.location.path));
            }
            m
        }
        None => json!({ "kind": "unregistered" }),
    }
}

/// Exports `gid` and its full upstream closure.
pub fn export_prov(catalog: &Catalog, gid: Gid) -> Result<ProvDocument, ProvenanceError> {
    let upstream = lineage(catalog, gid)?;
    let mut doc = ProvDocument::default();
    doc.prefix.insert("gid".into(), "urn:artiflow:gid:".into());
    doc.agent.insert(ENGINE_AGENT.into(), json!({ "type": "softwareAgent" }));
    for g in std::iter::once(gid).chain(upstream.iter().copied()) {
        doc.entity.insert(g.to_string(), entity_attrs(catalog, g));
        let Some(link) = catalog.link_for(g) else { continue };
        let act = link.activity_id();
        let run = catalog.run(link.run_id);
        let mut attrs = json!({
            "run": link.run_id.to_string(),
            "dataflow": link.dataflow.to_string(),
            "node": link.node_id,
            "function": link.function_alias,
            "operator": link.operator.name(),
            "kind": link.activity,
        });
        if let Some(r) = run {
            attrs["startTime"] = json!(r.started_at.to_rfc3339());
            attrs["endTime"] = json!(r.ended_at.to_rfc3339());
        }
        doc.activity.insert(act.clone(), attrs);
        doc.was_associated_with
            .insert(format!("assoc:{act}"), json!({ "activity": act, "agent": ENGINE_AGENT }));
        doc.was_generated_by.insert(format!("gen:{g}"), json!({ "entity": g.to_string(), "activity": act }));
        for i in &link.inputs {
            doc.used.insert(format!("use:{act}:{i}"), json!({ "activity": act, "entity": i.to_string() }));
            doc.was_derived_from.insert(
                format!("der:{g}:{i}"),
                json!({ "generatedEntity": g.to_string(), "usedEntity": i.to_string(), "activity": act }),
            );
        }
    }
    Ok(doc)
}

use super::eval::FactBase;
use crate::catalog::{ArtifactKind, Catalog};
use crate::model::FunctionKind;
use crate::provenance::ActivityKind;

/// Base predicates and their arities.
pub const BASE_PREDICATES: [(&str, usize); 13] = [
    ("dataSet", 1),
    ("model", 1),
    ("learner", 1),
    ("dataFlow", 1),
    ("model_run", 1),
    ("model_training", 1),
    ("trans_run", 1),
    ("has_input", 2),
    ("has_output", 2),
    ("uses", 2),
    ("has_name", 2),
    ("in_domain", 2),
    ("version_of", 2),
];

/// Materializes catalog artifacts and provenance links as facts.
///
/// Each provenance link is one activity, identified as `run_id:node_id`.
pub fn build_facts(catalog: &Catalog) -> FactBase {
    let mut fb = FactBase::new();
    for (p, a) in BASE_PREDICATES {
        fb.declare(p, a).expect("fresh fact base");
    }
    for a in catalog.artifacts() {
        let g = a.gid.to_string();
        match a.kind {
            ArtifactKind::Dataset => fb.add("dataSet", &[&g]),
            ArtifactKind::Model => fb.add("model", &[&g]),
            ArtifactKind::Dataflow => fb.add("dataFlow", &[&g]),
            ArtifactKind::Function => {
                fb.add("has_name", &[&g, &a.name]);
                if a.function.as_ref().is_some_and(|f| f.kind == FunctionKind::Learner) {
                    fb.add("learner", &[&g]);
                }
            }
        }
        if let Some(d) = &a.domain {
            fb.add("in_domain", &[&g, d]);
        }
        if let Some(parent) = a.version_of {
            fb.add("version_of", &[&g, &parent.to_string()]);
        }
    }
    for link in catalog.links() {
        let r = link.activity_id();
        let kind = match link.activity {
            ActivityKind::Transformation => "trans_run",
            ActivityKind::ModelRun => "model_run",
            ActivityKind::ModelTraining => "model_training",
        };
        fb.add(kind, &[&r]);
        for i in &link.inputs {
            fb.add("has_input", &[&r, &i.to_string()]);
        }
        fb.add("has_output", &[&link.produced.to_string(), &r]);
        if let Some(f) = catalog.function_by_alias(&link.function_alias) {
            fb.add("uses", &[&r, &f.gid.to_string()]);
        }
    }
    fb
}

use std::collections::BTreeSet;

use super::record::{ArtifactKind, ArtifactRecord};
use super::store::Catalog;
use crate::model::{Gid, Schema};

/// What a caller wants a model for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelQuery {
    pub task: String,
    pub domain: String,
    pub input_schema: Schema,
}

/// Scores a candidate model in [0, 1].
pub trait SelectionStrategy {
    fn score(&self, catalog: &Catalog, model: &ArtifactRecord, query: &ModelQuery) -> f64;
}

/// Weighted mean of domain match, task match and the Jaccard overlap of
/// attribute names between the query schema and the training schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetadataSimilarity {
    pub domain_weight: f64,
    pub task_weight: f64,
    pub schema_weight: f64,
}

impl Default for MetadataSimilarity {
    fn default() -> Self {
        MetadataSimilarity { domain_weight: 1.0, task_weight: 1.0, schema_weight: 1.0 }
    }
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Attribute names a model was trained on: the training dataset schema when
/// known, else the declared features and target.
pub fn training_attributes(catalog: &Catalog, model: &ArtifactRecord) -> BTreeSet<String> {
    if let Some(ds) = model.training_dataset().and_then(|g| catalog.artifact(g)).and_then(|r| r.dataset.as_ref()) {
        return ds.schema.names().map(String::from).collect();
    }
    match model.port_type() {
        Some(crate::model::PortType::Model { signature }) => signature
            .features
            .into_iter()
            .chain(Some(signature.target).filter(|t| !t.is_empty()))
            .collect(),
        _ => BTreeSet::new(),
    }
}

impl SelectionStrategy for MetadataSimilarity {
    fn score(&self, catalog: &Catalog, model: &ArtifactRecord, query: &ModelQuery) -> f64 {
        let domain = f64::from(u8::from(model.domain.as_deref() == Some(query.domain.as_str())));
        let task = f64::from(u8::from(model.meta_str("task_type") == Some(query.task.as_str())));
        let wanted: BTreeSet<String> = query.input_schema.names().map(String::from).collect();
        let schema = jaccard(&wanted, &training_attributes(catalog, model));
        let total = self.domain_weight + self.task_weight + self.schema_weight;
        if total <= 0.0 {
            return 0.0;
        }
        (self.domain_weight * domain + self.task_weight * task + self.schema_weight * schema) / total
    }
}

/// Ranks models by descending score; ties go to the newer model, then the smaller gid.
pub fn select(catalog: &Catalog, query: &ModelQuery, k: usize, strategy: &dyn SelectionStrategy) -> Vec<(Gid, f64)> {
    let mut scored: Vec<(&ArtifactRecord, f64)> = catalog
        .artifacts()
        .filter(|a| a.kind == ArtifactKind::Model)
        .map(|a| (a, strategy.score(catalog, a, query).clamp(0.0, 1.0)))
        .collect();
    scored.sort_by(|(a, sa), (b, sb)| {
        sb.total_cmp(sa).then_with(|| b.created_at.cmp(&a.created_at)).then_with(|| a.gid.cmp(&b.gid))
    });
    scored.into_iter().take(k).map(|(a, s)| (a.gid, s)).collect()
}

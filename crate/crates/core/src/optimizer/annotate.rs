use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::model::{propagate, DataflowGraph, FunctionRegistry, OperatorClass};
use crate::provenance::{derive_stats, OperatorStats, StatsDefaults};

/// Source of per-function selectivity and cost.
pub trait StatsProvider {
    fn stats(&self, function_alias: &str) -> OperatorStats;
}

/// Stats derived from the provenance traces in a catalog.
pub struct CatalogStats<'a> {
    pub catalog: &'a Catalog,
    pub defaults: StatsDefaults,
}

impl StatsProvider for CatalogStats<'_> {
    fn stats(&self, function_alias: &str) -> OperatorStats {
        derive_stats(self.catalog, function_alias, self.defaults)
    }
}

/// Fixed stats table; aliases without an entry get the defaults.
#[derive(Debug, Clone, Default)]
pub struct FixedStats {
    pub entries: BTreeMap<String, (f64, f64)>,
    pub defaults: StatsDefaults,
}

impl FixedStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets selectivity and seconds-per-tuple for `alias`.
    pub fn with(mut self, alias: &str, selectivity: f64, cost_per_tuple: f64) -> Self {
        self.entries.insert(alias.to_string(), (selectivity, cost_per_tuple));
        self
    }
}

impl StatsProvider for FixedStats {
    fn stats(&self, function_alias: &str) -> OperatorStats {
        match self.entries.get(function_alias) {
            Some(&(s, c)) => OperatorStats {
                function_alias: function_alias.to_string(),
                mean_selectivity: s,
                mean_cost_per_tuple: c,
                sample_count: 1,
                per_platform: BTreeMap::new(),
            },
            None => OperatorStats::defaults(function_alias, self.defaults),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteAnnotation {
    pub node_id: String,
    pub selectivity: f64,
    /// Reference-platform seconds per input tuple.
    pub cost_per_tuple: f64,
    pub rank: f64,
    pub movable: bool,
}

/// Smallest cost used as the rank denominator.
pub const MIN_COST: f64 = 1e-12;

pub fn rank(selectivity: f64, cost_per_tuple: f64) -> f64 {
    (selectivity - 1.0) / cost_per_tuple.max(MIN_COST)
}

pub fn annotate(graph: &DataflowGraph, stats: &dyn StatsProvider) -> BTreeMap<String, RewriteAnnotation> {
    annotate_with(graph, stats, &FunctionRegistry::new())
}

/// Annotates every node. Only map, filter and cast nodes with known
/// semantics and non-opaque functions are movable.
pub fn annotate_with(
    graph: &DataflowGraph,
    stats: &dyn StatsProvider,
    registry: &FunctionRegistry,
) -> BTreeMap<String, RewriteAnnotation> {
    let prop = propagate(graph);
    graph
        .nodes
        .iter()
        .map(|n| {
            let s = stats.stats(&n.function_alias);
            let opaque = n.is_opaque_flagged() || registry.get(&n.function_alias).is_some_and(|d| d.opaque);
            let movable = matches!(n.operator, OperatorClass::Map | OperatorClass::Filter | OperatorClass::Cast)
                && !opaque
                && prop.specs.contains_key(&n.node_id);
            let a = RewriteAnnotation {
                node_id: n.node_id.clone(),
                selectivity: s.mean_selectivity,
                cost_per_tuple: s.mean_cost_per_tuple,
                rank: rank(s.mean_selectivity, s.mean_cost_per_tuple),
                movable,
            };
            (n.node_id.clone(), a)
        })
        .collect()
}

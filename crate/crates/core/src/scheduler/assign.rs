use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fragment::{Fragment, FragmentKind};
use super::SchedulerError;
use crate::catalog::PlatformRegistry;
use crate::model::{propagate, DataflowGraph, PortType};
use crate::optimizer::{CardinalityEstimate, RewriteAnnotation};

/// Width assumed for string cells when no better figure is known.
pub const STRING_WIDTH: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub platforms: BTreeMap<String, String>,
    pub total_cost: f64,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Seconds per compute fragment.
    pub execution: BTreeMap<String, f64>,
    /// Seconds per transfer fragment; zero when both ends share a platform.
    pub transfer: BTreeMap<String, f64>,
    pub total: f64,
}

impl CostBreakdown {
    fn finish(mut self) -> Self {
        self.total = self.execution.values().sum::<f64>() + self.transfer.values().sum::<f64>();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Greedy placement in topological order refined by single-fragment moves.
    #[default]
    Heuristic,
    /// Enumerates every feasible assignment.
    Exhaustive,
}

/// Per-node and per-connector inputs of the cost objective.
#[derive(Debug, Clone)]
pub struct CostInputs {
    /// Reference seconds per input tuple.
    pub cost_per_tuple: BTreeMap<String, f64>,
    /// Estimated input rows per node.
    pub rows_in: BTreeMap<String, f64>,
    /// Estimated bytes per connector.
    pub bytes: BTreeMap<String, f64>,
}

impl CostInputs {
    /// Derives costs from annotations and estimates. Connector bytes are
    /// rows times the fixed per-type widths of the propagated schema.
    pub fn new(graph: &DataflowGraph, annotations: &BTreeMap<String, RewriteAnnotation>, estimates: &CardinalityEstimate) -> Self {
        let prop = propagate(graph);
        let bytes = estimates
            .connectors
            .iter()
            .map(|(c, rows)| {
                let width = match prop.ports.get(c).or_else(|| graph.input_types.get(c)) {
                    Some(PortType::Table { schema: s }) => s.row_bytes(STRING_WIDTH),
                    Some(PortType::Model { signature }) => 8.0 * (signature.features.len() as f64 + 2.0),
                    _ => 8.0,
                };
                (c.clone(), rows * width)
            })
            .collect();
        CostInputs {
            cost_per_tuple: annotations.iter().map(|(n, a)| (n.clone(), a.cost_per_tuple)).collect(),
            rows_in: estimates.inputs.clone(),
            bytes,
        }
    }
}

/// Cost evaluator over a fixed fragment list.
pub struct CostModel<'a> {
    pub fragments: &'a [Fragment],
    pub registry: &'a PlatformRegistry,
    pub inputs: &'a CostInputs,
}

impl CostModel<'_> {
    pub fn execution(&self, f: &Fragment, platform: &str) -> f64 {
        let speed = self.registry.get(platform).map_or(1.0, |p| p.relative_speed);
        f.node_ids
            .iter()
            .map(|n| self.inputs.cost_per_tuple.get(n).copied().unwrap_or(0.0) / speed * self.inputs.rows_in.get(n).copied().unwrap_or(0.0))
            .sum()
    }

    pub fn transfer(&self, t: &Fragment, from: &str, to: &str) -> f64 {
        let bytes = t.connector.as_ref().and_then(|c| self.inputs.bytes.get(c)).copied().unwrap_or(0.0);
        self.registry.bandwidth.transfer_seconds(from, to, bytes).unwrap_or(f64::INFINITY)
    }

    /// Full breakdown for an assignment of every compute fragment.
    pub fn breakdown(&self, platforms: &BTreeMap<String, String>) -> CostBreakdown {
        let mut b = CostBreakdown::default();
        for f in self.fragments {
            match f.kind {
                FragmentKind::Compute => {
                    b.execution.insert(f.fragment_id.clone(), self.execution(f, &platforms[&f.fragment_id]));
                }
                FragmentKind::Transfer => {
                    let from = &platforms[f.from_fragment.as_ref().unwrap()];
                    let to = &platforms[f.to_fragment.as_ref().unwrap()];
                    b.transfer.insert(f.fragment_id.clone(), self.transfer(f, from, to));
                }
            }
        }
        b.finish()
    }

    /// Platforms a compute fragment may run on: its data sites when pinned,
    /// restricted to those with enough GPUs.
    pub fn candidates(&self, f: &Fragment) -> Vec<String> {
        let base: Vec<String> = match &f.pinned {
            Some(sites) => sites.clone(),
            None => self.registry.ids(),
        };
        let mut c: Vec<String> = base
            .into_iter()
            .filter(|p| self.registry.get(p).is_some_and(|d| d.gpus >= f.gpus_required))
            .collect();
        c.sort();
        c.dedup();
        c
    }
}

fn compute(fragments: &[Fragment]) -> Vec<&Fragment> {
    fragments.iter().filter(|f| f.kind == FragmentKind::Compute).collect()
}

/// Assigns every compute fragment to a platform. An assignment that cannot
/// meet a GPU requirement is returned with `feasible = false`.
pub fn assign(
    fragments: &[Fragment],
    registry: &PlatformRegistry,
    inputs: &CostInputs,
    strategy: Strategy,
) -> Result<(Assignment, CostBreakdown), SchedulerError> {
    let ids = registry.ids();
    let missing = registry.bandwidth.missing_pairs(ids.iter().map(String::as_str));
    if !missing.is_empty() {
        return Err(SchedulerError::IncompleteBandwidthMatrix(missing));
    }
    let model = CostModel { fragments, registry, inputs };
    let comps = compute(fragments);
    let mut diagnostics = Vec::new();
    let mut cands: Vec<Vec<String>> = Vec::new();
    for f in &comps {
        let c = model.candidates(f);
        if c.is_empty() {
            diagnostics.push(format!("NoFeasiblePlatform: {} needs {} GPU(s)", f.fragment_id, f.gpus_required));
            let fallback = f.pinned.clone().unwrap_or_else(|| ids.clone());
            cands.push(vec![fallback.into_iter().min().unwrap_or_default()]);
        } else {
            cands.push(c);
        }
    }
    let platforms = match strategy {
        Strategy::Heuristic => heuristic(&model, &comps, &cands),
        Strategy::Exhaustive => exhaustive(&model, &comps, &cands),
    };
    let breakdown = model.breakdown(&platforms);
    let assignment = Assignment { platforms, total_cost: breakdown.total, feasible: diagnostics.is_empty(), diagnostics };
    Ok((assignment, breakdown))
}

fn heuristic(model: &CostModel, comps: &[&Fragment], cands: &[Vec<String>]) -> BTreeMap<String, String> {
    let mut chosen: BTreeMap<String, String> = BTreeMap::new();
    for (f, cs) in comps.iter().zip(cands) {
        let incoming: Vec<&Fragment> =
            model.fragments.iter().filter(|t| t.kind == FragmentKind::Transfer && t.to_fragment.as_ref() == Some(&f.fragment_id)).collect();
        let cost = |p: &String| {
            let inbound: f64 = incoming
                .iter()
                .filter_map(|t| chosen.get(t.from_fragment.as_ref().unwrap()).map(|from| model.transfer(t, from, p)))
                .sum();
            model.execution(f, p) + inbound
        };
        let best = cs.iter().min_by(|a, b| cost(a).total_cmp(&cost(b)).then(a.cmp(b))).unwrap().clone();
        chosen.insert(f.fragment_id.clone(), best);
    }
    // Local search: apply the best improving single-fragment move until none is left.
    for _ in 0..64 {
        let current = model.breakdown(&chosen).total;
        let mut best: Option<(f64, String, String)> = None;
        for (f, cs) in comps.iter().zip(cands) {
            for p in cs {
                if chosen[&f.fragment_id] == *p {
                    continue;
                }
                let mut trial = chosen.clone();
                trial.insert(f.fragment_id.clone(), p.clone());
                let t = model.breakdown(&trial).total;
                if t < current - 1e-12 * current.abs().max(1.0) && best.as_ref().is_none_or(|(b, _, _)| t < *b) {
                    best = Some((t, f.fragment_id.clone(), p.clone()));
                }
            }
        }
        match best {
            Some((_, f, p)) => {
                chosen.insert(f, p);
            }
            None => break,
        }
    }
    chosen
}

fn exhaustive(model: &CostModel, comps: &[&Fragment], cands: &[Vec<String>]) -> BTreeMap<String, String> {
    let mut idx = vec![0usize; comps.len()];
    let mut best: Option<(f64, Vec<String>)> = None;
    loop {
        let pick: Vec<String> = idx.iter().zip(cands).map(|(&i, c)| c[i].clone()).collect();
        let platforms: BTreeMap<String, String> = comps.iter().map(|f| f.fragment_id.clone()).zip(pick.iter().cloned()).collect();
        let total = model.breakdown(&platforms).total;
        let better = match &best {
            None => true,
            Some((b, v)) => total < *b || (total == *b && pick < *v),
        };
        if better {
            best = Some((total, pick));
        }
        // Odometer increment over candidate lists.
        let mut k = 0;
        loop {
            if k == idx.len() {
                let pick = best.expect("at least one assignment").1;
                return comps.iter().map(|f| f.fragment_id.clone()).zip(pick).collect();
            }
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

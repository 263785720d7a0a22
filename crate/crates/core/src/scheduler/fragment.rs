use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::SchedulerError;
use crate::catalog::PlatformRegistry;
use crate::model::{propagate, DataflowGraph, NodeSpec, OperatorClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FragmentKind {
    Compute,
    Transfer,
}

/// Unit of platform assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub fragment_id: String,
    pub kind: FragmentKind,
    /// Dataflow nodes for compute fragments; synthetic send/recv nodes for transfers.
    pub node_ids: Vec<String>,
    pub entry: Vec<String>,
    pub exit: Vec<String>,
    /// GPUs needed by the most demanding train node.
    #[serde(default)]
    pub gpus_required: u32,
    /// Platforms holding the fragment's source data, home site first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned: Option<Vec<String>>,
    /// Transfers only: moved connector and the fragments it links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connector: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_fragment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_fragment: Option<String>,
}

impl Fragment {
    pub fn contains_train(&self, graph: &DataflowGraph) -> bool {
        self.node_ids.iter().any(|n| graph.node(n).is_some_and(|x| x.operator == OperatorClass::Train))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Label {
    Site(String),
    Merge(String),
}

/// GPUs requested by a train node, default one.
pub(crate) fn gpus_of(graph: &DataflowGraph, node: &str) -> u32 {
    let prop = propagate(graph);
    match prop.specs.get(node) {
        Some(NodeSpec::Train { gpus, .. }) => *gpus,
        _ => graph.node(node).and_then(|n| n.params.get("gpus")).and_then(|v| v.as_u64()).map_or(1, |g| g as u32),
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = x;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

/// Splits `graph` into connected compute fragments and inserts a transfer
/// fragment on every cut edge. `placements` maps each source placeholder to
/// the platforms holding it, home first.
pub fn fragment(
    graph: &DataflowGraph,
    placements: &BTreeMap<String, Vec<String>>,
    registry: &PlatformRegistry,
) -> Result<Vec<Fragment>, SchedulerError> {
    let order = graph.topo_order()?;
    let producers = graph.producers();
    let mut labels: BTreeMap<&str, Label> = BTreeMap::new();
    let mut cut: BTreeSet<(String, String, String)> = BTreeSet::new();

    for id in &order {
        let node = graph.node(id).expect("topo order lists graph nodes");
        let label = if node.operator == OperatorClass::Source {
            let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
            for p in &node.inputs {
                let sites = placements.get(p).filter(|s| !s.is_empty()).ok_or_else(|| SchedulerError::UnplacedInput(p.clone()))?;
                *votes.entry(sites[0].as_str()).or_default() += 1;
            }
            let site = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(s, _)| s.to_string());
            Label::Site(site.unwrap_or_default())
        } else {
            let upstream: Vec<(&String, &str)> =
                node.inputs.iter().filter_map(|c| producers.get(c.as_str()).map(|p| (c, *p))).collect();
            let distinct: BTreeSet<&Label> = upstream.iter().map(|(_, p)| &labels[p]).collect();
            let mixed = distinct.len() > 1;
            let mut label = match upstream.first() {
                Some((_, p)) if !mixed => labels[p].clone(),
                _ => Label::Merge(id.clone()),
            };
            if mixed {
                for (c, p) in &upstream {
                    cut.insert((p.to_string(), (*c).clone(), id.clone()));
                }
            }
            if node.operator == OperatorClass::Train {
                if let Label::Site(s) = &label {
                    let gpus = registry.get(s).map_or(0, |p| p.gpus);
                    if gpus < gpus_of(graph, id) {
                        for (c, p) in &upstream {
                            cut.insert((p.to_string(), (*c).clone(), id.clone()));
                        }
                        label = Label::Merge(id.clone());
                    }
                }
            }
            label
        };
        labels.insert(id.as_str(), label);
    }

    let index: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..order.len()).collect();
    for e in &graph.edges {
        if !cut.contains(&(e.producer.clone(), e.output.clone(), e.consumer.clone())) {
            let (a, b) = (find(&mut parent, index[e.producer.as_str()]), find(&mut parent, index[e.consumer.as_str()]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, n) in order.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(n.clone());
    }
    // Roots are the smallest topological index of each group, so this order is topological.
    let mut frag_of: BTreeMap<String, String> = BTreeMap::new();
    let mut fragments = Vec::new();
    for (k, (_, nodes)) in groups.into_iter().enumerate() {
        let fid = format!("f{k}");
        let mut entry = Vec::new();
        let mut exit = Vec::new();
        let mut pinned: Option<Vec<String>> = None;
        let mut gpus = 0;
        for n in &nodes {
            frag_of.insert(n.clone(), fid.clone());
            let node = graph.node(n).unwrap();
            match node.operator {
                OperatorClass::Source => {
                    for p in &node.inputs {
                        entry.push(p.clone());
                        let sites = &placements[p];
                        pinned = Some(match pinned {
                            None => sites.clone(),
                            Some(cur) => {
                                let both: Vec<String> = cur.iter().filter(|s| sites.contains(s)).cloned().collect();
                                if both.is_empty() {
                                    cur
                                } else {
                                    both
                                }
                            }
                        });
                    }
                }
                OperatorClass::Sink => exit.push(node.params.get("name").and_then(|v| v.as_str()).unwrap_or(n).to_string()),
                OperatorClass::Train => gpus = gpus.max(gpus_of(graph, n)),
                _ => {}
            }
        }
        fragments.push(Fragment {
            fragment_id: fid,
            kind: FragmentKind::Compute,
            node_ids: nodes,
            entry,
            exit,
            gpus_required: gpus,
            pinned,
            connector: None,
            from_fragment: None,
            to_fragment: None,
        });
    }
    let mut transfers = Vec::new();
    let mut seen = BTreeSet::new();
    for (producer, connector, consumer) in &cut {
        let (from, to) = (frag_of[producer].clone(), frag_of[consumer].clone());
        if !seen.insert((connector.clone(), to.clone())) {
            continue;
        }
        let tid = format!("t{}", transfers.len());
        for f in fragments.iter_mut() {
            if f.fragment_id == from && !f.exit.contains(connector) {
                f.exit.push(connector.clone());
            }
            if f.fragment_id == to && !f.entry.contains(connector) {
                f.entry.push(connector.clone());
            }
        }
        transfers.push(Fragment {
            fragment_id: tid,
            kind: FragmentKind::Transfer,
            node_ids: vec![format!("send:{connector}"), format!("recv:{connector}")],
            entry: vec![connector.clone()],
            exit: vec![connector.clone()],
            gpus_required: 0,
            pinned: None,
            connector: Some(connector.clone()),
            from_fragment: Some(from),
            to_fragment: Some(to),
        });
    }
    fragments.extend(transfers);
    Ok(fragments)
}

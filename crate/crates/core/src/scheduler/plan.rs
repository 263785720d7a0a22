use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::assign::{Assignment, CostBreakdown};
use super::fragment::{Fragment, FragmentKind};
use super::SchedulerError;
use crate::catalog::{ExecutorKind, PlatformRegistry};
use crate::model::{DataflowGraph, Gid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StagingMode {
    /// Data already sits on the executing platform.
    Local,
    /// Read from a replica held on the executing platform.
    Replica,
    /// Moved by a transfer job.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Staging {
    pub dataset: String,
    pub from_platform: String,
    pub to_platform: String,
    pub mode: StagingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub fragment_id: String,
    pub kind: FragmentKind,
    pub platform_id: String,
    pub backend: ExecutorKind,
    pub node_ids: Vec<String>,
    pub depends_on: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub staging: Vec<Staging>,
}

/// Fragmented, assigned and costed dataflow ready for execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataflow: Option<Gid>,
    pub graph: DataflowGraph,
    pub fragments: Vec<Fragment>,
    pub assignment: Assignment,
    pub costs: CostBreakdown,
    pub jobs: Vec<Job>,
    /// Transfers between fragments that landed on the same platform.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elided_transfers: Vec<String>,
}

impl ScheduledPlan {
    /// Platform of every dataflow node.
    pub fn node_platforms(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for f in self.fragments.iter().filter(|f| f.kind == FragmentKind::Compute) {
            for n in &f.node_ids {
                out.insert(n.clone(), self.assignment.platforms[&f.fragment_id].clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SchedulerError> {
        serde_json::from_str(text).map_err(|e| SchedulerError::MalformedPlan(e.to_string()))
    }
}

/// Turns fragments and a feasible assignment into jobs with dependency edges.
/// Transfers whose ends share a platform become direct dependencies.
pub fn materialize(
    graph: &DataflowGraph,
    fragments: &[Fragment],
    assignment: &Assignment,
    costs: &CostBreakdown,
    registry: &PlatformRegistry,
) -> Result<ScheduledPlan, SchedulerError> {
    if !assignment.feasible {
        return Err(SchedulerError::InfeasibleAssignment(assignment.diagnostics.join("; ")));
    }
    let job_of = |f: &str| format!("job-{f}");
    let mut jobs: Vec<Job> = Vec::new();
    let mut deps: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut elided = Vec::new();
    let mut staging: BTreeMap<String, Vec<Staging>> = BTreeMap::new();
    for t in fragments.iter().filter(|f| f.kind == FragmentKind::Transfer) {
        let (from, to) = (t.from_fragment.clone().unwrap(), t.to_fragment.clone().unwrap());
        let (pf, pt) = (assignment.platforms[&from].clone(), assignment.platforms[&to].clone());
        let connector = t.connector.clone().unwrap_or_default();
        if pf == pt {
            elided.push(t.fragment_id.clone());
            deps.entry(job_of(&to)).or_default().push(job_of(&from));
            staging.entry(to).or_default().push(Staging { dataset: connector, from_platform: pf.clone(), to_platform: pt, mode: StagingMode::Local });
        } else {
            deps.entry(job_of(&t.fragment_id)).or_default().push(job_of(&from));
            deps.entry(job_of(&to)).or_default().push(job_of(&t.fragment_id));
            staging.entry(to).or_default().push(Staging { dataset: connector.clone(), from_platform: pf.clone(), to_platform: pt.clone(), mode: StagingMode::Transfer });
            jobs.push(Job {
                job_id: job_of(&t.fragment_id),
                fragment_id: t.fragment_id.clone(),
                kind: FragmentKind::Transfer,
                platform_id: pt,
                backend: ExecutorKind::Single,
                node_ids: t.node_ids.clone(),
                depends_on: vec![],
                staging: vec![],
            });
        }
    }
    for f in fragments.iter().filter(|f| f.kind == FragmentKind::Compute) {
        let p = assignment.platforms[&f.fragment_id].clone();
        let mut stage = staging.remove(&f.fragment_id).unwrap_or_default();
        if let Some(sites) = &f.pinned {
            let home = sites.first().cloned().unwrap_or_default();
            let missing: Vec<&String> = f.entry.iter().filter(|e| !stage.iter().any(|s| &s.dataset == *e)).collect();
            for e in missing {
                let mode = if home == p { StagingMode::Local } else { StagingMode::Replica };
                stage.push(Staging { dataset: e.clone(), from_platform: home.clone(), to_platform: p.clone(), mode });
            }
        }
        jobs.push(Job {
            job_id: job_of(&f.fragment_id),
            fragment_id: f.fragment_id.clone(),
            kind: FragmentKind::Compute,
            platform_id: p.clone(),
            backend: registry.get(&p).map(|d| d.executor_kind).unwrap_or_default(),
            node_ids: f.node_ids.clone(),
            depends_on: vec![],
            staging: stage,
        });
    }
    for j in jobs.iter_mut() {
        let mut d = deps.remove(&j.job_id).unwrap_or_default();
        d.sort();
        d.dedup();
        j.depends_on = d;
    }
    jobs.sort_by(|a, b| a.job_id.cmp(&b.job_id));
    Ok(ScheduledPlan {
        dataflow: None,
        graph: graph.clone(),
        fragments: fragments.to_vec(),
        assignment: assignment.clone(),
        costs: costs.clone(),
        jobs,
        elided_transfers: elided,
    })
}

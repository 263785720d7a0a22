use std::collections::BTreeMap;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::Bucket;
use crate::model::{Gid, OperatorClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Success,
    Failed,
}

/// Retrospective record of one dataflow execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: Gid,
    pub dataflow: Gid,
    pub platform_assignment: BTreeMap<String, String>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
    pub status: RunStatus,
}

/// Per-node execution statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorTrace {
    pub run_id: Gid,
    pub node_id: String,
    pub function_alias: String,
    pub operator: OperatorClass,
    pub platform_id: String,
    pub input_cardinalities: Vec<u64>,
    pub output_cardinality: u64,
    pub wall_time: Duration,
    pub peak_live_tuples: u64,
    #[serde(default)]
    pub produced_gid: Option<Gid>,
    /// Bound artifacts upstream of this node.
    #[serde(default)]
    pub input_gids: Vec<Gid>,
    /// User-defined values emitted by node hooks.
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl OperatorTrace {
    pub fn total_input(&self) -> u64 {
        self.input_cardinalities.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetric {
    pub epoch: u32,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub run_id: Gid,
    pub node_id: String,
    pub per_epoch: Vec<EpochMetric>,
    pub final_metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    Transformation,
    ModelRun,
    ModelTraining,
}

/// Links a produced artifact to the run, node, function and inputs that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceLink {
    pub produced: Gid,
    pub run_id: Gid,
    pub dataflow: Gid,
    pub node_id: String,
    pub function_alias: String,
    pub operator: OperatorClass,
    pub inputs: Vec<Gid>,
    pub activity: ActivityKind,
}

impl ProvenanceLink {
    /// Identifier of the activity that produced the artifact.
    pub fn activity_id(&self) -> String {
        format!("{}:{}", self.run_id, self.node_id)
    }
}

/// Prospective or lifecycle events attached to an artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProvenanceEvent {
    Registered { gid: Gid, source: String, at: DateTime<Utc> },
    Promoted { gid: Gid, from: Bucket, to: Bucket, at: DateTime<Utc> },
    Replicated { gid: Gid, platform: String, at: DateTime<Utc> },
    ReplicaEvicted { gid: Gid, platform: String, at: DateTime<Utc> },
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::model::{DataflowGraph, FunctionDescriptor, Gid, ModelSignature, PortType, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Dataset,
    Model,
    Function,
    Dataflow,
}

impl ArtifactKind {
    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::Dataset => "dataset",
            ArtifactKind::Model => "model",
            ArtifactKind::Function => "function",
            ArtifactKind::Dataflow => "dataflow",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArtifactKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dataset" => Ok(ArtifactKind::Dataset),
            "model" => Ok(ArtifactKind::Model),
            "function" => Ok(ArtifactKind::Function),
            "dataflow" => Ok(ArtifactKind::Dataflow),
            _ => Err(format!("unknown artifact kind {s:?}")),
        }
    }
}

/// Dataset lifecycle stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Landing,
    Staging,
    Curated,
}

impl Bucket {
    pub fn next(self) -> Option<Bucket> {
        match self {
            Bucket::Landing => Some(Bucket::Staging),
            Bucket::Staging => Some(Bucket::Curated),
            Bucket::Curated => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Landing => "landing",
            Bucket::Staging => "staging",
            Bucket::Curated => "curated",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Bucket {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "landing" => Ok(Bucket::Landing),
            "staging" => Ok(Bucket::Staging),
            "curated" => Ok(Bucket::Curated),
            _ => Err(format!("unknown bucket {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub platform: String,
    pub path: String,
}

impl Location {
    pub fn new(platform: impl Into<String>, path: impl Into<String>) -> Self {
        Location { platform: platform.into(), path: path.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub schema: Schema,
    #[serde(default)]
    pub format: DataFormat,
    pub bucket: Bucket,
    pub location: Location,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<u64>,
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub gid: Gid,
    pub kind: ArtifactKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    pub name: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version_of: Option<Gid>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub metadata: BTreeMap<String, Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetInfo>,
    /// Stored file for models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataflow: Option<DataflowGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionDescriptor>,
}

impl ArtifactRecord {
    pub fn meta_str(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).and_then(Json::as_str)
    }

    pub fn training_dataset(&self) -> Option<Gid> {
        self.meta_str("training_dataset").and_then(|s| s.parse().ok())
    }

    /// Port type this artifact takes when bound to a source input.
    pub fn port_type(&self) -> Option<PortType> {
        match self.kind {
            ArtifactKind::Dataset => self.dataset.as_ref().map(|d| PortType::table(d.schema.clone())),
            ArtifactKind::Model => {
                let features = match self.metadata.get("features") {
                    Some(Json::Array(items)) => items.iter().filter_map(|v| v.as_str().map(String::from)).collect(),
                    Some(Json::String(s)) => s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect(),
                    _ => Vec::new(),
                };
                let target = self.meta_str("target").unwrap_or("").to_string();
                Some(PortType::Model { signature: ModelSignature { features, target } })
            }
            _ => None,
        }
    }
}

/// Descriptor for a new artifact; the catalog assigns gid, version and time.
#[derive(Debug, Clone, PartialEq)]
pub struct NewArtifact {
    pub kind: ArtifactKind,
    pub domain: Option<String>,
    pub name: String,
    pub version_of: Option<Gid>,
    pub metadata: BTreeMap<String, Json>,
    pub dataset: Option<DatasetInfo>,
    pub location: Option<Location>,
    pub dataflow: Option<DataflowGraph>,
    pub function: Option<FunctionDescriptor>,
}

impl NewArtifact {
    pub fn new(kind: ArtifactKind, name: impl Into<String>) -> Self {
        NewArtifact {
            kind,
            domain: None,
            name: name.into(),
            version_of: None,
            metadata: BTreeMap::new(),
            dataset: None,
            location: None,
            dataflow: None,
            function: None,
        }
    }

    pub fn dataset(name: impl Into<String>, schema: Schema, bucket: Bucket, location: Location) -> Self {
        let mut a = Self::new(ArtifactKind::Dataset, name);
        a.dataset = Some(DatasetInfo { schema, format: DataFormat::Csv, bucket, location, rows: None });
        a
    }

    pub fn model(name: impl Into<String>, task_type: &str, learning_scope: &str) -> Self {
        Self::new(ArtifactKind::Model, name).with_meta("task_type", task_type).with_meta("learning_scope", learning_scope)
    }

    pub fn function(descriptor: FunctionDescriptor) -> Self {
        let mut a = Self::new(ArtifactKind::Function, descriptor.alias.clone());
        a.function = Some(descriptor);
        a
    }

    pub fn dataflow(graph: DataflowGraph) -> Self {
        let mut a = Self::new(ArtifactKind::Dataflow, graph.description.clone());
        a.dataflow = Some(graph);
        a
    }

    pub fn in_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = Some(domain.into());
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<Json>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn version_of(mut self, parent: Gid) -> Self {
        self.version_of = Some(parent);
        self
    }

    pub fn at(mut self, location: Location) -> Self {
        self.location = Some(location);
        self
    }
}

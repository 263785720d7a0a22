use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ExecError;
use crate::model::{Row, Schema, Value};

/// Hash partitioning descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partitioning {
    pub key: String,
    pub partitions: usize,
}

/// A table held in memory, optionally split into partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct InMemoryDataset {
    pub schema: Schema,
    pub parts: Vec<Vec<Row>>,
    pub partitioning: Option<Partitioning>,
}

impl InMemoryDataset {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Self {
        InMemoryDataset { schema, parts: vec![rows], partitioning: None }
    }

    pub fn len(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.parts.iter().flatten()
    }

    /// All rows sorted by every column; the canonical multiset form.
    pub fn sorted_rows(&self) -> Vec<Row> {
        let mut rows: Vec<Row> = self.rows().cloned().collect();
        rows.sort();
        rows
    }

    /// Checks every row against the schema.
    pub fn conforms(&self) -> Result<(), String> {
        for row in self.rows() {
            if row.len() != self.schema.len() {
                return Err(format!("row has {} cells, schema has {}", row.len(), self.schema.len()));
            }
            for (v, a) in row.iter().zip(self.schema.attributes()) {
                if v.attr_type() != a.ty {
                    return Err(format!("{} holds {} but is declared {}", a.name, v.attr_type(), a.ty));
                }
            }
        }
        Ok(())
    }

    /// Reads a headed CSV file, selecting and parsing the schema columns by name.
    pub fn read_csv(path: &Path, schema: &Schema) -> Result<Self, ExecError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| ExecError::MissingInput(format!("{}: {e}", path.display())))?;
        let bad = |m: String| ExecError::SchemaViolation { node: path.display().to_string(), message: m };
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        let positions = schema
            .names()
            .map(|n| headers.iter().position(|h| h == n).ok_or_else(|| bad(format!("missing column {n}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = positions
                .iter()
                .zip(schema.attributes())
                .map(|(&p, a)| Value::parse_as(rec.get(p).unwrap_or(""), a.ty))
                .collect::<Result<Row, _>>()
                .map_err(bad)?;
            rows.push(row);
        }
        Ok(InMemoryDataset::new(schema.clone(), rows))
    }

    /// Writes all rows sorted by every column, so equal multisets give equal bytes.
    pub fn write_csv(&self, path: &Path) -> Result<(), ExecError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| ExecError::Io(e.to_string()))?;
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| ExecError::Io(e.to_string()))?;
        w.write_record(self.schema.names()).map_err(|e| ExecError::Io(e.to_string()))?;
        for row in self.sorted_rows() {
            w.write_record(row.iter().map(Value::to_cell)).map_err(|e| ExecError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| ExecError::Io(e.to_string()))
    }
}

pub const LEAST_SQUARES: &str = "least-squares-linear";

/// Fitted linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gid: Option<crate::model::Gid>,
    pub kind: String,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub training_metrics: BTreeMap<String, f64>,
}

impl ModelArtifact {
    pub fn predict(&self, features: &[f64]) -> f64 {
        self.coefficients.iter().zip(features).fold(self.intercept, |acc, (c, x)| acc + c * x)
    }

    pub fn read_json(path: &Path) -> Result<Self, ExecError> {
        let text = fs::read_to_string(path).map_err(|e| ExecError::MissingInput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ExecError::SchemaViolation { node: path.display().to_string(), message: e.to_string() })
    }

    pub fn write_json(&self, path: &Path) -> Result<(), ExecError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| ExecError::Io(e.to_string()))?;
        }
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, text).map_err(|e| ExecError::Io(e.to_string()))
    }
}

/// Value flowing through a connector.
#[derive(Debug, Clone, PartialEq)]
pub enum Port {
    Table(InMemoryDataset),
    Model(Arc<ModelArtifact>),
}

impl Port {
    /// Live tuple count; a model counts as one.
    pub fn tuples(&self) -> u64 {
        match self {
            Port::Table(t) => t.len() as u64,
            Port::Model(_) => 1,
        }
    }

    pub fn table(&self) -> Option<&InMemoryDataset> {
        match self {
            Port::Table(t) => Some(t),
            Port::Model(_) => None,
        }
    }
}

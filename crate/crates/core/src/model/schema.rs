use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// Attribute types supported by datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Int64,
    Float64,
    String,
    Bool,
    Timestamp,
}

impl AttrType {
    pub fn is_numeric(self) -> bool {
        matches!(self, AttrType::Int64 | AttrType::Float64)
    }

    /// Fixed byte width used for transfer-size estimates.
    pub fn byte_width(self, string_width: f64) -> f64 {
        match self {
            AttrType::Int64 | AttrType::Float64 | AttrType::Timestamp => 8.0,
            AttrType::Bool => 1.0,
            AttrType::String => string_width,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AttrType::Int64 => "int64",
            AttrType::Float64 => "float64",
            AttrType::String => "string",
            AttrType::Bool => "bool",
            AttrType::Timestamp => "timestamp",
        }
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttrType {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "int64" | "int" => Ok(AttrType::Int64),
            "float64" | "float" | "double" => Ok(AttrType::Float64),
            "string" | "str" => Ok(AttrType::String),
            "bool" | "boolean" => Ok(AttrType::Bool),
            "timestamp" => Ok(AttrType::Timestamp),
            other => Err(SchemaError::UnknownType(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("UnknownType: {0}")]
    UnknownType(String),
    #[error("DuplicateAttribute: {0}")]
    DuplicateAttribute(String),
    #[error("EmptyAttributeName")]
    EmptyAttributeName,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttrType,
}

/// Ordered attribute list. Names are unique and nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self, SchemaError> {
        let mut seen = std::collections::HashSet::new();
        for a in &attributes {
            if a.name.is_empty() {
                return Err(SchemaError::EmptyAttributeName);
            }
            if !seen.insert(a.name.as_str()) {
                return Err(SchemaError::DuplicateAttribute(a.name.clone()));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, AttrType)>) -> Result<Self, SchemaError> {
        Schema::new(
            pairs
                .into_iter()
                .map(|(name, ty)| Attribute { name: name.into(), ty })
                .collect(),
        )
    }

    /// Parses `name:type,name:type`.
    pub fn parse_spec(spec: &str) -> Result<Self, SchemaError> {
        let mut attrs = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, ty) = part.split_once(':').ok_or_else(|| SchemaError::UnknownType(part.to_string()))?;
            attrs.push(Attribute { name: name.trim().to_string(), ty: ty.parse()? });
        }
        Schema::new(attrs)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn type_of(&self, name: &str) -> Option<AttrType> {
        self.attributes.iter().find(|a| a.name == name).map(|a| a.ty)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn row_bytes(&self, string_width: f64) -> f64 {
        self.attributes.iter().map(|a| a.ty.byte_width(string_width)).sum()
    }

    /// Replaces the type of an existing attribute or appends a new one.
    pub fn with_attribute(&self, name: &str, ty: AttrType) -> Schema {
        let mut attributes = self.attributes.clone();
        match attributes.iter_mut().find(|a| a.name == name) {
            Some(a) => a.ty = ty,
            None => attributes.push(Attribute { name: name.to_string(), ty }),
        }
        Schema { attributes }
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let attributes = Vec::<Attribute>::deserialize(deserializer)?;
        Schema::new(attributes).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.attributes.iter().map(|a| format!("{}:{}", a.name, a.ty)).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A single cell value. Equality, ordering and hashing are total (floats
/// compare by `total_cmp`), so values can serve as keys and multiset
/// elements. Predicate evaluation uses numeric semantics instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Timestamp(NaiveDateTime),
    Str(String),
}

impl Value {
    pub fn attr_type(&self) -> AttrType {
        match self {
            Value::Int(_) => AttrType::Int64,
            Value::Float(_) => AttrType::Float64,
            Value::Str(_) => AttrType::String,
            Value::Bool(_) => AttrType::Bool,
            Value::Timestamp(_) => AttrType::Timestamp,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
            Value::Timestamp(_) => 3,
            Value::Str(_) => 4,
        }
    }

    /// Parses a text cell strictly as `ty`.
    pub fn parse_as(text: &str, ty: AttrType) -> Result<Value, String> {
        let t = text.trim();
        match ty {
            AttrType::Int64 => t.parse::<i64>().map(Value::Int).map_err(|e| format!("{text:?} as int64: {e}")),
            AttrType::Float64 => t
                .parse::<f64>()
                .map(Value::Float)
                .map_err(|e| format!("{text:?} as float64: {e}")),
            AttrType::Bool => match t.to_ascii_lowercase().as_str() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(format!("{text:?} as bool")),
            },
            AttrType::Timestamp => parse_timestamp(t)
                .map(Value::Timestamp)
                .ok_or_else(|| format!("{text:?} as timestamp")),
            AttrType::String => Ok(Value::Str(text.to_string())),
        }
    }

    /// Renders the value as a CSV cell.
    pub fn to_cell(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format_float(*f),
            Value::Bool(b) => b.to_string(),
            Value::Timestamp(t) => t.format("%Y-%m-%dT%H:%M:%S%.f").to_string(),
            Value::Str(s) => s.clone(),
        }
    }

    /// Converts between types for `cast`. Strings are parsed strictly.
    pub fn cast_to(&self, ty: AttrType) -> Result<Value, String> {
        match (self, ty) {
            (v, t) if v.attr_type() == t => Ok(v.clone()),
            (Value::Str(s), t) => Value::parse_as(s, t),
            (Value::Int(i), AttrType::Float64) => Ok(Value::Float(*i as f64)),
            (Value::Float(f), AttrType::Int64) => {
                if f.is_finite() && f.fract() == 0.0 && f.abs() < 9.2e18 {
                    Ok(Value::Int(*f as i64))
                } else {
                    Err(format!("{f} is not an exact int64"))
                }
            }
            (Value::Bool(b), AttrType::Int64) => Ok(Value::Int(*b as i64)),
            (v, AttrType::String) => Ok(Value::Str(v.to_cell())),
            (v, t) => Err(format!("cannot cast {} to {t}", v.attr_type())),
        }
    }
}

/// Shortest representation that round-trips through `f64::from_str`.
pub fn format_float(f: f64) -> String {
    let s = format!("{f}");
    if f.is_finite() && !s.contains('.') {
        format!("{s}.0")
    } else {
        s
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(t) = s.parse::<NaiveDateTime>() {
        return Some(t);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Timestamp(a), Value::Timestamp(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Bool(b) => b.hash(state),
            Value::Timestamp(t) => t.hash(state),
            Value::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cell())
    }
}

pub type Row = Vec<Value>;

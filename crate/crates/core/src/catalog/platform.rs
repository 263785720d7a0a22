use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExecutorKind {
    #[default]
    Single,
    Partitioned,
}

/// A registered execution environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformDescriptor {
    pub platform_id: String,
    pub cpu_cores: u32,
    pub gpus: u32,
    /// Per-tuple throughput multiplier; 1.0 is the reference platform.
    pub relative_speed: f64,
    pub storage_root: String,
    #[serde(default)]
    pub executor_kind: ExecutorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEntry {
    pub from: String,
    pub to: String,
    pub mbps: f64,
}

/// Directed MB/s between platforms. Self-transfers are free.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BandwidthMatrix {
    entries: BTreeMap<(String, String), f64>,
}

impl BandwidthMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, from: &str, to: &str, mbps: f64) {
        self.entries.insert((from.to_string(), to.to_string()), mbps);
    }

    pub fn mbps(&self, from: &str, to: &str) -> Option<f64> {
        if from == to {
            return Some(f64::INFINITY);
        }
        self.entries.get(&(from.to_string(), to.to_string())).copied()
    }

    /// Seconds to move `bytes` from one platform to another.
    pub fn transfer_seconds(&self, from: &str, to: &str, bytes: f64) -> Option<f64> {
        if from == to {
            return Some(0.0);
        }
        self.mbps(from, to).map(|m| bytes / (m * 1e6))
    }

    /// Ordered off-diagonal pairs among `platforms` with no entry.
    pub fn missing_pairs<'a>(&self, platforms: impl IntoIterator<Item = &'a str> + Clone) -> Vec<(String, String)> {
        let mut missing = Vec::new();
        for a in platforms.clone() {
            for b in platforms.clone() {
                if a != b && !self.entries.contains_key(&(a.to_string(), b.to_string())) {
                    missing.push((a.to_string(), b.to_string()));
                }
            }
        }
        missing
    }

    pub fn entries(&self) -> Vec<BandwidthEntry> {
        self.entries
            .iter()
            .map(|((from, to), mbps)| BandwidthEntry { from: from.clone(), to: to.clone(), mbps: *mbps })
            .collect()
    }
}

impl Serialize for BandwidthMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.entries().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BandwidthMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<BandwidthEntry>::deserialize(deserializer)?;
        let mut m = BandwidthMatrix::new();
        for e in entries {
            if !(e.mbps > 0.0) {
                return Err(serde::de::Error::custom(format!("bandwidth {} -> {} must be positive", e.from, e.to)));
            }
            m.set(&e.from, &e.to, e.mbps);
        }
        Ok(m)
    }
}

/// Platforms plus bandwidth, as loaded from a registry file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlatformRegistry {
    pub platforms: Vec<PlatformDescriptor>,
    #[serde(default)]
    pub bandwidth: BandwidthMatrix,
}

impl PlatformRegistry {
    pub fn get(&self, id: &str) -> Option<&PlatformDescriptor> {
        self.platforms.iter().find(|p| p.platform_id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.platforms.iter().map(|p| p.platform_id.clone()).collect();
        ids.sort();
        ids
    }
}

use std::path::{Path, PathBuf};

use anyhow::Context;
use artiflow_core::catalog::ReplicationPolicy;
use artiflow_core::optimizer::RewriteOptions;
use artiflow_core::provenance::StatsDefaults;
use serde::{Deserialize, Serialize};

use crate::output::usage;

pub const CATALOG_ENV: &str = "GYP_CATALOG";
pub const WORKERS_ENV: &str = "GYP_WORKERS";
const DEFAULT_CATALOG: &str = "artiflow-catalog.ndjson";

/// Settings read from the optional JSON config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub catalog: Option<PathBuf>,
    pub default_platform: Option<String>,
    pub stats: Option<StatsDefaults>,
    pub replication_threshold: Option<u32>,
    pub rewrite: Option<RewriteOptions>,
    pub workers: Option<usize>,
}

/// Effective configuration after merging file, flags and environment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub catalog: PathBuf,
    pub default_platform: Option<String>,
    pub stats: StatsDefaults,
    pub replication: ReplicationPolicy,
    pub rewrite: RewriteOptions,
    /// 0 means one worker per CPU.
    pub workers: usize,
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

impl Config {
    /// Environment beats flags, flags beat the file.
    pub fn resolve(file: Option<&Path>, catalog_flag: Option<PathBuf>, workers_flag: Option<usize>) -> anyhow::Result<Config> {
        let fc = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| usage(format!("invalid config {}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let catalog = env_var(CATALOG_ENV)
            .map(PathBuf::from)
            .or(catalog_flag)
            .or(fc.catalog)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CATALOG));
        let workers = match env_var(WORKERS_ENV) {
            Some(v) => v.trim().parse::<usize>().with_context(|| format!("{WORKERS_ENV}={v} is not a count")).map_err(|e| usage(format!("{e:#}")))?,
            None => workers_flag.or(fc.workers).unwrap_or(0),
        };
        let stats = fc.stats.unwrap_or_default();
        if !(stats.selectivity > 0.0 && stats.cost_per_tuple > 0.0) {
            return Err(usage("stats defaults must be positive"));
        }
        let mut replication = ReplicationPolicy::default();
        if let Some(t) = fc.replication_threshold {
            replication.threshold = t;
        }
        Ok(Config {
            catalog,
            default_platform: fc.default_platform,
            stats,
            replication,
            rewrite: fc.rewrite.unwrap_or_default(),
            workers,
        })
    }
}

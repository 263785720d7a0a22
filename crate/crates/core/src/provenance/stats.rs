use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;

/// Fallbacks used when no trace exists for a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsDefaults {
    pub selectivity: f64,
    /// Seconds per input tuple on the reference platform.
    pub cost_per_tuple: f64,
}

impl Default for StatsDefaults {
    fn default() -> Self {
        StatsDefaults { selectivity: 1.0, cost_per_tuple: 1e-6 }
    }
}

/// Aggregated behavior of one function across recorded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorStats {
    pub function_alias: String,
    pub mean_selectivity: f64,
    /// Reference-platform seconds per input tuple.
    pub mean_cost_per_tuple: f64,
    pub sample_count: usize,
    pub per_platform: BTreeMap<String, f64>,
}

impl OperatorStats {
    pub fn defaults(alias: &str, d: StatsDefaults) -> OperatorStats {
        OperatorStats {
            function_alias: alias.to_string(),
            mean_selectivity: d.selectivity,
            mean_cost_per_tuple: d.cost_per_tuple,
            sample_count: 0,
            per_platform: BTreeMap::new(),
        }
    }
}

/// Order-independent float sum: sorts, then adds pairwise.
pub fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    pairwise(values)
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise(&v[..mid]) + pairwise(&v[mid..])
}

/// Selectivity and speed-normalized cost per tuple for `alias`.
///
/// Wall time on a platform with relative speed `s` is scaled by `s` to
/// reference-platform time, so executing on that platform later costs
/// `cost / s` per tuple again.
pub fn derive_stats(catalog: &Catalog, alias: &str, defaults: StatsDefaults) -> OperatorStats {
    let traces: Vec<_> = catalog.operator_traces().iter().filter(|t| t.function_alias == alias).collect();
    if traces.is_empty() {
        return OperatorStats::defaults(alias, defaults);
    }
    let speed = |p: &str| catalog.platform(p).map(|d| d.relative_speed).unwrap_or(1.0);
    let total_in: u64 = traces.iter().map(|t| t.total_input()).sum();
    let total_out: u64 = traces.iter().map(|t| t.output_cardinality).sum();
    let mut normalized: Vec<f64> = traces.iter().map(|t| t.wall_time.as_secs_f64() * speed(&t.platform_id)).collect();

    let mut by_platform: BTreeMap<&str, (u64, Vec<f64>)> = BTreeMap::new();
    for (t, w) in traces.iter().zip(&normalized) {
        let e = by_platform.entry(t.platform_id.as_str()).or_default();
        e.0 += t.total_input();
        e.1.push(*w);
    }
    let per_platform = by_platform
        .into_iter()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(p, (n, mut w))| (p.to_string(), stable_sum(&mut w) / n as f64))
        .collect();

    let (mean_selectivity, mean_cost_per_tuple) = if total_in == 0 {
        (defaults.selectivity, defaults.cost_per_tuple)
    } else {
        (total_out as f64 / total_in as f64, stable_sum(&mut normalized) / total_in as f64)
    };
    OperatorStats { function_alias: alias.to_string(), mean_selectivity, mean_cost_per_tuple, sample_count: traces.len(), per_platform }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_sum_ignores_order() {
        let mut a = vec![1e16, 1.0, -1e16, 3.5, 0.1, 0.2, 0.3, 7.0, 1e-3, 2.0];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(stable_sum(&mut a).to_bits(), stable_sum(&mut b).to_bits());
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::dataset::Port;
use super::engine::{execute, Backend};
use super::ExecError;
use crate::optimizer::{annotate, rewrite, FixedStats};
use crate::synth::{radar_pipeline, radar_rows};

/// Fraction of radar rows that survive the reflectivity filter.
pub const BENCH_SELECTIVITY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_files: Vec<usize>,
    pub rows_per_file: usize,
    pub repetitions: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { n_files: (1..=7).map(|k| 10 * k).collect(), rows_per_file: 10_000, repetitions: 5, workers: 8, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub backend: String,
    pub n_files: usize,
    pub rows: usize,
    pub mean_secs: f64,
    pub std_secs: f64,
    pub peak_live_tuples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(x, y)`. R² is 1 when y has no variance.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    if points.is_empty() {
        return LinearFit { slope: 0.0, intercept: 0.0, r2: 1.0 };
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub measurements: Vec<Measurement>,
    /// Wall time against file count, per backend.
    pub fits: BTreeMap<String, LinearFit>,
    /// Peak live tuples of the original and the rewritten pipeline at the largest size.
    pub pushdown_peak: (u64, u64),
    pub notes: Vec<String>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("backend,n_files,rows,mean_secs,std_secs,peak_live_tuples\n");
        for m in &self.measurements {
            let _ = writeln!(s, "{},{},{},{:.6},{:.6},{}", m.backend, m.n_files, m.rows, m.mean_secs, m.std_secs, m.peak_live_tuples);
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (b, f) in &self.fits {
            let _ = writeln!(s, "{b}: slope {:.6} s/file, intercept {:.6} s, r2 {:.4}", f.slope, f.intercept, f.r2);
        }
        let (orig, opt) = self.pushdown_peak;
        let ratio = if orig > 0 { opt as f64 / orig as f64 } else { 0.0 };
        let _ = writeln!(s, "pushdown peak: {orig} -> {opt} tuples (ratio {ratio:.3})");
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

pub fn bench_stats() -> FixedStats {
    FixedStats::new()
        .with("radar_cast", 1.0, 2e-6)
        .with("radar_filter", BENCH_SELECTIVITY, 5e-7)
        .with("radar_dedup", 0.98, 1e-6)
}

fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Single => "single",
        Backend::Partitioned { .. } => "partitioned",
    }
}

/// Times the radar cleaning pipeline on both backends over growing inputs.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, ExecError> {
    let graph = radar_pipeline(BENCH_SELECTIVITY);
    let backends = [Backend::Single, Backend::Partitioned { workers: cfg.workers.max(1) }];
    let reps = cfg.repetitions.max(1);
    let mut measurements = Vec::new();
    for &n in &cfg.n_files {
        let data = radar_rows(n, cfg.rows_per_file, cfg.seed);
        let rows = data.len();
        let inputs = BTreeMap::from([("radar_files".to_string(), Port::Table(data))]);
        for b in backends {
            let mut times = Vec::with_capacity(reps);
            let mut peak = 0;
            for _ in 0..reps {
                let t = Instant::now();
                let out = execute(&graph, &inputs, b)?;
                times.push(t.elapsed().as_secs_f64());
                peak = out.peak_live_tuples;
            }
            let mean = times.iter().sum::<f64>() / reps as f64;
            let std = if reps > 1 {
                (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
            } else {
                0.0
            };
            measurements.push(Measurement { backend: backend_name(b).into(), n_files: n, rows, mean_secs: mean, std_secs: std, peak_live_tuples: peak });
        }
    }
    let mut fits = BTreeMap::new();
    for b in backends {
        let pts: Vec<(f64, f64)> =
            measurements.iter().filter(|m| m.backend == backend_name(b)).map(|m| (m.n_files as f64, m.mean_secs)).collect();
        fits.insert(backend_name(b).to_string(), linear_fit(&pts));
    }
    let pushdown_peak = match cfg.n_files.iter().max() {
        Some(&n) => pushdown_peaks(n, cfg.rows_per_file, cfg.seed)?,
        None => (0, 0),
    };
    let notes = vec![
        "in-process backends have no environment setup cost, so first runs are not slower".to_string(),
        format!("host reports {} available cores", std::thread::available_parallelism().map_or(1, |n| n.get())),
    ];
    Ok(BenchReport { config: cfg.clone(), measurements, fits, pushdown_peak, notes })
}

/// Peak live tuples of the radar pipeline before and after rewriting.
pub fn pushdown_peaks(n_files: usize, rows_per_file: usize, seed: u64) -> Result<(u64, u64), ExecError> {
    let graph = radar_pipeline(BENCH_SELECTIVITY);
    let ann = annotate(&graph, &bench_stats());
    let (optimized, _) = rewrite(&graph, &ann).map_err(|e| ExecError::FunctionFailure { node: "rewrite".into(), cause: e.to_string() })?;
    let inputs = BTreeMap::from([("radar_files".to_string(), Port::Table(radar_rows(n_files, rows_per_file, seed)))]);
    let before = execute(&graph, &inputs, Backend::Single)?.peak_live_tuples;
    let after = execute(&optimized, &inputs, Backend::Single)?.peak_live_tuples;
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let f = linear_fit(&[(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_repetition_has_zero_spread() {
        let cfg = BenchConfig { n_files: vec![1, 2], rows_per_file: 200, repetitions: 1, workers: 2, seed: 1 };
        let r = run_benchmark(&cfg).unwrap();
        assert_eq!(r.measurements.len(), 4);
        assert!(r.measurements.iter().all(|m| m.std_secs == 0.0));
        assert!(r.to_csv().lines().count() == 5);
    }

    #[test]
    fn pushdown_lowers_peak() {
        let (before, after) = pushdown_peaks(2, 1000, 3).unwrap();
        assert!(after < before);
    }
}

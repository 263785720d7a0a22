//! Fixtures shared by the criterion benches.

use std::collections::BTreeMap;

use artiflow_core::executor::Port;
use artiflow_core::kgraph::{FactBase, BASE_PREDICATES};
use artiflow_core::synth::{radar_rows, random_schedule_case, ScheduleCase};

/// Radar inputs keyed by the pipeline's source placeholder.
pub fn radar_input(n_files: usize, rows_per_file: usize) -> BTreeMap<String, Port> {
    BTreeMap::from([("radar_files".to_string(), Port::Table(radar_rows(n_files, rows_per_file, 7)))])
}

/// A linear chain of `n` transformation runs over `n + 1` datasets, the worst
/// case for the labelled transitive closure.
pub fn transformation_chain(n: usize) -> FactBase {
    let mut fb = FactBase::new();
    for (p, arity) in BASE_PREDICATES {
        fb.declare(p, arity).expect("fresh fact base");
    }
    for i in 0..=n {
        fb.add("dataSet", &[&format!("ds{i}")]);
    }
    for i in 0..n {
        let (run, func) = (format!("tr{i}"), format!("fn{i}"));
        fb.add("trans_run", &[&run]);
        fb.add("has_input", &[&run, &format!("ds{i}")]);
        fb.add("uses", &[&run, &func]);
        fb.add("has_name", &[&func, &format!("step{i}")]);
        fb.add("has_output", &[&format!("ds{}", i + 1), &run]);
    }
    fb
}

/// Scheduling instances with at least two platforms, so placement matters.
pub fn schedule_cases(count: usize, seed: u64) -> Vec<ScheduleCase> {
    (seed..)
        .map(random_schedule_case)
        .filter(|c| c.registry.platforms.len() >= 2)
        .take(count)
        .collect()
}

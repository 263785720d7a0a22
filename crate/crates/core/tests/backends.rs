use artiflow_core::executor::{execute, Backend};
use artiflow_core::model::{validate, FunctionRegistry};
use artiflow_core::optimizer::{annotate, rewrite};
use artiflow_core::synth::{random_case, SynthConfig};
use proptest::prelude::*;

fn small() -> SynthConfig {
    SynthConfig { max_rows: 2_000, ..SynthConfig::default() }
}

#[test]
fn generated_flows_validate() {
    for seed in 0..300 {
        let case = random_case(seed, &small());
        let report = validate(&case.graph, &FunctionRegistry::new());
        assert!(report.is_empty(), "seed {seed}: {report}\n{}", case.graph.to_document());
        assert!(case.graph.nodes.len() <= 12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn backends_agree(seed in any::<u64>(), workers in 2usize..6) {
        let case = random_case(seed, &small());
        let single = execute(&case.graph, &case.inputs, Backend::Single).unwrap();
        let parted = execute(&case.graph, &case.inputs, Backend::Partitioned { workers }).unwrap();
        prop_assert_eq!(single.sink_rows(), parted.sink_rows());
        prop_assert_eq!(single.cardinalities(), parted.cardinalities());
        prop_assert_eq!(single.peak_live_tuples, parted.peak_live_tuples);
    }

    #[test]
    fn rewrite_preserves_outputs(seed in any::<u64>()) {
        let case = random_case(seed, &small());
        let (opt, _) = rewrite(&case.graph, &annotate(&case.graph, &case.stats)).unwrap();
        let before = execute(&case.graph, &case.inputs, Backend::Single).unwrap();
        let after = execute(&opt, &case.inputs, Backend::Single).unwrap();
        prop_assert_eq!(before.sink_rows(), after.sink_rows());
    }

    #[test]
    fn peak_is_bounded_by_intermediates(seed in any::<u64>()) {
        let case = random_case(seed, &small());
        let run = execute(&case.graph, &case.inputs, Backend::Single).unwrap();
        let cards = run.cardinalities();
        let max = cards.values().copied().max().unwrap_or(0);
        let total: u64 = cards.values().sum();
        prop_assert!(run.peak_live_tuples >= max);
        prop_assert!(run.peak_live_tuples <= total);
    }
}

//! Adversarial validation on synthetic shift fixtures.

mod common;

use common::synth;
use mtvar_core::advval::{adversarial_validation, build_classification_dataset, Hyperparams, Mode, Split};
use proptest::prelude::*;

#[test]
fn swapping_labels_barely_moves_accuracy() {
    let hp = Hyperparams::default();
    let a = synth::text_dataset("a", 800, &[0.2], 31);
    let b = synth::text_dataset("b", 800, &[0.6], 32);
    for mode in [Mode::SourceOnly, Mode::SourceOutput] {
        let ab = adversarial_validation(&a, &b, mode, 5, &hp, 4).unwrap().mean();
        let ba = adversarial_validation(&b, &a, mode, 5, &hp, 4).unwrap().mean();
        assert!((ab - ba).abs() < 0.02, "{mode:?}: {ab} vs {ba}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn accuracies_are_probabilities_and_splits_are_clean(n1 in 20usize..80, n2 in 20usize..80, seed in 0u64..1000) {
        let a = synth::text_dataset("a", n1, &[0.3, 0.5], seed);
        let b = synth::text_dataset("b", n2, &[0.3], seed + 1);
        let data = build_classification_dataset(&a, &b, Mode::SourceOutput, seed).unwrap();
        // every (label, segment) lands in exactly one split
        let mut seen = std::collections::BTreeMap::new();
        for (i, e) in data.examples.iter().enumerate() {
            let split = data.split_of(i);
            prop_assert!(split.is_some());
            let prev = seen.insert((e.label, e.segment), split);
            prop_assert!(prev.is_none() || prev == Some(split));
        }
        prop_assert_eq!(data.train.len() + data.dev.len() + data.test.len(), data.examples.len());
        prop_assert!(!data.test.is_empty() && data.split_of(data.test[0]) == Some(Split::Test));
        let report = adversarial_validation(&a, &b, Mode::SourceOutput, 2, &Hyperparams::default(), seed).unwrap();
        for &(_, acc) in &report.per_seed {
            prop_assert!((0.0..=1.0).contains(&acc));
        }
    }
}

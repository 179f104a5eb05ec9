//! Datasets, judgments and scores survive a write/load cycle unchanged.

use std::collections::BTreeMap;

use mtvar_core::corpus::{load_dataset, load_external_scores, load_human_judgments, Dataset, ExternalScores, HumanJudgments, Preference};
use proptest::prelude::*;

fn line() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,'äöü\\t-]{0,30}"
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..8, 1usize..4).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(line(), n),
            prop::collection::vec(line(), n),
            prop::collection::vec(prop::collection::vec(line(), n), k),
        )
            .prop_map(|(src, refs, outs)| {
                let systems = outs.into_iter().enumerate().map(|(i, o)| (format!("sys-{i}"), o)).collect();
                Dataset::new("rt", src, refs, systems).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_and_da_round_trip(ds in dataset(), raw in prop::collection::vec(prop::option::of(-1e6f64..1e6), 32)) {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("rt");
        ds.write_to_dir(&dir).unwrap();
        let back = load_dataset(&dir).unwrap();
        prop_assert_eq!(&back, &ds);

        let n = ds.segments();
        let da: BTreeMap<String, Vec<Option<f64>>> = ds
            .system_names()
            .into_iter()
            .enumerate()
            .map(|(k, s)| (s, (0..n).map(|i| raw[(k * n + i) % raw.len()]).collect()))
            .collect();
        let judgments = HumanJudgments::da(da, &ds).unwrap();
        let path = dir.join("da.tsv");
        judgments.write_tsv(&path).unwrap();
        prop_assert_eq!(load_human_judgments(&path, &ds).unwrap(), judgments);

        let scores: BTreeMap<String, Vec<f64>> = ds
            .system_names()
            .into_iter()
            .enumerate()
            .map(|(k, s)| (s, (0..n).map(|i| raw[(k + i) % raw.len()].unwrap_or(0.5)).collect()))
            .collect();
        let ext = ExternalScores::new("neural", scores, &ds).unwrap();
        let path = dir.join("neural.tsv");
        ext.write_tsv(&path).unwrap();
        prop_assert_eq!(load_external_scores(&path, &ds).unwrap(), ext);
    }

    #[test]
    fn rr_round_trip(ds in dataset(), picks in prop::collection::vec((0usize..8, 0usize..4, 0usize..4), 0..20)) {
        let names = ds.system_names();
        let prefs: Vec<Preference> = picks
            .into_iter()
            .filter(|&(_, w, l)| w != l && w < names.len() && l < names.len())
            .map(|(s, w, l)| Preference {
                segment: s % ds.segments(),
                winner: names[w].clone(),
                loser: names[l].clone(),
            })
            .collect();
        let judgments = HumanJudgments::rr(prefs, &ds).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("rr.tsv");
        judgments.write_tsv(&path).unwrap();
        prop_assert_eq!(load_human_judgments(&path, &ds).unwrap(), judgments);
    }
}

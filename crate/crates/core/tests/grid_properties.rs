//! Invariants of error counting, ranking and disagreement.

use mtvar_core::meta_eval::{error_number, ErrorPolicy, PairGrid};
use mtvar_core::metrics::MetricDescriptor;
use mtvar_core::significance::{Outcome, Verdict};
use mtvar_core::variance::{disagreement_number, disagreement_number_weak, SignificantPairSet};
use proptest::prelude::*;

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::FirstBetter), Just(Outcome::SecondBetter), Just(Outcome::NoSig)]
}

fn verdict(outcome: Outcome) -> Verdict {
    Verdict {
        outcome,
        statistic: 0.0,
        p_or_winrate: 0.5,
    }
}

/// Grid over 6 systems (15 pairs) with one metric and its inverse.
fn grid(human: &[Outcome], metric: &[Outcome]) -> PairGrid {
    let systems: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
    let metrics = vec![MetricDescriptor::external("m"), MetricDescriptor::external("inv")];
    let mut g = PairGrid::new("g", &systems, metrics).unwrap();
    for p in 0..g.num_pairs() {
        g.set_human(p, verdict(human[p]));
        g.set_metric(0, p, verdict(metric[p]));
        g.set_metric(1, p, verdict(metric[p].swapped()));
    }
    g
}

/// Brute-force count of discordant pairs between two rankings.
fn discordant(order1: &[usize], order2: &[usize]) -> usize {
    let pos = |order: &[usize], x: usize| order.iter().position(|&y| y == x).unwrap();
    let n = order1.len();
    let mut count = 0;
    for x in 0..n {
        for y in x + 1..n {
            let a = pos(order1, x) < pos(order1, y);
            let b = pos(order2, x) < pos(order2, y);
            count += usize::from(a != b);
        }
    }
    count
}

fn total_order(order: &[usize]) -> SignificantPairSet {
    let name = |i: usize| format!("m{i}");
    let pairs = order
        .iter()
        .enumerate()
        .flat_map(|(i, &w)| order[i + 1..].iter().map(move |&l| (name(w), name(l))));
    SignificantPairSet::new("d", order.iter().map(|&i| name(i)), pairs).unwrap()
}

proptest! {
    #[test]
    fn error_counts_are_bounded_and_policies_agree(
        human in prop::collection::vec(outcome(), 15),
        metric in prop::collection::vec(outcome(), 15),
    ) {
        let g = grid(&human, &metric);
        for policy in [ErrorPolicy::Full, ErrorPolicy::SignificantOnly] {
            let e = error_number(&g, "m", policy).unwrap();
            prop_assert!(e.errors() <= e.total());
        }
        let full = error_number(&g, "m", ErrorPolicy::Full).unwrap();
        let sig = error_number(&g, "m", ErrorPolicy::SignificantOnly).unwrap();
        // FULL = SIGNIFICANT_ONLY + false alarms on human-NoSig pairs
        let false_alarms = human
            .iter()
            .zip(&metric)
            .filter(|(h, m)| !h.is_significant() && m.is_significant())
            .count();
        prop_assert_eq!(full.errors(), sig.errors() + false_alarms);
        let filtered = g.filter_significant().unwrap();
        prop_assert_eq!(error_number(&filtered, "m", ErrorPolicy::Full).unwrap(), sig);
    }

    #[test]
    fn inverting_a_metric_turns_hits_into_errors(
        human in prop::collection::vec(outcome(), 15),
        metric in prop::collection::vec(outcome(), 15),
    ) {
        let g = grid(&human, &metric);
        let both_significant = human
            .iter()
            .zip(&metric)
            .filter(|(h, m)| h.is_significant() && m.is_significant())
            .count();
        for policy in [ErrorPolicy::Full, ErrorPolicy::SignificantOnly] {
            let a = error_number(&g, "m", policy).unwrap().errors();
            let b = error_number(&g, "inv", policy).unwrap().errors();
            prop_assert!(a + b >= both_significant);
        }
    }

    #[test]
    fn disagreement_equals_discordant_pairs(
        perm1 in Just((0..8).collect::<Vec<usize>>()).prop_shuffle(),
        perm2 in Just((0..8).collect::<Vec<usize>>()).prop_shuffle(),
        size in 2usize..=8,
    ) {
        let p1: Vec<usize> = perm1.into_iter().filter(|&x| x < size).collect();
        let p2: Vec<usize> = perm2.into_iter().filter(|&x| x < size).collect();
        let (s1, s2) = (total_order(&p1), total_order(&p2));
        let d = disagreement_number(&s1, &s2).unwrap();
        prop_assert_eq!(d, discordant(&p1, &p2));
        prop_assert_eq!(d, disagreement_number(&s2, &s1).unwrap());
        prop_assert!(d <= size * (size - 1) / 2);
        prop_assert_eq!(disagreement_number(&s1, &s1).unwrap(), 0);
        // total orders have no significant-vs-NoSig differences
        prop_assert_eq!(disagreement_number_weak(&s1, &s2).unwrap(), d);
    }

    #[test]
    fn adding_a_reversal_adds_one(
        perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        drop in 0usize..15,
    ) {
        // s2 is the reverse order with one pair removed; restoring it adds one reversal
        let s1 = total_order(&perm);
        let rev: Vec<usize> = perm.iter().rev().copied().collect();
        let full = total_order(&rev);
        let removed = full.pairs().iter().nth(drop).unwrap().clone();
        let partial = SignificantPairSet::new(
            "d",
            full.roster().iter().cloned(),
            full.pairs().iter().filter(|p| **p != removed).cloned(),
        )
        .unwrap();
        prop_assert_eq!(
            disagreement_number(&s1, &full).unwrap(),
            disagreement_number(&s1, &partial).unwrap() + 1
        );
    }
}

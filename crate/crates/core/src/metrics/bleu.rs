//! Corpus BLEU with clipped n-gram precisions and brevity penalty, no
//! smoothing.

use std::collections::HashMap;

use super::tokenize::tokenize;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics for one segment:
/// `[hyp_len, ref_len, match_1..match_N, total_1..total_N]` with N = [`MAX_ORDER`].
pub fn bleu_segment_stats(hyp: &[String], reference: &[String]) -> [f64; 2 + 2 * MAX_ORDER] {
    let mut row = [0.0; 2 + 2 * MAX_ORDER];
    row[0] = hyp.len() as f64;
    row[1] = reference.len() as f64;
    for n in 1..=MAX_ORDER {
        if hyp.len() < n {
            continue;
        }
        let mut ref_counts: HashMap<&[String], u32> = HashMap::new();
        for g in reference.windows(n) {
            *ref_counts.entry(g).or_default() += 1;
        }
        let mut hyp_counts: HashMap<&[String], u32> = HashMap::new();
        for g in hyp.windows(n) {
            *hyp_counts.entry(g).or_default() += 1;
        }
        let matches: u32 = hyp_counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        row[1 + n] = f64::from(matches);
        row[1 + MAX_ORDER + n] = (hyp.len() + 1 - n) as f64;
    }
    row
}

/// BLEU from summed statistics. Orders without any hypothesis n-gram are
/// left out of the geometric mean; any zero precision gives 0.
pub fn bleu_from_stats(sums: &[f64]) -> f64 {
    let (hyp_len, ref_len) = (sums[0], sums[1]);
    if hyp_len <= 0.0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=MAX_ORDER {
        let (matches, total) = (sums[1 + n], sums[1 + MAX_ORDER + n]);
        if total <= 0.0 {
            continue;
        }
        if matches <= 0.0 {
            return 0.0;
        }
        log_sum += (matches / total).ln();
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let brevity = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len / hyp_len).exp()
    };
    brevity * (log_sum / orders as f64).exp()
}

/// Corpus BLEU over parallel hypothesis/reference segments.
pub fn bleu_corpus<S: AsRef<str>>(hypotheses: &[S], references: &[S]) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sums = [0.0; 2 + 2 * MAX_ORDER];
    for (h, r) in hypotheses.iter().zip(references) {
        let row = bleu_segment_stats(&tokenize(h.as_ref()), &tokenize(r.as_ref()));
        for (a, x) in sums.iter_mut().zip(row) {
            *a += x;
        }
    }
    Ok(bleu_from_stats(&sums))
}

//! Levenshtein-based word error rates.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Unit-cost Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Word error rate: edit distance over reference length.
pub fn wer<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(levenshtein(hyp, reference) as f64 / reference.len() as f64)
}

/// Position-independent error count:
/// `|ref| - correct + max(0, |hyp| - |ref|)` with bag-of-words `correct`.
pub fn per_errors<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> usize {
    let mut counts: HashMap<&T, (usize, usize)> = HashMap::new();
    for t in hyp {
        counts.entry(t).or_default().0 += 1;
    }
    for t in reference {
        counts.entry(t).or_default().1 += 1;
    }
    let correct: usize = counts.values().map(|&(h, r)| h.min(r)).sum();
    reference.len() - correct + hyp.len().saturating_sub(reference.len())
}

/// Position-independent error rate.
pub fn per<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(per_errors(hyp, reference) as f64 / reference.len() as f64)
}

//! chrF and chrF+ (character n-gram F-score, optionally with word n-grams).

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

pub const DEFAULT_CHAR_ORDER: usize = 6;
pub const DEFAULT_BETA: f64 = 2.0;

/// Clipped matches and n-gram totals for one order.
fn ngram_counts<T: Eq + Hash>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    if hyp.len() < n || reference.len() < n {
        return (0, hyp.len().saturating_sub(n - 1), reference.len().saturating_sub(n - 1));
    }
    let mut counts: HashMap<&[T], (usize, usize)> = HashMap::new();
    for g in hyp.windows(n) {
        counts.entry(g).or_default().0 += 1;
    }
    for g in reference.windows(n) {
        counts.entry(g).or_default().1 += 1;
    }
    let matches = counts.values().map(|&(h, r)| h.min(r)).sum();
    (matches, hyp.len() + 1 - n, reference.len() + 1 - n)
}

/// Character n-gram F-score. Whitespace is removed before character n-gram
/// extraction. With `word_order > 0` word n-grams (whitespace-delimited) of
/// orders `1..=word_order` are averaged in with the character orders.
///
/// Precision and recall are averaged over the orders for which both sides
/// have at least one n-gram; if there is no such order the score is 0.
pub fn chrf(hypothesis: &str, reference: &str, char_order: usize, beta: f64, word_order: usize) -> Result<f64> {
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if ref_chars.is_empty() {
        return Err(Error::EmptyReference);
    }
    let hyp_chars: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();

    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut orders = 0usize;
    let mut add = |(m, h, r): (usize, usize, usize)| {
        if h > 0 && r > 0 {
            precision += m as f64 / h as f64;
            recall += m as f64 / r as f64;
            orders += 1;
        }
    };
    for n in 1..=char_order {
        add(ngram_counts(&hyp_chars, &ref_chars, n));
    }
    if word_order > 0 {
        let hyp_words: Vec<&str> = hypothesis.split_whitespace().collect();
        let ref_words: Vec<&str> = reference.split_whitespace().collect();
        for n in 1..=word_order {
            add(ngram_counts(&hyp_words, &ref_words, n));
        }
    }
    if orders == 0 {
        return Ok(0.0);
    }
    let p = precision / orders as f64;
    let r = recall / orders as f64;
    if p + r == 0.0 {
        return Ok(0.0);
    }
    let b2 = beta * beta;
    Ok((1.0 + b2) * p * r / (b2 * p + r))
}

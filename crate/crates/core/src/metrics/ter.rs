//! Translation edit rate and CharacTER.
//!
//! Both share one block-shift search. Each shift moves a contiguous block of
//! hypothesis words and costs 1; the goal is the fewest shifts plus residual
//! word edits. Hypotheses of up to [`EXACT_MAX_LEN`] words are searched
//! exhaustively. Longer ones use the greedy procedure: while some shift
//! lowers the word edit distance, apply the one with the largest reduction,
//! where candidate blocks occur contiguously in the reference and are at
//! most [`MAX_BLOCK`] words long.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use super::edit::levenshtein;
use crate::error::{Error, Result};

pub const MAX_BLOCK: usize = 10;
pub const EXACT_MAX_LEN: usize = 6;

/// Result of the shift search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shifted<T> {
    pub tokens: Vec<T>,
    pub shifts: usize,
    /// Word-level edit distance of `tokens` to the reference.
    pub edits: usize,
}

/// Maps tokens to dense ids; returns both id sequences and the vocabulary.
fn intern<'a, S: AsRef<str>>(hyp: &'a [S], reference: &'a [S]) -> (Vec<u32>, Vec<u32>, Vec<&'a str>) {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut vocab = Vec::new();
    let mut id = |s: &'a S| {
        *ids.entry(s.as_ref()).or_insert_with(|| {
            vocab.push(s.as_ref());
            (vocab.len() - 1) as u32
        })
    };
    let h = hyp.iter().map(&mut id).collect();
    let r = reference.iter().map(&mut id).collect();
    (h, r, vocab)
}

fn shift_block<T: Copy>(tokens: &[T], start: usize, len: usize, dest: usize, out: &mut Vec<T>) {
    // `dest` indexes the sequence with the block removed.
    out.clear();
    let rest = tokens[..start].iter().chain(&tokens[start + len..]);
    let block = &tokens[start..start + len];
    for (k, &t) in rest.enumerate() {
        if k == dest {
            out.extend_from_slice(block);
        }
        out.push(t);
    }
    if dest == tokens.len() - len {
        out.extend_from_slice(block);
    }
}

/// Greedy shift search over arbitrary comparable tokens.
pub fn greedy_shifts<T: Copy + Eq>(hyp: &[T], reference: &[T]) -> Shifted<T> {
    let mut tokens = hyp.to_vec();
    let mut edits = levenshtein(&tokens, reference);
    let mut shifts = 0;
    let mut candidate = Vec::with_capacity(tokens.len());
    while edits > 0 {
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for start in 0..tokens.len() {
            for len in 1..=MAX_BLOCK.min(tokens.len() - start) {
                let block = &tokens[start..start + len];
                if !reference.windows(len).any(|w| w == block) {
                    break;
                }
                for dest in 0..=tokens.len() - len {
                    if dest == start {
                        continue;
                    }
                    shift_block(&tokens, start, len, dest, &mut candidate);
                    let e = levenshtein(&candidate, reference);
                    if e < best.map_or(edits, |b| b.0) {
                        best = Some((e, start, len, dest));
                    }
                }
            }
        }
        let Some((e, start, len, dest)) = best else {
            break;
        };
        shift_block(&tokens, start, len, dest, &mut candidate);
        std::mem::swap(&mut tokens, &mut candidate);
        edits = e;
        shifts += 1;
    }
    Shifted { tokens, shifts, edits }
}

/// Breadth-first search over shift sequences, bounded by the greedy
/// result. Any block may move to any position.
pub fn exact_shifts<T: Copy + Eq + Hash>(hyp: &[T], reference: &[T]) -> Shifted<T> {
    let mut best = greedy_shifts(hyp, reference);
    let mut seen: HashSet<Vec<T>> = HashSet::from([hyp.to_vec()]);
    let mut frontier = vec![hyp.to_vec()];
    let mut depth = 0;
    let mut candidate = Vec::with_capacity(hyp.len());
    while depth + 1 < best.shifts + best.edits && !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for tokens in &frontier {
            let n = tokens.len();
            for start in 0..n {
                for len in 1..=n - start {
                    for dest in 0..=n - len {
                        if dest == start {
                            continue;
                        }
                        shift_block(tokens, start, len, dest, &mut candidate);
                        if seen.contains(&candidate) {
                            continue;
                        }
                        let edits = levenshtein(&candidate, reference);
                        if depth + edits < best.shifts + best.edits {
                            best = Shifted {
                                tokens: candidate.clone(),
                                shifts: depth,
                                edits,
                            };
                        }
                        seen.insert(candidate.clone());
                        next.push(candidate.clone());
                    }
                }
            }
        }
        frontier = next;
    }
    best
}

/// Exhaustive search for short hypotheses, greedy otherwise.
pub fn shift_search<T: Copy + Eq + Hash>(hyp: &[T], reference: &[T]) -> Shifted<T> {
    if hyp.len() <= EXACT_MAX_LEN {
        exact_shifts(hyp, reference)
    } else {
        greedy_shifts(hyp, reference)
    }
}

/// Shifts plus residual word edits; the TER numerator.
pub fn ter_errors<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> usize {
    let (h, r, _) = intern(hyp, reference);
    let s = shift_search(&h, &r);
    s.shifts + s.edits
}

pub fn ter<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(ter_errors(hyp, reference) as f64 / reference.len() as f64)
}

/// CharacTER: word-level shifts (same search as TER), then character edit distance between the
/// shifted hypothesis and the reference (words joined by single spaces),
/// normalized by the hypothesis length in characters. Case-sensitive.
pub fn character_metric(hypothesis: &str, reference: &str) -> Result<f64> {
    let hyp: Vec<&str> = hypothesis.split_whitespace().collect();
    let refw: Vec<&str> = reference.split_whitespace().collect();
    if refw.is_empty() {
        return Err(Error::EmptyReference);
    }
    if hyp.is_empty() {
        return Err(Error::EmptyHypothesis);
    }
    let (h, r, vocab) = intern(&hyp, &refw);
    let shifted = shift_search(&h, &r);
    let words: Vec<&str> = shifted.tokens.iter().map(|&id| vocab[id as usize]).collect();
    let hyp_chars: Vec<char> = words.join(" ").chars().collect();
    let ref_chars: Vec<char> = refw.join(" ").chars().collect();
    let edits = levenshtein(&hyp_chars, &ref_chars);
    Ok((shifted.shifts + edits) as f64 / hyp_chars.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ter_examples() {
        assert_eq!(ter(&["a", "b", "c"], &["a", "b", "c"]).unwrap(), 0.0);
        assert_eq!(ter(&["b", "a"], &["a", "b"]).unwrap(), 0.5);
        let empty: [&str; 0] = [];
        assert!(matches!(ter(&["a"], &empty), Err(Error::EmptyReference)));
        assert_eq!(ter(&empty, &["a", "b"]).unwrap(), 1.0);
    }

    #[test]
    fn block_shift_counts_once() {
        // moving "d e f" to the front is one shift
        let h = ["a", "b", "c", "d", "e", "f"];
        let r = ["d", "e", "f", "a", "b", "c"];
        assert_eq!(ter_errors(&h, &r), 1);
    }

    #[test]
    fn shift_block_positions() {
        let t = [1, 2, 3, 4];
        let mut out = Vec::new();
        shift_block(&t, 0, 1, 3, &mut out);
        assert_eq!(out, [2, 3, 4, 1]);
        shift_block(&t, 2, 2, 0, &mut out);
        assert_eq!(out, [3, 4, 1, 2]);
        shift_block(&t, 1, 1, 2, &mut out);
        assert_eq!(out, [1, 3, 2, 4]);
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        // the optimum needs a first shift that gains only one edit
        let h = [2, 1, 0, 0];
        let r = [0, 2, 0, 1];
        let g = greedy_shifts(&h, &r);
        let e = exact_shifts(&h, &r);
        assert_eq!(e.shifts + e.edits, 2);
        assert!(g.shifts + g.edits > 2);
        assert_eq!(e.edits, levenshtein(&e.tokens, &r));
    }

    #[test]
    fn long_hypotheses_use_greedy() {
        let h: Vec<u32> = (0..12).rev().collect();
        let r: Vec<u32> = (0..12).collect();
        assert_eq!(shift_search(&h, &r), greedy_shifts(&h, &r));
    }

    #[test]
    fn character_examples() {
        assert_eq!(character_metric("the cat", "the cat").unwrap(), 0.0);
        assert_eq!(character_metric("ba", "ab").unwrap(), 1.0);
        assert_eq!(character_metric("b a", "a b").unwrap(), 1.0 / 3.0);
        assert!(matches!(character_metric("", "a"), Err(Error::EmptyHypothesis)));
        assert!(matches!(character_metric("a", " "), Err(Error::EmptyReference)));
    }
}

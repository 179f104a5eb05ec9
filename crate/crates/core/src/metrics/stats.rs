//! Additive per-segment statistics.
//!
//! A corpus-level score over any multiset of segments is obtained by summing
//! the rows of the chosen segments and finalizing the sum. Bootstrap
//! resampling relies on this to stay linear in the number of segments.

use crate::error::{Error, Result};

/// How a column-wise sum of segment statistics becomes a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finalizer {
    /// `[hyp_len, ref_len, match_1..match_4, total_1..total_4]`
    Bleu,
    /// `[errors, ref_len]`, score = errors / ref_len.
    ErrorRate,
    /// `[score, 1]`, score = mean.
    Mean,
    /// `[count]`, score = sum.
    Sum,
}

impl Finalizer {
    pub fn width(self) -> usize {
        match self {
            Finalizer::Bleu => 2 + 2 * super::bleu::MAX_ORDER,
            Finalizer::ErrorRate | Finalizer::Mean => 2,
            Finalizer::Sum => 1,
        }
    }

    pub fn finalize(self, sums: &[f64]) -> f64 {
        match self {
            Finalizer::Bleu => super::bleu::bleu_from_stats(sums),
            Finalizer::ErrorRate => sums[0] / sums[1].max(1.0),
            Finalizer::Mean => {
                if sums[1] > 0.0 {
                    sums[0] / sums[1]
                } else {
                    0.0
                }
            }
            Finalizer::Sum => sums[0],
        }
    }
}

/// Row-major matrix of per-segment statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStats {
    finalizer: Finalizer,
    data: Vec<f64>,
}

impl SegmentStats {
    pub fn new(finalizer: Finalizer, data: Vec<f64>) -> Result<Self> {
        if data.len() % finalizer.width() != 0 {
            return Err(Error::Invariant(format!(
                "statistics length {} not a multiple of width {}",
                data.len(),
                finalizer.width()
            )));
        }
        Ok(Self { finalizer, data })
    }

    pub(crate) fn from_rows<I>(finalizer: Finalizer, rows: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        for row in rows {
            debug_assert_eq!(row.as_ref().len(), finalizer.width());
            data.extend_from_slice(row.as_ref());
        }
        Self { finalizer, data }
    }

    /// Per-segment scores aggregated by their mean.
    pub fn from_scores(scores: &[f64]) -> Self {
        Self::from_rows(Finalizer::Mean, scores.iter().map(|&s| [s, 1.0]))
    }

    /// Per-item counts aggregated by their sum.
    pub fn from_counts(counts: &[f64]) -> Self {
        Self {
            finalizer: Finalizer::Sum,
            data: counts.to_vec(),
        }
    }

    pub fn finalizer(&self) -> Finalizer {
        self.finalizer
    }

    pub fn width(&self) -> usize {
        self.finalizer.width()
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn total(&self) -> Vec<f64> {
        let w = self.width();
        let mut acc = vec![0.0; w];
        for row in self.data.chunks_exact(w) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        acc
    }

    /// Sum of the rows at `indices` (repeats allowed), finalized.
    pub fn score_of(&self, indices: &[usize]) -> f64 {
        let w = self.width();
        let mut acc = vec![0.0; w];
        for &i in indices {
            for (a, x) in acc.iter_mut().zip(self.row(i)) {
                *a += x;
            }
        }
        self.finalizer.finalize(&acc)
    }

    /// Sum of `multiplicity[i] * row(i)`, finalized.
    pub fn weighted_score(&self, multiplicity: &[u32], acc: &mut [f64]) -> f64 {
        let w = self.width();
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (row, &m) in self.data.chunks_exact(w).zip(multiplicity) {
            if m != 0 {
                let m = f64::from(m);
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += m * x;
                }
            }
        }
        self.finalizer.finalize(acc)
    }

    pub fn corpus_score(&self) -> f64 {
        self.finalizer.finalize(&self.total())
    }

    /// New statistics whose row `k` is row `indices[k]` of `self`.
    pub fn gather(&self, indices: &[usize]) -> Self {
        Self::from_rows(self.finalizer, indices.iter().map(|&i| self.row(i)))
    }
}

/// Assembles statistics by taking row `i` from `sources[pick[i]]`.
pub fn interleave(sources: &[&SegmentStats], pick: &[usize]) -> Result<SegmentStats> {
    let Some(first) = sources.first() else {
        return Err(Error::Invariant("no statistics to interleave".into()));
    };
    if sources.iter().any(|s| s.finalizer != first.finalizer || s.len() != pick.len()) {
        return Err(Error::Invariant("incompatible statistics".into()));
    }
    Ok(SegmentStats::from_rows(
        first.finalizer,
        pick.iter().enumerate().map(|(i, &s)| sources[s].row(i)),
    ))
}

//! String-based MT metrics and a uniform system-scoring interface.
//!
//! Macro metrics (BLEU, WER, TER, PER) are computed once per corpus from
//! summed segment statistics; micro metrics (chrF, chrF+, CharacTER and all
//! external metrics) average per-segment scores.

pub mod bleu;
pub mod chrf;
pub mod edit;
pub mod stats;
pub mod ter;
pub mod tokenize;

use std::fmt;

use rayon::prelude::*;

use crate::corpus::{Dataset, ExternalScores};
use crate::error::{Error, Result};

pub use bleu::bleu_corpus;
pub use chrf::chrf;
pub use edit::{per, wer};
pub use stats::{Finalizer, SegmentStats};
pub use ter::{character_metric, ter};
pub use tokenize::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Averaging {
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    HigherBetter,
    LowerBetter,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::Macro => "macro",
            Averaging::Micro => "micro",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "macro" => Some(Averaging::Macro),
            "micro" => Some(Averaging::Micro),
            _ => None,
        }
    }
}

impl Polarity {
    /// Orients a raw difference `a - b` so that positive means "a is better".
    pub fn orient(self, diff: f64) -> f64 {
        match self {
            Polarity::HigherBetter => diff,
            Polarity::LowerBetter => -diff,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::HigherBetter => "higher",
            Polarity::LowerBetter => "lower",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "higher" => Some(Polarity::HigherBetter),
            "lower" => Some(Polarity::LowerBetter),
            _ => None,
        }
    }

    pub fn inverted(self) -> Self {
        match self {
            Polarity::HigherBetter => Polarity::LowerBetter,
            Polarity::LowerBetter => Polarity::HigherBetter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinMetric {
    Bleu,
    Wer,
    Ter,
    Per,
    Chrf,
    ChrfPlus,
    Character,
}

impl BuiltinMetric {
    pub const ALL: [BuiltinMetric; 7] = [
        BuiltinMetric::Bleu,
        BuiltinMetric::Wer,
        BuiltinMetric::Ter,
        BuiltinMetric::Per,
        BuiltinMetric::Chrf,
        BuiltinMetric::ChrfPlus,
        BuiltinMetric::Character,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinMetric::Bleu => "BLEU",
            BuiltinMetric::Wer => "WER",
            BuiltinMetric::Ter => "TER",
            BuiltinMetric::Per => "PER",
            BuiltinMetric::Chrf => "chrF",
            BuiltinMetric::ChrfPlus => "chrF+",
            BuiltinMetric::Character => "CharacTER",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .or_else(|| Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(name)))
    }

    pub fn averaging(self) -> Averaging {
        match self {
            BuiltinMetric::Bleu | BuiltinMetric::Wer | BuiltinMetric::Ter | BuiltinMetric::Per => Averaging::Macro,
            _ => Averaging::Micro,
        }
    }

    pub fn polarity(self) -> Polarity {
        match self {
            BuiltinMetric::Bleu | BuiltinMetric::Chrf | BuiltinMetric::ChrfPlus => Polarity::HigherBetter,
            _ => Polarity::LowerBetter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricSource {
    Builtin(BuiltinMetric),
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetricDescriptor {
    pub name: String,
    pub averaging: Averaging,
    pub polarity: Polarity,
    pub source: MetricSource,
}

impl MetricDescriptor {
    pub fn builtin(metric: BuiltinMetric) -> Self {
        Self {
            name: metric.name().to_string(),
            averaging: metric.averaging(),
            polarity: metric.polarity(),
            source: MetricSource::Builtin(metric),
        }
    }

    /// External metrics are micro-averaged and oriented higher-is-better.
    pub fn external(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            averaging: Averaging::Micro,
            polarity: Polarity::HigherBetter,
            source: MetricSource::External,
        }
    }

    /// The seven builtin metrics in canonical order.
    pub fn roster() -> Vec<Self> {
        BuiltinMetric::ALL.into_iter().map(Self::builtin).collect()
    }

    /// Builtin metric by name, otherwise an external metric of that name.
    pub fn by_name(name: &str) -> Self {
        BuiltinMetric::from_name(name).map_or_else(|| Self::external(name), Self::builtin)
    }
}

impl fmt::Display for MetricDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// System-level value of one metric, with the per-segment data behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemScore {
    pub metric: MetricDescriptor,
    pub system: String,
    /// Raw metric value (no polarity applied).
    pub corpus_score: f64,
    /// Per-segment scores; present for micro metrics.
    pub sentence_scores: Option<Vec<f64>>,
    /// Additive per-segment statistics. For micro metrics these are the
    /// sentence scores with mean finalization.
    pub stats: SegmentStats,
}

impl SystemScore {
    pub fn from_stats(metric: &MetricDescriptor, system: impl Into<String>, stats: SegmentStats) -> Self {
        let sentence_scores = match metric.averaging {
            Averaging::Micro => Some((0..stats.len()).map(|i| stats.row(i)[0]).collect()),
            Averaging::Macro => None,
        };
        Self {
            metric: metric.clone(),
            system: system.into(),
            corpus_score: stats.corpus_score(),
            sentence_scores,
            stats,
        }
    }
}

fn macro_row(metric: BuiltinMetric, hyp: &str, reference: &str) -> Vec<f64> {
    let h = tokenize(hyp);
    let r = tokenize(reference);
    let ref_len = r.len() as f64;
    match metric {
        BuiltinMetric::Bleu => bleu::bleu_segment_stats(&h, &r).to_vec(),
        BuiltinMetric::Wer => vec![edit::levenshtein(&h, &r) as f64, ref_len],
        BuiltinMetric::Per => vec![edit::per_errors(&h, &r) as f64, ref_len],
        BuiltinMetric::Ter => vec![ter::ter_errors(&h, &r) as f64, ref_len],
        _ => unreachable!("micro metric"),
    }
}

/// Segment-level score of a builtin micro metric. An empty hypothesis gets
/// the maximal CharacTER penalty of 1.
fn micro_score(metric: BuiltinMetric, hyp: &str, reference: &str) -> Result<f64> {
    match metric {
        BuiltinMetric::Chrf => chrf(hyp, reference, chrf::DEFAULT_CHAR_ORDER, chrf::DEFAULT_BETA, 0),
        BuiltinMetric::ChrfPlus => chrf(hyp, reference, chrf::DEFAULT_CHAR_ORDER, chrf::DEFAULT_BETA, 1),
        BuiltinMetric::Character => match character_metric(hyp, reference) {
            Err(Error::EmptyHypothesis) => Ok(1.0),
            other => other,
        },
        _ => unreachable!("macro metric"),
    }
}

/// Per-segment statistics of a builtin metric over parallel segments.
pub fn builtin_segment_stats(metric: BuiltinMetric, hypotheses: &[String], references: &[String]) -> Result<SegmentStats> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    let pairs = hypotheses.par_iter().zip(references.par_iter());
    match metric.averaging() {
        Averaging::Macro => {
            let rows: Vec<Vec<f64>> = pairs.map(|(h, r)| macro_row(metric, h, r)).collect();
            let finalizer = match metric {
                BuiltinMetric::Bleu => Finalizer::Bleu,
                _ => Finalizer::ErrorRate,
            };
            Ok(SegmentStats::from_rows(finalizer, rows))
        }
        Averaging::Micro => {
            let scores: Vec<f64> = pairs.map(|(h, r)| micro_score(metric, h, r)).collect::<Result<_>>()?;
            Ok(SegmentStats::from_scores(&scores))
        }
    }
}

/// Scores one system. The raw metric value is returned; polarity is applied
/// only by comparison code.
pub fn score_system(
    metric: &MetricDescriptor,
    dataset: &Dataset,
    system: &str,
    external: Option<&ExternalScores>,
) -> Result<SystemScore> {
    let hypotheses = dataset.system(system)?;
    let stats = match metric.source {
        MetricSource::Builtin(b) => builtin_segment_stats(b, hypotheses, dataset.references())?,
        MetricSource::External => {
            let ext = external
                .filter(|e| e.metric() == metric.name)
                .ok_or_else(|| Error::MissingExternalScores(metric.name.clone()))?;
            let scores = ext
                .system(system)
                .ok_or_else(|| Error::IncompleteScores {
                    system: system.to_string(),
                    segment: 0,
                })?;
            if scores.len() != dataset.segments() {
                return Err(Error::LengthMismatch {
                    left: scores.len(),
                    right: dataset.segments(),
                });
            }
            SegmentStats::from_scores(scores)
        }
    };
    Ok(SystemScore::from_stats(metric, system, stats))
}

/// `a - b` oriented so that positive means system A is better.
pub fn oriented_diff(score_a: &SystemScore, score_b: &SystemScore) -> Result<f64> {
    if score_a.metric != score_b.metric {
        return Err(Error::MetricMismatch(score_a.metric.name.clone(), score_b.metric.name.clone()));
    }
    Ok(score_a.metric.polarity.orient(score_a.corpus_score - score_b.corpus_score))
}

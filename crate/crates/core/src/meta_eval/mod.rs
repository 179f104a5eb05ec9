//! Hybrid super-sampling, the system-pair verdict grid, and error numbers.

mod cache;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{Dataset, ExternalScores, HumanJudgments};
use crate::error::{Error, Result};
use crate::metrics::stats::interleave;
use crate::metrics::{score_system, Averaging, MetricDescriptor, SystemScore};
use crate::rng::{derive_seed, label, substream};
use crate::significance::{bootstrap_replicates, human_verdict, scores_verdict, verdict_from_replicates, Outcome, TestConfig, Verdict};

pub use cache::GRID_CACHE_VERSION;

/// Number of hybrid systems used by default.
pub const DEFAULT_HYBRIDS: usize = 142;

const HYBRID_STREAM: u64 = 1;
const HUMAN_STREAM: u64 = 2;
const METRIC_STREAM: u64 = 3;

/// A pseudo-system whose segment `i` is taken from real system `provenance[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridSystem {
    pub name: String,
    pub provenance: Vec<String>,
}

impl HybridSystem {
    /// Segment texts of the hybrid.
    pub fn materialize(&self, dataset: &Dataset) -> Result<Vec<String>> {
        self.provenance
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(dataset.system(s)?[i].clone()))
            .collect()
    }
}

pub fn hybrid_name(index: usize) -> String {
    format!("hyb_{index:04}")
}

/// `k` hybrids drawing each segment's source system uniformly at random.
pub fn synthesize_hybrids(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<HybridSystem>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 hybrids, got {k}")));
    }
    let real = dataset.system_names();
    if real.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "hybrids need at least 2 real systems, dataset `{}` has {}",
            dataset.name(),
            real.len()
        )));
    }
    let seed = derive_seed(seed, &[HYBRID_STREAM]);
    Ok((0..k)
        .map(|h| {
            let mut rng = substream(seed, h as u64);
            let provenance = (0..dataset.segments())
                .map(|_| real[rng.gen_range(0..real.len())].clone())
                .collect();
            HybridSystem {
                name: hybrid_name(h),
                provenance,
            }
        })
        .collect())
}

/// A dataset whose systems are the materialized hybrids.
pub fn hybrid_dataset(dataset: &Dataset, hybrids: &[HybridSystem]) -> Result<Dataset> {
    let systems = hybrids
        .iter()
        .map(|h| Ok((h.name.clone(), h.materialize(dataset)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    dataset.with_systems(format!("{}-hybrids", dataset.name()), systems)
}

/// DA judgments of hybrids, inherited segment by segment from provenance.
pub fn hybrid_human_scores(hybrids: &[HybridSystem], judgments: &HumanJudgments) -> Result<HumanJudgments> {
    let HumanJudgments::Da(scores) = judgments else {
        return Err(Error::UnsupportedJudgmentKind(
            "hybrid systems inherit DA segment scores; RR preferences cannot be inherited".into(),
        ));
    };
    let mut out = BTreeMap::new();
    for h in hybrids {
        let v = h
            .provenance
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let src = scores.get(s).ok_or_else(|| Error::UnknownSystem(s.clone()))?;
                src.get(i)
                    .copied()
                    .ok_or(Error::SegmentOutOfRange { index: i, segments: src.len() })
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(h.name.clone(), v);
    }
    Ok(HumanJudgments::Da(out))
}

/// Scores of one metric for a list of systems, in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScores {
    pub metric: MetricDescriptor,
    pub systems: Vec<SystemScore>,
}

fn external_for<'a>(metric: &MetricDescriptor, externals: &'a [ExternalScores]) -> Option<&'a ExternalScores> {
    externals.iter().find(|e| e.metric() == metric.name)
}

/// Scores every listed real system under every metric.
pub fn score_systems(
    dataset: &Dataset,
    systems: &[String],
    metrics: &[MetricDescriptor],
    externals: &[ExternalScores],
) -> Result<Vec<MetricScores>> {
    metrics
        .iter()
        .map(|m| {
            let ext = external_for(m, externals);
            let systems = systems
                .iter()
                .map(|s| score_system(m, dataset, s, ext))
                .collect::<Result<_>>()?;
            Ok(MetricScores {
                metric: m.clone(),
                systems,
            })
        })
        .collect()
}

/// Scores hybrids by scoring each real system once and assembling the
/// per-segment statistics along the provenance.
pub fn score_hybrids(
    dataset: &Dataset,
    hybrids: &[HybridSystem],
    metrics: &[MetricDescriptor],
    externals: &[ExternalScores],
) -> Result<Vec<MetricScores>> {
    let sources: Vec<String> = hybrids
        .iter()
        .flat_map(|h| h.provenance.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = sources.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let picks: Vec<Vec<usize>> = hybrids
        .iter()
        .map(|h| h.provenance.iter().map(|s| index[s.as_str()]).collect())
        .collect();
    let real = score_systems(dataset, &sources, metrics, externals)?;
    real.into_iter()
        .map(|ms| {
            let stats: Vec<_> = ms.systems.iter().map(|s| &s.stats).collect();
            let systems = hybrids
                .iter()
                .zip(&picks)
                .map(|(h, pick)| Ok(SystemScore::from_stats(&ms.metric, &h.name, interleave(&stats, pick)?)))
                .collect::<Result<_>>()?;
            Ok(MetricScores {
                metric: ms.metric,
                systems,
            })
        })
        .collect()
}

/// Verdicts for a set of system pairs under human judgment and each metric.
///
/// Systems are kept in lexicographic order; a pair `(i, j)` always has
/// `i < j` and its verdicts read "system i versus system j".
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrid {
    dataset: String,
    systems: Vec<String>,
    pairs: Vec<(usize, usize)>,
    metrics: Vec<MetricDescriptor>,
    human: Vec<Option<Verdict>>,
    metric_verdicts: Vec<Vec<Option<Verdict>>>,
}

impl PairGrid {
    /// Empty grid over all unordered pairs of `systems`.
    pub fn new(dataset: impl Into<String>, systems: &[String], metrics: Vec<MetricDescriptor>) -> Result<Self> {
        let sorted: Vec<String> = systems.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        if sorted.len() != systems.len() {
            return Err(Error::InvalidConfig("duplicate system name in grid".into()));
        }
        let n = sorted.len();
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::with_pairs(dataset, sorted, pairs, metrics)
    }

    fn with_pairs(
        dataset: impl Into<String>,
        systems: Vec<String>,
        pairs: Vec<(usize, usize)>,
        metrics: Vec<MetricDescriptor>,
    ) -> Result<Self> {
        let names: BTreeSet<&str> = metrics.iter().map(|m| m.name.as_str()).collect();
        if names.len() != metrics.len() {
            return Err(Error::InvalidConfig("duplicate metric name in grid".into()));
        }
        let p = pairs.len();
        Ok(Self {
            dataset: dataset.into(),
            human: vec![None; p],
            metric_verdicts: vec![vec![None; p]; metrics.len()],
            systems,
            pairs,
            metrics,
        })
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn metrics(&self) -> &[MetricDescriptor] {
        &self.metrics
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair(&self, p: usize) -> (&str, &str) {
        let (i, j) = self.pairs[p];
        (&self.systems[i], &self.systems[j])
    }

    pub fn pair_names(&self) -> Vec<(String, String)> {
        (0..self.num_pairs())
            .map(|p| {
                let (a, b) = self.pair(p);
                (a.to_string(), b.to_string())
            })
            .collect()
    }

    pub fn metric_index(&self, name: &str) -> Result<usize> {
        self.metrics
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMetric(name.to_string()))
    }

    pub fn human(&self, p: usize) -> Option<Verdict> {
        self.human[p]
    }

    pub fn metric_verdict(&self, metric: usize, p: usize) -> Option<Verdict> {
        self.metric_verdicts[metric][p]
    }

    pub fn set_human(&mut self, p: usize, v: Verdict) {
        self.human[p] = Some(v);
    }

    pub fn set_metric(&mut self, metric: usize, p: usize, v: Verdict) {
        self.metric_verdicts[metric][p] = Some(v);
    }

    pub fn is_populated(&self) -> bool {
        self.human.iter().all(Option::is_some) && self.metric_verdicts.iter().flatten().all(Option::is_some)
    }

    fn human_outcomes(&self) -> Result<Vec<Outcome>> {
        self.human
            .iter()
            .enumerate()
            .map(|(p, v)| v.map(|v| v.outcome).ok_or_else(|| self.unpopulated("human", p)))
            .collect()
    }

    fn metric_outcomes(&self, m: usize) -> Result<Vec<Outcome>> {
        self.metric_verdicts[m]
            .iter()
            .enumerate()
            .map(|(p, v)| v.map(|v| v.outcome).ok_or_else(|| self.unpopulated(&self.metrics[m].name, p)))
            .collect()
    }

    fn unpopulated(&self, what: &str, p: usize) -> Error {
        let (a, b) = self.pair(p);
        Error::UnpopulatedGrid(format!("no {what} verdict for ({a}, {b})"))
    }

    /// Sub-grid restricted to pairs whose human verdict is significant.
    pub fn filter_significant(&self) -> Result<PairGrid> {
        let keep: Vec<usize> = self
            .human_outcomes()?
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_significant())
            .map(|(p, _)| p)
            .collect();
        Ok(PairGrid {
            dataset: self.dataset.clone(),
            systems: self.systems.clone(),
            pairs: keep.iter().map(|&p| self.pairs[p]).collect(),
            metrics: self.metrics.clone(),
            human: keep.iter().map(|&p| self.human[p]).collect(),
            metric_verdicts: self
                .metric_verdicts
                .iter()
                .map(|row| keep.iter().map(|&p| row[p]).collect())
                .collect(),
        })
    }

    pub fn to_tsv(&self) -> String {
        cache::encode(self)
    }

    pub fn from_tsv(text: &str, file: &str) -> Result<Self> {
        cache::decode(text, file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text, &path.display().to_string())
    }
}

/// Sub-grid of human-significant pairs.
pub fn filter_significant(grid: &PairGrid) -> Result<PairGrid> {
    grid.filter_significant()
}

/// Bootstrap seed of a metric's grid cells. Depends only on the master seed
/// and the metric name, so every pair of a metric shares its resamples.
pub fn metric_seed(seed: u64, metric: &str) -> u64 {
    derive_seed(seed, &[METRIC_STREAM, label(metric)])
}

/// Seed of the human verdict for a system pair.
pub fn human_seed(seed: u64, sys_a: &str, sys_b: &str) -> u64 {
    derive_seed(seed, &[HUMAN_STREAM, label(sys_a), label(sys_b)])
}

/// Computes every human and metric verdict of the grid over `systems`.
///
/// Each macro-metric cell equals `bootstrap_compare` of the pair with seed
/// `metric_seed(config.seed, name)`; replicates are computed once per system.
pub fn populate_grid(
    dataset: &str,
    systems: &[String],
    judgments: &HumanJudgments,
    scores: &[MetricScores],
    config: &TestConfig,
) -> Result<PairGrid> {
    config.validate()?;
    let mut grid = PairGrid::new(dataset, systems, scores.iter().map(|s| s.metric.clone()).collect())?;

    let human: Vec<Verdict> = (0..grid.num_pairs())
        .into_par_iter()
        .map(|p| {
            let (a, b) = grid.pair(p);
            human_verdict(judgments, a, b, &config.with_seed(human_seed(config.seed, a, b)))
        })
        .collect::<Result<_>>()?;
    grid.human = human.into_iter().map(Some).collect();

    for (m, ms) in scores.iter().enumerate() {
        let by_name: BTreeMap<&str, &SystemScore> = ms.systems.iter().map(|s| (s.system.as_str(), s)).collect();
        let ordered: Vec<&SystemScore> = grid
            .systems
            .iter()
            .map(|s| {
                by_name
                    .get(s.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownSystem(format!("{s} (not scored by {})", ms.metric.name)))
            })
            .collect::<Result<_>>()?;
        let cfg = config.with_seed(metric_seed(config.seed, &ms.metric.name));
        let verdicts: Vec<Verdict> = match ms.metric.averaging {
            Averaging::Macro => {
                let stats: Vec<_> = ordered.iter().map(|s| &s.stats).collect();
                let reps = bootstrap_replicates(&stats, &cfg)?;
                grid.pairs
                    .par_iter()
                    .map(|&(i, j)| {
                        let full = ordered[i].stats.corpus_score() - ordered[j].stats.corpus_score();
                        verdict_from_replicates(&reps[i], &reps[j], full, ms.metric.polarity, cfg.alpha)
                    })
                    .collect()
            }
            Averaging::Micro => grid
                .pairs
                .par_iter()
                .map(|&(i, j)| scores_verdict(ordered[i], ordered[j], &cfg))
                .collect::<Result<_>>()?,
        };
        grid.metric_verdicts[m] = verdicts.into_iter().map(Some).collect();
    }
    Ok(grid)
}

/// How disagreements between metric and human verdicts are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Every pair counts. Errors are missed or reversed significant human
    /// verdicts, and significant metric verdicts where humans see none.
    #[default]
    Full,
    /// Only human-significant pairs count; an error is any metric verdict
    /// other than the human one.
    SignificantOnly,
}

impl ErrorPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorPolicy::Full => "full",
            ErrorPolicy::SignificantOnly => "significant-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(ErrorPolicy::Full),
            "significant-only" => Some(ErrorPolicy::SignificantOnly),
            _ => None,
        }
    }

    /// Whether a pair is an error, or `None` if the pair is not counted.
    pub fn judge(self, human: Outcome, metric: Outcome) -> Option<bool> {
        match (self, human.is_significant()) {
            (_, true) => Some(metric != human),
            (ErrorPolicy::Full, false) => Some(metric.is_significant()),
            (ErrorPolicy::SignificantOnly, false) => None,
        }
    }
}

impl fmt::Display for ErrorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error flags of one metric over the counted pairs of a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricErrors {
    pub metric: String,
    pub per_pair: Vec<bool>,
}

impl MetricErrors {
    pub fn errors(&self) -> usize {
        self.per_pair.iter().filter(|&&e| e).count()
    }

    pub fn total(&self) -> usize {
        self.per_pair.len()
    }

    /// Errors divided by counted pairs; 0 when no pair is counted.
    pub fn rate(&self) -> f64 {
        if self.per_pair.is_empty() {
            0.0
        } else {
            self.errors() as f64 / self.total() as f64
        }
    }
}

/// Error numbers of all metrics of a grid under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub dataset: String,
    pub policy: ErrorPolicy,
    /// The counted pairs, shared by every entry.
    pub pairs: Vec<(String, String)>,
    pub entries: Vec<MetricErrors>,
}

pub const ERROR_REPORT_HEADER: &str = "metric\terrors\ttotal\trate";

/// Percentage with one decimal, e.g. `0.2444` becomes `24.4`.
pub fn percent(rate: f64) -> String {
    format!("{:.1}", 100.0 * rate)
}

impl ErrorReport {
    pub fn entry(&self, metric: &str) -> Result<&MetricErrors> {
        self.entries
            .iter()
            .find(|e| e.metric == metric)
            .ok_or_else(|| Error::UnknownMetric(metric.to_string()))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{ERROR_REPORT_HEADER}\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.metric, e.errors(), e.total(), percent(e.rate())));
        }
        out
    }
}

fn counted_pairs(grid: &PairGrid, policy: ErrorPolicy) -> Result<Vec<usize>> {
    Ok(grid
        .human_outcomes()?
        .iter()
        .enumerate()
        .filter(|(_, h)| policy == ErrorPolicy::Full || h.is_significant())
        .map(|(p, _)| p)
        .collect())
}

/// Error flags of one metric under `policy`.
pub fn error_number(grid: &PairGrid, metric: &str, policy: ErrorPolicy) -> Result<MetricErrors> {
    let m = grid.metric_index(metric)?;
    let human = grid.human_outcomes()?;
    let verdicts = grid.metric_outcomes(m)?;
    let per_pair = human
        .iter()
        .zip(&verdicts)
        .filter_map(|(&h, &v)| policy.judge(h, v))
        .collect();
    Ok(MetricErrors {
        metric: metric.to_string(),
        per_pair,
    })
}

pub fn error_report(grid: &PairGrid, policy: ErrorPolicy) -> Result<ErrorReport> {
    let pairs = counted_pairs(grid, policy)?;
    let names = grid.pair_names();
    Ok(ErrorReport {
        dataset: grid.dataset.clone(),
        policy,
        pairs: pairs.iter().map(|&p| names[p].clone()).collect(),
        entries: grid
            .metrics
            .iter()
            .map(|m| error_number(grid, &m.name, policy))
            .collect::<Result<_>>()?,
    })
}

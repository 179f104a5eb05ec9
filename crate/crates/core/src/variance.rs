//! Significance-aware metric ranking and disagreement between datasets.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meta_eval::{percent, ErrorReport, MetricErrors};
use crate::metrics::{Polarity, SegmentStats};
use crate::significance::{bootstrap_replicates, verdict_from_replicates, Outcome, TestConfig, Verdict};

/// Result of testing whether `metric_a` makes significantly fewer errors
/// than `metric_b`. `FirstBetter` means A has fewer errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComparison {
    pub metric_a: String,
    pub metric_b: String,
    pub verdict: Verdict,
}

impl MetricComparison {
    pub fn swapped(&self) -> Self {
        Self {
            metric_a: self.metric_b.clone(),
            metric_b: self.metric_a.clone(),
            verdict: Verdict {
                outcome: self.verdict.outcome.swapped(),
                statistic: -self.verdict.statistic,
                p_or_winrate: 1.0 - self.verdict.p_or_winrate,
            },
        }
    }

    /// `(winner, loser)` if the comparison is significant.
    pub fn winner(&self) -> Option<(&str, &str)> {
        match self.verdict.outcome {
            Outcome::FirstBetter => Some((&self.metric_a, &self.metric_b)),
            Outcome::SecondBetter => Some((&self.metric_b, &self.metric_a)),
            Outcome::NoSig => None,
        }
    }
}

fn error_stats(e: &MetricErrors) -> SegmentStats {
    let counts: Vec<f64> = e.per_pair.iter().map(|&x| f64::from(u8::from(x))).collect();
    SegmentStats::from_counts(&counts)
}

fn check_pairs(entries: &[&MetricErrors]) -> Result<usize> {
    let n = entries.first().map_or(0, |e| e.total());
    if let Some(bad) = entries.iter().find(|e| e.total() != n) {
        return Err(Error::PairSetMismatch(entries[0].metric.clone(), bad.metric.clone()));
    }
    if n == 0 {
        return Err(Error::EmptyPairSet);
    }
    Ok(n)
}

/// Paired bootstrap over system pairs of the error counts of two metrics.
pub fn compare_errors(a: &MetricErrors, b: &MetricErrors, config: &TestConfig) -> Result<MetricComparison> {
    check_pairs(&[a, b])?;
    let (sa, sb) = (error_stats(a), error_stats(b));
    let reps = bootstrap_replicates(&[&sa, &sb], config)?;
    let full = a.errors() as f64 - b.errors() as f64;
    Ok(MetricComparison {
        metric_a: a.metric.clone(),
        metric_b: b.metric.clone(),
        verdict: verdict_from_replicates(&reps[0], &reps[1], full, Polarity::LowerBetter, config.alpha),
    })
}

/// Compares two metrics of an error report.
pub fn compare_metric_errors(report: &ErrorReport, metric_a: &str, metric_b: &str, config: &TestConfig) -> Result<MetricComparison> {
    compare_errors(report.entry(metric_a)?, report.entry(metric_b)?, config)
}

/// All `C(m, 2)` comparisons of a report's metrics, in report order.
/// Each equals `compare_errors` of that pair with the same config.
pub fn compare_all(report: &ErrorReport, config: &TestConfig) -> Result<Vec<MetricComparison>> {
    let entries: Vec<&MetricErrors> = report.entries.iter().collect();
    if entries.len() < 2 {
        return Ok(Vec::new());
    }
    check_pairs(&entries)?;
    let stats: Vec<SegmentStats> = entries.iter().map(|e| error_stats(e)).collect();
    let reps = bootstrap_replicates(&stats.iter().collect::<Vec<_>>(), config)?;
    let m = entries.len();
    Ok((0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .map(|(i, j)| {
            let full = entries[i].errors() as f64 - entries[j].errors() as f64;
            MetricComparison {
                metric_a: entries[i].metric.clone(),
                metric_b: entries[j].metric.clone(),
                verdict: verdict_from_replicates(&reps[i], &reps[j], full, Polarity::LowerBetter, config.alpha),
            }
        })
        .collect())
}

/// Unordered comparisons keyed by metric pair, checked for completeness.
fn index_comparisons<'a>(
    metrics: &[String],
    comparisons: &'a [MetricComparison],
) -> Result<BTreeMap<(&'a str, &'a str), &'a MetricComparison>> {
    let roster: BTreeSet<&str> = metrics.iter().map(String::as_str).collect();
    let mut index = BTreeMap::new();
    for c in comparisons {
        for m in [&c.metric_a, &c.metric_b] {
            if !roster.contains(m.as_str()) {
                return Err(Error::RosterMismatch(format!("comparison mentions unknown metric `{m}`")));
            }
        }
        if c.metric_a == c.metric_b {
            return Err(Error::InvalidConfig(format!("metric `{}` compared with itself", c.metric_a)));
        }
        let key = if c.metric_a < c.metric_b {
            (c.metric_a.as_str(), c.metric_b.as_str())
        } else {
            (c.metric_b.as_str(), c.metric_a.as_str())
        };
        if index.insert(key, c).is_some() {
            return Err(Error::InvalidConfig(format!("duplicate comparison ({}, {})", key.0, key.1)));
        }
    }
    for (i, a) in metrics.iter().enumerate() {
        for b in &metrics[i + 1..] {
            let key = if a < b { (a.as_str(), b.as_str()) } else { (b.as_str(), a.as_str()) };
            if !index.contains_key(&key) {
                return Err(Error::IncompleteComparisons(a.clone(), b.clone()));
            }
        }
    }
    Ok(index)
}

/// Rank of each metric: one plus the number of metrics with significantly
/// fewer errors. Ties are not broken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingTable {
    pub ranks: Vec<(String, usize)>,
}

pub const RANKING_HEADER: &str = "metric\trank\terrors\trate";

impl RankingTable {
    pub fn rank(&self, metric: &str) -> Option<usize> {
        self.ranks.iter().find(|(m, _)| m == metric).map(|&(_, r)| r)
    }

    /// TSV with the error counts of `report` next to each rank.
    pub fn to_tsv(&self, report: &ErrorReport) -> Result<String> {
        let mut out = format!("{RANKING_HEADER}\n");
        for (m, r) in &self.ranks {
            let e = report.entry(m)?;
            out.push_str(&format!("{m}\t{r}\t{}\t{}\n", e.errors(), percent(e.rate())));
        }
        Ok(out)
    }
}

pub fn significant_ranking(metrics: &[String], comparisons: &[MetricComparison]) -> Result<RankingTable> {
    let index = index_comparisons(metrics, comparisons)?;
    let mut beaten: BTreeMap<&str, usize> = metrics.iter().map(|m| (m.as_str(), 0)).collect();
    for c in index.values() {
        if let Some((_, loser)) = c.winner() {
            *beaten.get_mut(loser).expect("roster checked") += 1;
        }
    }
    Ok(RankingTable {
        ranks: metrics.iter().map(|m| (m.clone(), 1 + beaten[m.as_str()])).collect(),
    })
}

/// Ordered metric pairs `(winner, loser)` with a significant difference on
/// one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignificantPairSet {
    pub dataset: String,
    roster: BTreeSet<String>,
    pairs: BTreeSet<(String, String)>,
}

impl SignificantPairSet {
    pub fn new(
        dataset: impl Into<String>,
        roster: impl IntoIterator<Item = String>,
        pairs: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let roster: BTreeSet<String> = roster.into_iter().collect();
        let pairs: BTreeSet<(String, String)> = pairs.into_iter().collect();
        for (w, l) in &pairs {
            if !roster.contains(w) || !roster.contains(l) {
                return Err(Error::RosterMismatch(format!("pair ({w}, {l}) outside roster")));
            }
            if w == l {
                return Err(Error::InvalidConfig(format!("metric `{w}` paired with itself")));
            }
            if pairs.contains(&(l.clone(), w.clone())) {
                return Err(Error::InvalidConfig(format!("both ({w}, {l}) and its reverse present")));
            }
        }
        Ok(Self {
            dataset: dataset.into(),
            roster,
            pairs,
        })
    }

    pub fn roster(&self) -> &BTreeSet<String> {
        &self.roster
    }

    pub fn pairs(&self) -> &BTreeSet<(String, String)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, winner: &str, loser: &str) -> bool {
        self.pairs.contains(&(winner.to_string(), loser.to_string()))
    }
}

pub fn significant_pair_set(
    dataset: impl Into<String>,
    metrics: &[String],
    comparisons: &[MetricComparison],
) -> Result<SignificantPairSet> {
    let index = index_comparisons(metrics, comparisons)?;
    let pairs = index
        .values()
        .filter_map(|c| c.winner())
        .map(|(w, l)| (w.to_string(), l.to_string()));
    SignificantPairSet::new(dataset, metrics.iter().cloned(), pairs)
}

/// Significant pair set of a dataset from its error report.
pub fn pair_set_from_report(report: &ErrorReport, config: &TestConfig) -> Result<SignificantPairSet> {
    let metrics: Vec<String> = report.entries.iter().map(|e| e.metric.clone()).collect();
    let comparisons = compare_all(report, config)?;
    significant_pair_set(report.dataset.clone(), &metrics, &comparisons)
}

fn check_rosters(s1: &SignificantPairSet, s2: &SignificantPairSet) -> Result<()> {
    if s1.roster != s2.roster {
        return Err(Error::RosterMismatch(format!(
            "`{}` and `{}` have different metric rosters",
            s1.dataset, s2.dataset
        )));
    }
    Ok(())
}

/// Number of metric pairs whose significant order strictly reverses
/// between the two sets.
pub fn disagreement_number(s1: &SignificantPairSet, s2: &SignificantPairSet) -> Result<usize> {
    check_rosters(s1, s2)?;
    Ok(s1
        .pairs
        .iter()
        .filter(|(w, l)| s2.pairs.contains(&(l.clone(), w.clone())))
        .count())
}

/// Strict reversals plus pairs significant in only one of the two sets.
pub fn disagreement_number_weak(s1: &SignificantPairSet, s2: &SignificantPairSet) -> Result<usize> {
    let strict = disagreement_number(s1, s2)?;
    let unordered = |s: &SignificantPairSet| -> BTreeSet<(String, String)> {
        s.pairs
            .iter()
            .map(|(a, b)| if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
            .collect()
    };
    Ok(strict + unordered(s1).symmetric_difference(&unordered(s2)).count())
}

/// Square matrix of disagreement numbers between datasets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisagreementMatrix {
    pub datasets: Vec<String>,
    pub cells: Vec<Vec<usize>>,
}

pub fn disagreement_matrix(sets: &[SignificantPairSet], weak: bool) -> Result<DisagreementMatrix> {
    if let Some(first) = sets.first() {
        for s in &sets[1..] {
            check_rosters(first, s)?;
        }
    }
    let n = sets.len();
    let count = if weak { disagreement_number_weak } else { disagreement_number };
    let upper: Vec<((usize, usize), usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| Ok(((i, j), count(&sets[i], &sets[j])?)))
        .collect::<Result<_>>()?;
    let mut cells = vec![vec![0; n]; n];
    for ((i, j), v) in upper {
        cells[i][j] = v;
        cells[j][i] = v;
    }
    Ok(DisagreementMatrix {
        datasets: sets.iter().map(|s| s.dataset.clone()).collect(),
        cells,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl DisagreementMatrix {
    pub fn max(&self) -> usize {
        self.cells.iter().flatten().copied().max().unwrap_or(0)
    }

    /// CSV with dataset names as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset");
        for d in &self.datasets {
            out.push(',');
            out.push_str(&csv_field(d));
        }
        out.push('\n');
        for (d, row) in self.datasets.iter().zip(&self.cells) {
            out.push_str(&csv_field(d));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Heatmap with a white-to-red scale from 0 to `scale_max`.
    pub fn to_svg(&self, scale_max: usize) -> String {
        const CELL: usize = 40;
        const MARGIN: usize = 120;
        let n = self.datasets.len();
        let size = MARGIN + CELL * n + 10;
        let top = scale_max.max(1) as f64;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" font-family=\"sans-serif\" font-size=\"11\">\n\
             <!-- disagreement heatmap; fill = rgb(255, 255 - 255*v/{scale_max}, 255 - 255*v/{scale_max}), v clipped to [0, {scale_max}] -->\n"
        );
        for (i, d) in self.datasets.iter().enumerate() {
            let c = MARGIN + CELL * i + CELL / 2;
            let d = xml_escape(d);
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{c}\" text-anchor=\"end\" dominant-baseline=\"middle\">{d}</text>\n",
                MARGIN - 6
            ));
            out.push_str(&format!(
                "<text x=\"{c}\" y=\"{}\" text-anchor=\"start\" transform=\"rotate(-60 {c} {})\">{d}</text>\n",
                MARGIN - 6,
                MARGIN - 6
            ));
        }
        for (i, row) in self.cells.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let shade = 255 - (255.0 * (v as f64 / top).min(1.0)).round() as u8;
                let (x, y) = (MARGIN + CELL * j, MARGIN + CELL * i);
                out.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"rgb(255,{shade},{shade})\" stroke=\"#999\"/>\
                     <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" dominant-baseline=\"middle\">{v}</text>\n",
                    x + CELL / 2,
                    y + CELL / 2
                ));
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

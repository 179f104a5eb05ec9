//! Significance-tested comparison of two systems.
//!
//! Which test applies depends on what is compared: RR judgments and macro
//! metrics use paired bootstrap resampling, DA judgments the Wilcoxon
//! rank-sum test, micro metrics the paired t-test.

pub mod special;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{Dataset, ExternalScores, HumanJudgments};
use crate::error::{Error, Result};
use crate::metrics::{score_system, Averaging, MetricDescriptor, Polarity, SegmentStats, SystemScore};
use crate::rng::substream;

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Minimum list length for the normal approximation of the rank-sum test.
pub const WILCOXON_MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    pub iterations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl TestConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            alpha: DEFAULT_ALPHA,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    FirstBetter,
    SecondBetter,
    NoSig,
}

impl Outcome {
    pub fn is_significant(self) -> bool {
        self != Outcome::NoSig
    }

    pub fn swapped(self) -> Self {
        match self {
            Outcome::FirstBetter => Outcome::SecondBetter,
            Outcome::SecondBetter => Outcome::FirstBetter,
            Outcome::NoSig => Outcome::NoSig,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::FirstBetter => "first",
            Outcome::SecondBetter => "second",
            Outcome::NoSig => "nosig",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Outcome::FirstBetter),
            "second" => Ok(Outcome::SecondBetter),
            "nosig" => Ok(Outcome::NoSig),
            _ => Err(Error::InvalidConfig(format!("unknown outcome `{s}`"))),
        }
    }
}

/// Result of one significance test.
///
/// `statistic` is test specific: the oriented full-sample difference for
/// the bootstrap, z for the rank-sum test and t for the t-test.
/// `p_or_winrate` is the first system's win fraction for the bootstrap and
/// the two-sided p-value otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub statistic: f64,
    pub p_or_winrate: f64,
}

impl Verdict {
    fn from_p(p: f64, statistic: f64, alpha: f64) -> Self {
        let outcome = if p < alpha && statistic > 0.0 {
            Outcome::FirstBetter
        } else if p < alpha && statistic < 0.0 {
            Outcome::SecondBetter
        } else {
            Outcome::NoSig
        };
        Self {
            outcome,
            statistic,
            p_or_winrate: p,
        }
    }
}

/// Multiplicity of each of `n` items in one bootstrap resample.
pub fn resample_counts(n: usize, seed: u64, iteration: usize, counts: &mut Vec<u32>) {
    counts.clear();
    counts.resize(n, 0);
    let mut rng = substream(seed, iteration as u64);
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
}

/// Finalized scores of every input under each bootstrap resample, indexed
/// `[input][iteration]`. All inputs share the resample of an iteration, so
/// any two of them form a paired bootstrap. Iteration `i` draws from
/// substream `(seed, i)`; results do not depend on the thread count.
pub fn bootstrap_replicates(inputs: &[&SegmentStats], config: &TestConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if let Some(bad) = inputs.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch { left: n, right: bad.len() });
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let max_width = inputs.iter().map(|s| s.width()).max().unwrap_or(1);
    let per_iteration: Vec<Vec<f64>> = (0..config.iterations)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), vec![0.0; max_width]),
            |(counts, acc), i| {
                resample_counts(n, config.seed, i, counts);
                inputs
                    .iter()
                    .map(|s| s.weighted_score(counts, &mut acc[..s.width()]))
                    .collect()
            },
        )
        .collect();
    Ok((0..inputs.len())
        .map(|k| per_iteration.iter().map(|row| row[k]).collect())
        .collect())
}

/// Bootstrap verdict from paired replicate scores of A and B.
///
/// Each iteration is won by the side with the better oriented score; exact
/// ties give half a win to each. A side is significantly better when its win
/// fraction reaches `1 - alpha/2`.
pub fn verdict_from_replicates(rep_a: &[f64], rep_b: &[f64], full_diff: f64, polarity: Polarity, alpha: f64) -> Verdict {
    // half-wins counted in integer units to keep swap symmetry exact
    let mut half_wins_a = 0usize;
    for (a, b) in rep_a.iter().zip(rep_b) {
        let d = polarity.orient(a - b);
        half_wins_a += if d > 0.0 {
            2
        } else if d == 0.0 {
            1
        } else {
            0
        };
    }
    let total = 2 * rep_a.len();
    let win_a = half_wins_a as f64 / total as f64;
    let win_b = (total - half_wins_a) as f64 / total as f64;
    let threshold = 1.0 - alpha / 2.0;
    let outcome = if win_a >= threshold {
        Outcome::FirstBetter
    } else if win_b >= threshold {
        Outcome::SecondBetter
    } else {
        Outcome::NoSig
    };
    Verdict {
        outcome,
        statistic: polarity.orient(full_diff),
        p_or_winrate: win_a,
    }
}

/// Paired bootstrap comparison of two systems described by per-segment
/// statistics of the same kind.
pub fn bootstrap_compare(a: &SegmentStats, b: &SegmentStats, polarity: Polarity, config: &TestConfig) -> Result<Verdict> {
    if a.finalizer() != b.finalizer() {
        return Err(Error::Invariant("bootstrap inputs use different aggregations".into()));
    }
    let reps = bootstrap_replicates(&[a, b], config)?;
    let full = a.corpus_score() - b.corpus_score();
    Ok(verdict_from_replicates(&reps[0], &reps[1], full, polarity, config.alpha))
}

/// Average ranks (1-based) of `values`, plus the tie correction sum of
/// `t^3 - t` over tie groups.
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test with tie-corrected normal
/// approximation and continuity correction. Higher scores are better.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<Verdict> {
    let shortest = a.len().min(b.len());
    if shortest < WILCOXON_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: WILCOXON_MIN_SAMPLES,
            got: shortest,
        });
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("non-finite score".into()));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let combined: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&combined);
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let u_a = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if variance <= 0.0 {
        return Ok(Verdict {
            outcome: Outcome::NoSig,
            statistic: 0.0,
            p_or_winrate: 1.0,
        });
    }
    let diff = u_a - mean;
    let z = diff.signum() * (diff.abs() - 0.5).max(0.0) / variance.sqrt();
    Ok(Verdict::from_p(special::normal_two_sided_p(z), z, alpha))
}

/// Two-sided paired t-test on `a - b`. Inputs must already be oriented so
/// that higher is better.
///
/// Zero variance of the differences is decided without the t distribution:
/// a zero mean gives `NoSig`, any other mean is significant in its direction.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<Verdict> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let ss: f64 = d.iter().map(|x| (x - mean) * (x - mean)).sum();
    let variance = ss / (n - 1) as f64;
    if !mean.is_finite() || !variance.is_finite() {
        return Err(Error::InvalidConfig("non-finite score".into()));
    }
    if variance == 0.0 {
        let (statistic, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(Verdict::from_p(p, statistic, alpha));
    }
    let t = mean / (variance / n as f64).sqrt();
    let p = special::student_t_two_sided_p(t, (n - 1) as f64);
    Ok(Verdict::from_p(p, t, alpha))
}

/// DA scores of two systems on their commonly annotated segments.
pub fn shared_da_scores(judgments: &HumanJudgments, sys_a: &str, sys_b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let get = |s: &str| {
        judgments
            .da_scores(s)
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))
    };
    let (va, vb) = (get(sys_a)?, get(sys_b)?);
    Ok(va
        .iter()
        .zip(vb)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip())
}

/// Human verdict for a system pair: rank-sum test on commonly annotated DA
/// segments, or a bootstrap over the pair's RR preference events.
pub fn human_verdict(judgments: &HumanJudgments, sys_a: &str, sys_b: &str, config: &TestConfig) -> Result<Verdict> {
    match judgments {
        HumanJudgments::Da(_) => {
            let (a, b) = shared_da_scores(judgments, sys_a, sys_b)?;
            wilcoxon_rank_sum(&a, &b, config.alpha)
        }
        HumanJudgments::Rr(prefs) => {
            let (wins_a, wins_b): (Vec<f64>, Vec<f64>) = prefs
                .iter()
                .filter_map(|p| {
                    if p.winner == sys_a && p.loser == sys_b {
                        Some((1.0, 0.0))
                    } else if p.winner == sys_b && p.loser == sys_a {
                        Some((0.0, 1.0))
                    } else {
                        None
                    }
                })
                .unzip();
            if wins_a.len() < 2 {
                return Err(Error::InsufficientSamples {
                    needed: 2,
                    got: wins_a.len(),
                });
            }
            bootstrap_compare(
                &SegmentStats::from_counts(&wins_a),
                &SegmentStats::from_counts(&wins_b),
                Polarity::HigherBetter,
                config,
            )
        }
    }
}

/// Metric verdict from two already computed system scores.
pub fn scores_verdict(a: &SystemScore, b: &SystemScore, config: &TestConfig) -> Result<Verdict> {
    if a.metric != b.metric {
        return Err(Error::MetricMismatch(a.metric.name.clone(), b.metric.name.clone()));
    }
    match a.metric.averaging {
        Averaging::Macro => bootstrap_compare(&a.stats, &b.stats, a.metric.polarity, config),
        Averaging::Micro => {
            let oriented = |s: &SystemScore| -> Vec<f64> {
                let v = s.sentence_scores.as_deref().unwrap_or_default();
                match s.metric.polarity {
                    Polarity::HigherBetter => v.to_vec(),
                    Polarity::LowerBetter => v.iter().map(|x| -x).collect(),
                }
            };
            paired_t_test(&oriented(a), &oriented(b), config.alpha)
        }
    }
}

/// Metric verdict for a system pair. `FirstBetter` always means A has the
/// better translation quality according to the metric.
pub fn metric_verdict(
    metric: &MetricDescriptor,
    dataset: &Dataset,
    sys_a: &str,
    sys_b: &str,
    external: Option<&ExternalScores>,
    config: &TestConfig,
) -> Result<Verdict> {
    let a = score_system(metric, dataset, sys_a, external)?;
    let b = score_system(metric, dataset, sys_b, external)?;
    scores_verdict(&a, &b, config)
}

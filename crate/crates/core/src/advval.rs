//! Adversarial validation: how well a classifier tells two datasets apart.
//!
//! Each dataset's source segments are split 80/10/10 into train, dev and
//! test before any example is built, so examples derived from one source
//! segment never straddle splits. The classifier is logistic regression over
//! hashed character 1–4-grams.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::meta_eval::percent;
use crate::rng::{derive_seed, substream};

/// Joins a system output and its source in source-output mode.
pub const SEPARATOR: &str = " ||| ";
pub const FEATURE_BITS: u32 = 18;
pub const FEATURE_DIM: usize = 1 << FEATURE_BITS;
pub const MAX_NGRAM: usize = 4;
pub const DEFAULT_SEEDS: usize = 5;
/// Fewest segments a dataset may have for a self split.
pub const MIN_SELF_SPLIT: usize = 20;

const SPLIT_STREAM: u64 = 1;
const SELF_SPLIT_STREAM: u64 = 2;
const TRAIN_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// One example per source segment.
    #[default]
    SourceOnly,
    /// One example per (system, segment): output, separator, source.
    SourceOutput,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SourceOnly => "source",
            Mode::SourceOutput => "source-output",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "source" => Some(Mode::SourceOnly),
            "source-output" => Some(Mode::SourceOutput),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub text: String,
    pub label: u8,
    /// Source segment the example came from, within its dataset.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationDataset {
    pub mode: Mode,
    pub examples: Vec<Example>,
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// Train/dev/test partition of `n` segments: dev and test each get
/// `max(1, round(n / 10))` segments.
fn split_segments(n: usize, seed: u64, stream: u64) -> Result<[Vec<usize>; 3]> {
    let held = ((n as f64 / 10.0).round() as usize).max(1);
    if n < 2 * held + 1 {
        return Err(Error::DegenerateSplit(format!("{n} segments cannot fill train, dev and test")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, stream));
    let test = order[..held].to_vec();
    let dev = order[held..2 * held].to_vec();
    let train = order[2 * held..].to_vec();
    Ok([train, dev, test])
}

fn examples_for(d: &Dataset, mode: Mode, label: u8, segment: usize) -> Result<Vec<Example>> {
    let source = &d.sources()[segment];
    match mode {
        Mode::SourceOnly => Ok(vec![Example {
            text: source.clone(),
            label,
            segment,
        }]),
        Mode::SourceOutput => d
            .system_names()
            .iter()
            .map(|s| {
                Ok(Example {
                    text: format!("{}{SEPARATOR}{source}", d.system(s)?[segment]),
                    label,
                    segment,
                })
            })
            .collect(),
    }
}

/// Labels `d1` with 0 and `d2` with 1, splits each dataset's segments, then
/// builds examples inside each split.
pub fn build_classification_dataset(d1: &Dataset, d2: &Dataset, mode: Mode, seed: u64) -> Result<ClassificationDataset> {
    let mut data = ClassificationDataset {
        mode,
        examples: Vec::new(),
        train: Vec::new(),
        dev: Vec::new(),
        test: Vec::new(),
    };
    for (label, d) in [(0u8, d1), (1u8, d2)] {
        if d.segments() == 0 {
            return Err(Error::EmptyDataset);
        }
        if mode == Mode::SourceOutput && d.systems().is_empty() {
            return Err(Error::InvalidConfig(format!(
                "source-output mode needs systems, `{}` has none",
                d.name()
            )));
        }
        let splits = split_segments(d.segments(), seed, SPLIT_STREAM + u64::from(label) * 16)?;
        for (k, segments) in splits.iter().enumerate() {
            let mut segments = segments.clone();
            segments.sort_unstable();
            for seg in segments {
                for ex in examples_for(d, mode, label, seg)? {
                    let id = data.examples.len();
                    data.examples.push(ex);
                    [&mut data.train, &mut data.dev, &mut data.test][k].push(id);
                }
            }
        }
    }
    Ok(data)
}

/// Random halves of one dataset, as two pseudo-datasets.
pub fn self_split(d: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    if d.segments() < MIN_SELF_SPLIT {
        return Err(Error::InsufficientSamples {
            needed: MIN_SELF_SPLIT,
            got: d.segments(),
        });
    }
    let mut order: Vec<usize> = (0..d.segments()).collect();
    order.shuffle(&mut substream(seed, SELF_SPLIT_STREAM));
    let (a, b) = order.split_at(d.segments() / 2);
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_unstable();
    b.sort_unstable();
    Ok((d.subset(format!("{}-a", d.name()), &a)?, d.subset(format!("{}-b", d.name()), &b)?))
}

pub fn self_split_dataset(d: &Dataset, mode: Mode, seed: u64) -> Result<ClassificationDataset> {
    let (a, b) = self_split(d, seed)?;
    build_classification_dataset(&a, &b, mode, seed)
}

impl ClassificationDataset {
    pub fn split_of(&self, id: usize) -> Option<Split> {
        [(Split::Train, &self.train), (Split::Dev, &self.dev), (Split::Test, &self.test)]
            .into_iter()
            .find(|(_, ids)| ids.contains(&id))
            .map(|(s, _)| s)
    }

    /// TSV `example_id  split  label  text`, for external classifiers.
    pub fn to_tsv(&self) -> String {
        let mut split = vec![Split::Train; self.examples.len()];
        for &i in &self.dev {
            split[i] = Split::Dev;
        }
        for &i in &self.test {
            split[i] = Split::Test;
        }
        let mut out = String::from("example_id\tsplit\tlabel\ttext\n");
        for (i, ex) in self.examples.iter().enumerate() {
            out.push_str(&format!("{i}\t{}\t{}\t{}\n", split[i].as_str(), ex.label, ex.text));
        }
        out
    }
}

/// Sparse feature vector: sorted unique indices with L2-normalized counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

fn fnv_step(h: u64, c: char) -> u64 {
    (h ^ u64::from(c)).wrapping_mul(0x0100_0000_01b3)
}

/// Hashed lowercased character n-grams, n = 1..=4.
pub fn featurize(text: &str) -> Features {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for i in 0..chars.len() {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for &c in chars.iter().skip(i).take(MAX_NGRAM) {
            h = fnv_step(h, c);
            let idx = (h.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> (64 - FEATURE_BITS)) as u32;
            *counts.entry(idx).or_default() += 1.0;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let (indices, values) = counts.into_iter().map(|(i, v)| (i, v / norm)).unzip();
    Features { indices, values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2: 1e-5,
            max_epochs: 30,
            patience: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTextClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Epochs trained for the returned weights.
    pub epochs: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LinearTextClassifier {
    fn zero() -> Self {
        Self {
            weights: vec![0.0; FEATURE_DIM],
            bias: 0.0,
            epochs: 0,
        }
    }

    fn margin(&self, x: &Features) -> f64 {
        self.bias
            + x.indices
                .iter()
                .zip(&x.values)
                .map(|(&i, v)| self.weights[i as usize] * v)
                .sum::<f64>()
    }

    pub fn probability(&self, text: &str) -> f64 {
        sigmoid(self.margin(&featurize(text)))
    }

    pub fn predict(&self, text: &str) -> u8 {
        u8::from(self.margin(&featurize(text)) > 0.0)
    }

    fn accuracy_on(&self, feats: &[Features], labels: &[u8], ids: &[usize]) -> f64 {
        if ids.is_empty() {
            return 0.0;
        }
        let correct = ids
            .iter()
            .filter(|&&i| u8::from(self.margin(&feats[i]) > 0.0) == labels[i])
            .count();
        correct as f64 / ids.len() as f64
    }

    /// Accuracy on one split of `data`.
    pub fn accuracy(&self, data: &ClassificationDataset, split: Split) -> f64 {
        let ids = match split {
            Split::Train => &data.train,
            Split::Dev => &data.dev,
            Split::Test => &data.test,
        };
        let correct = ids
            .iter()
            .filter(|&&i| self.predict(&data.examples[i].text) == data.examples[i].label)
            .count();
        if ids.is_empty() {
            0.0
        } else {
            correct as f64 / ids.len() as f64
        }
    }
}

fn check_labels(data: &ClassificationDataset, ids: &[usize], split: Split) -> Result<()> {
    let has = |l: u8| ids.iter().any(|&i| data.examples[i].label == l);
    if !has(0) || !has(1) {
        return Err(Error::DegenerateSplit(format!("{} split lacks one of the labels", split.as_str())));
    }
    Ok(())
}

/// SGD on logistic loss with L2 decay on touched weights. The epoch with
/// the best dev accuracy is kept; training stops after `patience` epochs
/// without improvement.
pub fn train_classifier(data: &ClassificationDataset, hp: &Hyperparams, seed: u64) -> Result<LinearTextClassifier> {
    check_labels(data, &data.train, Split::Train)?;
    if data.dev.is_empty() {
        return Err(Error::DegenerateSplit("empty dev split".into()));
    }
    let feats: Vec<Features> = data.examples.iter().map(|e| featurize(&e.text)).collect();
    let labels: Vec<u8> = data.examples.iter().map(|e| e.label).collect();
    Ok(train_on_features(&feats, &labels, data, hp, seed))
}

fn train_on_features(
    feats: &[Features],
    labels: &[u8],
    data: &ClassificationDataset,
    hp: &Hyperparams,
    seed: u64,
) -> LinearTextClassifier {
    let seed = derive_seed(seed, &[TRAIN_STREAM]);
    let mut model = LinearTextClassifier::zero();
    let mut best = model.clone();
    let mut best_dev = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut order = data.train.clone();
    for epoch in 0..hp.max_epochs {
        order.shuffle(&mut substream(seed, epoch as u64));
        let lr = hp.learning_rate / (1.0 + epoch as f64).sqrt();
        for &i in &order {
            let x = &feats[i];
            let g = sigmoid(model.margin(x)) - f64::from(labels[i]);
            for (&j, v) in x.indices.iter().zip(&x.values) {
                let w = &mut model.weights[j as usize];
                *w -= lr * (g * v + hp.l2 * *w);
            }
            model.bias -= lr * g;
        }
        model.epochs = epoch + 1;
        let dev = model.accuracy_on(feats, labels, &data.dev);
        if dev > best_dev {
            best_dev = dev;
            best.clone_from(&model);
            stale = 0;
        } else {
            stale += 1;
            if stale >= hp.patience {
                break;
            }
        }
    }
    best
}

/// Test accuracies over several seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvValReport {
    pub mode: Mode,
    pub per_seed: Vec<(u64, f64)>,
}

impl AdvValReport {
    pub fn mean(&self) -> f64 {
        self.per_seed.iter().map(|x| x.1).sum::<f64>() / self.per_seed.len().max(1) as f64
    }

    /// TSV `seed  accuracy` plus a `mean` row, in percent.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("seed\taccuracy\n");
        for (s, a) in &self.per_seed {
            out.push_str(&format!("{s}\t{}\n", percent(*a)));
        }
        out.push_str(&format!("mean\t{}\n", percent(self.mean())));
        out
    }
}

fn run_seeds<F>(n_seeds: usize, mode: Mode, base_seed: u64, hp: &Hyperparams, build: F) -> Result<AdvValReport>
where
    F: Fn(u64) -> Result<ClassificationDataset> + Sync,
{
    if n_seeds == 0 {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    let per_seed = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let seed = derive_seed(base_seed, &[s]);
            let data = build(seed)?;
            check_labels(&data, &data.test, Split::Test)?;
            let model = train_classifier(&data, hp, seed)?;
            Ok((s, model.accuracy(&data, Split::Test)))
        })
        .collect::<Result<_>>()?;
    Ok(AdvValReport { mode, per_seed })
}

/// Build, train and evaluate once per seed `0..n_seeds`; each run's seed is
/// derived from `base_seed` and its index.
pub fn adversarial_validation(
    d1: &Dataset,
    d2: &Dataset,
    mode: Mode,
    n_seeds: usize,
    hp: &Hyperparams,
    base_seed: u64,
) -> Result<AdvValReport> {
    run_seeds(n_seeds, mode, base_seed, hp, |s| build_classification_dataset(d1, d2, mode, s))
}

/// Adversarial validation between random halves of one dataset.
pub fn self_adversarial_validation(d: &Dataset, mode: Mode, n_seeds: usize, hp: &Hyperparams, base_seed: u64) -> Result<AdvValReport> {
    run_seeds(n_seeds, mode, base_seed, hp, |s| self_split_dataset(d, mode, s))
}

/// Mean accuracies for every dataset pair; the diagonal uses self splits.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    pub datasets: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset");
        for d in &self.datasets {
            out.push(',');
            out.push_str(d);
        }
        out.push('\n');
        for (d, row) in self.datasets.iter().zip(&self.cells) {
            out.push_str(d);
            for v in row {
                out.push(',');
                out.push_str(&percent(*v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn accuracy_matrix(
    datasets: &[Dataset],
    mode: Mode,
    n_seeds: usize,
    hp: &Hyperparams,
    base_seed: u64,
) -> Result<AccuracyMatrix> {
    let n = datasets.len();
    let mut cells = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let report = if i == j {
                self_adversarial_validation(&datasets[i], mode, n_seeds, hp, base_seed)?
            } else {
                adversarial_validation(&datasets[i], &datasets[j], mode, n_seeds, hp, base_seed)?
            };
            cells[i][j] = report.mean();
            cells[j][i] = report.mean();
        }
    }
    Ok(AccuracyMatrix {
        datasets: datasets.iter().map(|d| d.name().to_string()).collect(),
        cells,
    })
}

/// Reads `example_id  predicted_label` rows; a header row is optional.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<usize, u8>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let row = n + 1;
        if line.trim().is_empty() || (row == 1 && line.starts_with("example_id")) {
            continue;
        }
        let bad = |reason: String| Error::MalformedRow {
            file: file.clone(),
            row,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, label] = fields[..] else {
            return Err(bad(format!("expected 2 fields, found {}", fields.len())));
        };
        let id: usize = id.parse().map_err(|_| bad(format!("bad example id `{id}`")))?;
        let label = match label {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("label must be 0 or 1, got `{other}`"))),
        };
        if out.insert(id, label).is_some() {
            return Err(bad(format!("duplicate example id {id}")));
        }
    }
    Ok(out)
}

/// Test accuracy of externally produced predictions.
pub fn score_predictions(data: &ClassificationDataset, predictions: &BTreeMap<usize, u8>) -> Result<f64> {
    if data.test.is_empty() {
        return Err(Error::DegenerateSplit("empty test split".into()));
    }
    let mut correct = 0;
    for &i in &data.test {
        let p = predictions
            .get(&i)
            .ok_or_else(|| Error::InvalidConfig(format!("no prediction for test example {i}")))?;
        correct += usize::from(*p == data.examples[i].label);
    }
    Ok(correct as f64 / data.test.len() as f64)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn dataset(name: &str, sources: Vec<String>, systems: usize) -> Dataset {
        let refs = sources.clone();
        let systems = (0..systems)
            .map(|k| (format!("sys{k}"), sources.iter().map(|s| format!("{s} out{k}")).collect()))
            .collect();
        Dataset::new(name, sources, refs, systems).unwrap()
    }

    fn numbered(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix} sentence {i}")).collect()
    }

    #[test]
    fn split_sizes() {
        let d1 = dataset("a", numbered("a", 10), 3);
        let d2 = dataset("b", numbered("b", 10), 3);
        let c = build_classification_dataset(&d1, &d2, Mode::SourceOnly, 1).unwrap();
        assert_eq!((c.examples.len(), c.train.len(), c.dev.len(), c.test.len()), (20, 16, 2, 2));
        let c = build_classification_dataset(&d1, &d2, Mode::SourceOutput, 1).unwrap();
        assert_eq!(c.examples.iter().filter(|e| e.label == 0).count(), 30);
        assert_eq!(c, build_classification_dataset(&d1, &d2, Mode::SourceOutput, 1).unwrap());
        assert!(c.examples[0].text.contains(SEPARATOR));
    }

    #[test]
    fn splits_are_disjoint_and_keep_segments_together() {
        let d1 = dataset("a", numbered("a", 37), 4);
        let d2 = dataset("b", numbered("b", 23), 2);
        let c = build_classification_dataset(&d1, &d2, Mode::SourceOutput, 8).unwrap();
        let mut all: Vec<usize> = c.train.iter().chain(&c.dev).chain(&c.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..c.examples.len()).collect::<Vec<_>>());
        let mut home: BTreeMap<(u8, usize), Split> = BTreeMap::new();
        for (i, e) in c.examples.iter().enumerate() {
            let s = c.split_of(i).unwrap();
            assert_eq!(*home.entry((e.label, e.segment)).or_insert(s), s);
        }
    }

    #[test]
    fn errors() {
        let d1 = dataset("a", numbered("a", 10), 0);
        let d2 = dataset("b", numbered("b", 10), 1);
        assert!(build_classification_dataset(&d1, &d2, Mode::SourceOutput, 0).is_err());
        let tiny = dataset("t", numbered("t", 2), 1);
        assert!(matches!(
            build_classification_dataset(&tiny, &d2, Mode::SourceOnly, 0),
            Err(Error::DegenerateSplit(_))
        ));
        assert!(self_split(&d1, 0).is_err());
    }

    #[test]
    fn self_split_halves() {
        let d = dataset("d", numbered("d", 41), 1);
        let (a, b) = self_split(&d, 3).unwrap();
        assert_eq!((a.segments(), b.segments()), (20, 21));
        let srcs: BTreeSet<&String> = a.sources().iter().chain(b.sources()).collect();
        assert_eq!(srcs.len(), 41);
        assert_eq!(self_split(&d, 3).unwrap(), (a, b));
    }

    #[test]
    fn features_are_normalized_and_case_blind() {
        let f = featurize("Abc");
        assert_eq!(f, featurize("aBC"));
        assert_eq!(f.indices.len(), 6); // a b c ab bc abc
        let norm: f64 = f.values.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(f.indices.windows(2).all(|w| w[0] < w[1]));
        assert!(featurize("").indices.is_empty());
    }

    #[test]
    fn separable_toy_set() {
        let a: Vec<String> = (0..60).map(|i| format!("aaa item {i}")).collect();
        let b: Vec<String> = (0..60).map(|i| format!("zzz item {i}")).collect();
        let data = build_classification_dataset(&dataset("a", a, 0), &dataset("b", b, 0), Mode::SourceOnly, 2).unwrap();
        let m = train_classifier(&data, &Hyperparams::default(), 2).unwrap();
        assert_eq!(m.accuracy(&data, Split::Test), 1.0);
        assert_eq!(m, train_classifier(&data, &Hyperparams::default(), 2).unwrap());
    }

    #[test]
    fn single_class_training_is_rejected() {
        let data = ClassificationDataset {
            mode: Mode::SourceOnly,
            examples: vec![
                Example {
                    text: "x".into(),
                    label: 0,
                    segment: 0,
                };
                3
            ],
            train: vec![0, 1],
            dev: vec![2],
            test: vec![],
        };
        assert!(matches!(
            train_classifier(&data, &Hyperparams::default(), 0),
            Err(Error::DegenerateSplit(_))
        ));
    }

    #[test]
    fn prediction_scoring() {
        let d1 = dataset("a", numbered("a", 10), 0);
        let d2 = dataset("b", numbered("b", 10), 0);
        let c = build_classification_dataset(&d1, &d2, Mode::SourceOnly, 5).unwrap();
        let perfect: BTreeMap<usize, u8> = c.test.iter().map(|&i| (i, c.examples[i].label)).collect();
        assert_eq!(score_predictions(&c, &perfect).unwrap(), 1.0);
        let flipped: BTreeMap<usize, u8> = perfect.iter().map(|(&i, &l)| (i, 1 - l)).collect();
        assert_eq!(score_predictions(&c, &flipped).unwrap(), 0.0);
        assert!(score_predictions(&c, &BTreeMap::new()).is_err());
        assert!(c.to_tsv().starts_with("example_id\tsplit\tlabel\ttext\n"));
    }

    #[test]
    fn report_format() {
        let r = AdvValReport {
            mode: Mode::SourceOnly,
            per_seed: vec![(0, 0.5), (1, 0.75)],
        };
        assert_eq!(r.to_tsv(), "seed\taccuracy\n0\t50.0\n1\t75.0\nmean\t62.5\n");
    }
}

//! Synthetic datasets with known structure.

use std::collections::BTreeMap;

use mtvar_core::corpus::{Dataset, ExternalScores, HumanJudgments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw (Box-Muller).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

const SYLLABLES: [&str; 16] = [
    "ka", "to", "ri", "mu", "sen", "la", "vo", "di", "pe", "ran", "qui", "ber", "zo", "na", "fi", "gul",
];

/// `size` distinct pseudo-words.
pub fn vocab(size: usize) -> Vec<String> {
    (0..size)
        .map(|mut i| {
            let mut w = String::new();
            loop {
                w.push_str(SYLLABLES[i % SYLLABLES.len()]);
                i /= SYLLABLES.len();
                if i == 0 {
                    break;
                }
            }
            w
        })
        .collect()
}

/// Word index with roughly Zipfian frequencies.
fn zipf_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.gen();
    (((n as f64 + 1.0).powf(u) - 1.0) as usize).min(n - 1)
}

pub fn sentence(rng: &mut ChaCha8Rng, vocab: &[String], min_len: usize, max_len: usize) -> String {
    let len = rng.gen_range(min_len..=max_len);
    (0..len).map(|_| vocab[zipf_index(rng, vocab.len())].as_str()).collect::<Vec<_>>().join(" ")
}

/// Reference with a fraction `noise` of its words substituted or dropped,
/// and occasional adjacent swaps.
pub fn corrupt(rng: &mut ChaCha8Rng, reference: &str, noise: f64, vocab: &[String]) -> String {
    let mut out: Vec<String> = Vec::new();
    for w in reference.split_whitespace() {
        let u: f64 = rng.gen();
        if u < noise * 0.6 {
            out.push(vocab[zipf_index(rng, vocab.len())].clone());
        } else if u < noise {
            continue;
        } else {
            out.push(w.to_string());
        }
    }
    for i in 1..out.len() {
        if rng.gen::<f64>() < noise * 0.2 {
            out.swap(i - 1, i);
        }
    }
    if out.is_empty() {
        out.push(vocab[0].clone());
    }
    out.join(" ")
}

/// Text dataset: random references, one system per noise level.
pub fn text_dataset(name: &str, segments: usize, noise: &[f64], seed: u64) -> Dataset {
    let v = vocab(400);
    let mut r = rng(seed);
    let sources: Vec<String> = (0..segments).map(|_| sentence(&mut r, &v, 5, 25)).collect();
    let references: Vec<String> = sources.iter().map(|s| corrupt(&mut r, s, 0.3, &v)).collect();
    let systems = noise
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let out = references.iter().map(|x| corrupt(&mut r, x, p, &v)).collect();
            (format!("sys{k:02}"), out)
        })
        .collect();
    Dataset::new(name, sources, references, systems).unwrap()
}

/// Dataset of placeholder texts for experiments driven by numeric scores.
pub fn placeholder_dataset(name: &str, segments: usize, systems: usize) -> Dataset {
    let sources = (0..segments).map(|i| format!("source {i}")).collect();
    let references = (0..segments).map(|i| format!("reference {i}")).collect();
    let systems = (0..systems)
        .map(|s| (format!("sys{s:02}"), (0..segments).map(|i| format!("output {s} {i}")).collect()))
        .collect();
    Dataset::new(name, sources, references, systems).unwrap()
}

/// Numeric world: per-system quality, per-segment difficulty, noisy human
/// DA scores and noisy metric sentence scores.
pub struct World {
    pub dataset: Dataset,
    pub judgments: HumanJudgments,
    pub metrics: Vec<ExternalScores>,
}

pub struct WorldParams {
    pub segments: usize,
    pub qualities: Vec<f64>,
    pub segment_sd: f64,
    pub human_sd: f64,
    /// One metric per entry: noise sd around the true segment quality.
    pub metric_sd: Vec<f64>,
}

pub fn world(params: &WorldParams, name: &str, seed: u64) -> World {
    let mut r = rng(seed);
    let n = params.segments;
    let dataset = placeholder_dataset(name, n, params.qualities.len());
    let names = dataset.system_names();
    let difficulty: Vec<f64> = (0..n).map(|_| params.segment_sd * normal(&mut r)).collect();
    let truth: Vec<Vec<f64>> = params
        .qualities
        .iter()
        .map(|q| difficulty.iter().map(|d| q + d + normal(&mut r)).collect())
        .collect();
    let da: BTreeMap<String, Vec<Option<f64>>> = names
        .iter()
        .zip(&truth)
        .map(|(s, t)| (s.clone(), t.iter().map(|x| Some(x + params.human_sd * normal(&mut r))).collect()))
        .collect();
    let judgments = HumanJudgments::da(da, &dataset).unwrap();
    let metrics = params
        .metric_sd
        .iter()
        .enumerate()
        .map(|(m, sd)| {
            let scores = names
                .iter()
                .zip(&truth)
                .map(|(s, t)| (s.clone(), t.iter().map(|x| x + sd * normal(&mut r)).collect()))
                .collect();
            ExternalScores::new(format!("M{m}"), scores, &dataset).unwrap()
        })
        .collect();
    World {
        dataset,
        judgments,
        metrics,
    }
}

/// DA scores with system means `step` apart plus noise; also returns the
/// raw score vectors for building oracle metrics.
pub fn graded_da(systems: usize, segments: usize, step: f64, sd: f64, seed: u64) -> (Dataset, HumanJudgments, BTreeMap<String, Vec<f64>>) {
    let mut r = rng(seed);
    let dataset = placeholder_dataset("graded", segments, systems);
    let mut da = BTreeMap::new();
    let mut raw = BTreeMap::new();
    for (k, s) in dataset.system_names().into_iter().enumerate() {
        let v: Vec<f64> = (0..segments).map(|_| step * k as f64 + sd * normal(&mut r)).collect();
        da.insert(s.clone(), v.iter().map(|&x| Some(x)).collect());
        raw.insert(s, v);
    }
    let judgments = HumanJudgments::da(da, &dataset).unwrap();
    (dataset, judgments, raw)
}

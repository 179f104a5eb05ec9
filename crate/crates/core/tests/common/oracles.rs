//! Brute-force reference implementations used as test oracles.

use std::collections::{HashMap, VecDeque};

use mtvar_core::metrics::tokenize;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: [&str; 3] = ["a", "b", "c"];

/// All sequences over the 3-symbol alphabet with lengths in `lens`.
pub fn all_sequences(lens: std::ops::RangeInclusive<usize>) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in lens {
        for code in 0..3usize.pow(len as u32) {
            let mut c = code;
            let mut s = Vec::with_capacity(len);
            for _ in 0..len {
                s.push((c % 3) as u8);
                c /= 3;
            }
            out.push(s);
        }
    }
    out
}

pub fn words(s: &[u8]) -> Vec<&'static str> {
    s.iter().map(|&x| ALPHABET[x as usize]).collect()
}

/// Shortest edit scripts by breadth-first search over strings, one source at
/// a time. Lengths never need to exceed the longer of the two endpoints.
pub fn bfs_edit_distances(source: &[u8], max_len: usize) -> HashMap<Vec<u8>, usize> {
    let mut dist = HashMap::new();
    dist.insert(source.to_vec(), 0);
    let mut queue = VecDeque::from([source.to_vec()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let mut next = Vec::new();
        for i in 0..s.len() {
            let mut del = s.clone();
            del.remove(i);
            next.push(del);
            for a in 0..3u8 {
                if a != s[i] {
                    let mut sub = s.clone();
                    sub[i] = a;
                    next.push(sub);
                }
            }
        }
        if s.len() < max_len {
            for i in 0..=s.len() {
                for a in 0..3u8 {
                    let mut ins = s.clone();
                    ins.insert(i, a);
                    next.push(ins);
                }
            }
        }
        for n in next {
            if !dist.contains_key(&n) {
                dist.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

pub fn memo_edit(a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len() + b.len();
    }
    if let Some(&v) = memo.get(&(a.len(), b.len())) {
        return v;
    }
    let v = (memo_edit(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]))
        .min(memo_edit(&a[1..], b, memo) + 1)
        .min(memo_edit(a, &b[1..], memo) + 1);
    memo.insert((a.len(), b.len()), v);
    v
}

/// Minimal number of block moves (any block, any destination) from `hyp` to
/// every reachable arrangement.
pub fn shift_distances(hyp: &[u8]) -> HashMap<Vec<u8>, usize> {
    let mut dist = HashMap::new();
    dist.insert(hyp.to_vec(), 0);
    let mut queue = VecDeque::from([hyp.to_vec()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let n = s.len();
        for start in 0..n {
            for len in 1..=n - start {
                let block = &s[start..start + len];
                let rest: Vec<u8> = s[..start].iter().chain(&s[start + len..]).copied().collect();
                for dest in 0..=rest.len() {
                    let mut t = rest[..dest].to_vec();
                    t.extend_from_slice(block);
                    t.extend_from_slice(&rest[dest..]);
                    if !dist.contains_key(&t) {
                        dist.insert(t.clone(), d + 1);
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    dist
}

/// Reference PER: count bag-of-words matches by repeated removal.
pub fn per_oracle(hyp: &[String], reference: &[String]) -> f64 {
    let mut pool: Vec<&String> = reference.iter().collect();
    let mut correct = 0usize;
    for h in hyp {
        if let Some(pos) = pool.iter().position(|r| *r == h) {
            pool.swap_remove(pos);
            correct += 1;
        }
    }
    let extra = hyp.len().saturating_sub(reference.len());
    (reference.len() - correct + extra) as f64 / reference.len() as f64
}

/// Reference chrF: explicit n-gram lists and clipped matching by removal.
pub fn chrf_oracle(hyp: &str, reference: &str, char_order: usize, beta: f64, word_order: usize) -> f64 {
    fn grams<T: Clone + PartialEq>(seq: &[T], n: usize) -> Vec<Vec<T>> {
        if seq.len() < n {
            return Vec::new();
        }
        (0..=seq.len() - n).map(|i| seq[i..i + n].to_vec()).collect()
    }
    fn prf<T: Clone + PartialEq>(h: Vec<Vec<T>>, r: Vec<Vec<T>>) -> Option<(f64, f64)> {
        if h.is_empty() || r.is_empty() {
            return None;
        }
        let mut pool = r.clone();
        let mut m = 0;
        for g in &h {
            if let Some(p) = pool.iter().position(|x| x == g) {
                pool.remove(p);
                m += 1;
            }
        }
        Some((m as f64 / h.len() as f64, m as f64 / r.len() as f64))
    }
    let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hw: Vec<String> = hyp.split_whitespace().map(String::from).collect();
    let rw: Vec<String> = reference.split_whitespace().map(String::from).collect();
    let mut parts = Vec::new();
    for n in 1..=char_order {
        parts.extend(prf(grams(&hc, n), grams(&rc, n)));
    }
    for n in 1..=word_order {
        parts.extend(prf(grams(&hw, n), grams(&rw, n)));
    }
    if parts.is_empty() {
        return 0.0;
    }
    let p = parts.iter().map(|x| x.0).sum::<f64>() / parts.len() as f64;
    let r = parts.iter().map(|x| x.1).sum::<f64>() / parts.len() as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    (1.0 + beta * beta) * p * r / (beta * beta * p + r)
}

pub fn random_sentence(rng: &mut ChaCha8Rng, vocab: &[&str], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
}

pub const VOCAB: [&str; 12] = ["the", "cat", "sat", "on", "mat", "a", "dog", "ran", "hat", "at", "cab", "tac"];

/// Plain BLEU recount: n-gram lists with clipping by removal.
pub fn bleu_oracle(hyps: &[String], refs: &[String]) -> f64 {
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rf) in hyps.iter().zip(refs) {
        let (h, rf) = (tokenize(h), tokenize(rf));
        c += h.len();
        r += rf.len();
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let mut pool: Vec<&[String]> = if rf.len() >= n { rf.windows(n).collect() } else { Vec::new() };
            for g in h.windows(n) {
                totals[n - 1] += 1;
                if let Some(p) = pool.iter().position(|x| *x == g) {
                    pool.remove(p);
                    matches[n - 1] += 1;
                }
            }
        }
    }
    let mut logs = Vec::new();
    for n in 0..4 {
        if totals[n] == 0 {
            continue;
        }
        if matches[n] == 0 {
            return 0.0;
        }
        logs.push((matches[n] as f64 / totals[n] as f64).ln());
    }
    if logs.is_empty() {
        return 0.0;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Fewest shifts plus edits turning any arrangement in `arrangements` into `reference`.
pub fn min_shift_edit(arrangements: &HashMap<Vec<u8>, usize>, reference: &[u8]) -> usize {
    arrangements
        .iter()
        .map(|(arr, &d)| d + memo_edit(arr, reference, &mut HashMap::new()))
        .min()
        .unwrap()
}

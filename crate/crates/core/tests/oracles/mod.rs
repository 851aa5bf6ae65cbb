//! Brute-force reference implementations and fixture builders shared by
//! the integration tests (and the CLI acceptance binary).
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::{Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dupq_core::corpus::{Corpus, DuplicatePair, QuestionId, QuestionRecord};
use dupq_core::embed::{FieldVectors, QuestionEncoder};
use dupq_core::features::{FeatureMode, QuestionFeatures};
use dupq_core::ranking::{RankedEntry, RankedList};
use dupq_core::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- corpus

pub const TAG_POOL: [&str; 7] = ["boot", "grub2", "wifi", "nvidia", "apt", "unity", "kernel"];

pub fn record(id: QuestionId, hours: i64, tags: &[&str], answers: u32) -> QuestionRecord {
    QuestionRecord {
        id,
        title_raw: format!("question {id}"),
        body_raw: String::new(),
        title_tokens: vec![format!("t{id}")],
        body_tokens: vec![],
        tags: tags.iter().map(|t| t.to_string()).collect(),
        created_at: Utc.with_ymd_and_hms(2012, 1, 1, 0, 0, 0).unwrap() + Duration::hours(hours),
        answer_count: answers,
    }
}

/// `n` questions with 1–4 tags from a small pool, random posting times
/// (with some collisions) and ~20% unanswered.
pub fn random_corpus(n: usize, seed: u64) -> Corpus {
    let mut r = rng(seed);
    let records = (1..=n as QuestionId)
        .map(|id| {
            let k = r.random_range(1..=4);
            let tags: Vec<&str> = TAG_POOL.choose_multiple(&mut r, k).copied().collect();
            let hours = r.random_range(0..2000);
            let answers = if r.random_bool(0.2) { 0 } else { r.random_range(1..4) };
            record(id, hours, &tags, answers)
        })
        .collect();
    Corpus::new(records)
}

/// Deterministic pseudo-random field vectors keyed by question id.
pub struct HashEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl QuestionEncoder for HashEncoder {
    fn title_dim(&self) -> usize {
        self.dim
    }

    fn body_dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, record: &QuestionRecord) -> Result<FieldVectors> {
        let mut r = rng(self.seed ^ record.id.wrapping_mul(0x9e37_79b9));
        let mut v = || (0..self.dim).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        Ok(FieldVectors { title: v(), body: v() })
    }
}

pub fn hash_features(corpus: &Corpus, dim: usize, seed: u64) -> QuestionFeatures {
    QuestionFeatures::build(corpus.records(), &HashEncoder { dim, seed }, None, FeatureMode::Text).unwrap()
}

// ------------------------------------------------------------ candidates

pub fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn naive_jaccard(a: &[String], b: &[String]) -> f64 {
    let sa: HashSet<&String> = a.iter().collect();
    let sb: HashSet<&String> = b.iter().collect();
    let inter = sa.iter().filter(|t| sb.contains(*t)).count();
    let union = sa.len() + sb.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Scan every question and apply each filter independently.
pub fn brute_candidates(
    corpus: &Corpus,
    features: &QuestionFeatures,
    anchor: QuestionId,
    jaccard_min: f64,
    cosine_min: f64,
) -> BTreeSet<QuestionId> {
    let a = corpus.get(anchor).unwrap();
    let at = features.title(anchor).unwrap();
    corpus
        .records()
        .iter()
        .filter(|c| c.created_at < a.created_at)
        .filter(|c| c.tags.iter().any(|t| a.tags.contains(t)))
        .filter(|c| naive_jaccard(&a.tags, &c.tags) > jaccard_min)
        .filter(|c| c.answer_count >= 1)
        .filter(|c| naive_cosine(at, features.title(c.id).unwrap()) >= cosine_min)
        .map(|c| c.id)
        .collect()
}

// --------------------------------------------------------------- buckets

pub fn random_pairs(max_q: u64, n_pairs: usize, r: &mut ChaCha8Rng) -> Vec<DuplicatePair> {
    let t = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    (0..n_pairs)
        .map(|_| {
            let a = r.random_range(1..=max_q);
            let mut m = r.random_range(1..=max_q);
            if m == a {
                m = a % max_q + 1;
            }
            DuplicatePair { anchor: a.max(m), master: a.min(m), linked_at: t }
        })
        .collect()
}

/// Components by Floyd–Warshall reachability over the pair graph.
pub fn closure_components(pairs: &[DuplicatePair]) -> BTreeSet<BTreeSet<QuestionId>> {
    let ids: Vec<QuestionId> = pairs
        .iter()
        .flat_map(|p| [p.anchor, p.master])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = ids.len();
    let pos: HashMap<QuestionId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for p in pairs {
        let (a, b) = (pos[&p.anchor], pos[&p.master]);
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n)
        .map(|i| (0..n).filter(|&j| reach[i][j]).map(|j| ids[j]).collect())
        .collect()
}

// ------------------------------------------------------------------ BM25

pub const BM25_VOCAB: [&str; 12] = [
    "grub", "boot", "install", "wifi", "driver", "nvidia", "kernel", "update", "error", "usb", "sound", "login",
];

/// 20 documents of 3–12 tokens drawn from a 12-word vocabulary.
pub fn bm25_docs(seed: u64) -> Vec<Vec<String>> {
    let mut r = rng(seed);
    (0..20)
        .map(|_| {
            let len = r.random_range(3..=12);
            (0..len).map(|_| BM25_VOCAB.choose(&mut r).unwrap().to_string()).collect()
        })
        .collect()
}

pub fn count_df(docs: &[Vec<String>], term: &str) -> u32 {
    docs.iter().filter(|d| d.iter().any(|t| t == term)).count() as u32
}

pub fn count_tf(doc: &[String], term: &str) -> u32 {
    doc.iter().filter(|t| *t == term).count() as u32
}

/// Direct Okapi BM25 with the +1-smoothed IDF.
pub fn bm25_direct(docs: &[Vec<String>], query: &[&str], doc: usize, k1: f64, b: f64) -> f64 {
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let dl = docs[doc].len() as f64;
    query
        .iter()
        .map(|q| {
            let tf = count_tf(&docs[doc], q) as f64;
            let df = count_df(docs, q) as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avg))
        })
        .sum()
}

// --------------------------------------------------------------- ranking

/// Sort by score descending, then older, then smaller id — written as an
/// explicit selection sort to stay independent of the library.
pub fn sort_oracle(mut scored: Vec<(QuestionId, f64)>, corpus: &Corpus) -> Vec<QuestionId> {
    let better = |a: &(QuestionId, f64), b: &(QuestionId, f64)| {
        if a.1 != b.1 {
            return a.1 > b.1;
        }
        let (ca, cb) = (corpus.get(a.0).unwrap().created_at, corpus.get(b.0).unwrap().created_at);
        if ca != cb {
            return ca < cb;
        }
        a.0 < b.0
    };
    let mut out = Vec::with_capacity(scored.len());
    while !scored.is_empty() {
        let mut best = 0;
        for i in 1..scored.len() {
            if better(&scored[i], &scored[best]) {
                best = i;
            }
        }
        out.push(scored.remove(best).0);
    }
    out
}

// --------------------------------------------------------- finite diffs

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Central difference of `f` along coordinate `i` of `x`.
pub fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

// ------------------------------------------------------------ statistics

/// Rank = (#smaller) + (#equal + 1) / 2, then textbook Pearson.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let eq = v.iter().filter(|b| *b == a).count() as f64;
                less + (eq + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Eight points with ties in both coordinates.
pub fn tied_fixture(r: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let x = (0..8).map(|_| r.random_range(0..4) as f64).collect();
    let y = (0..8).map(|_| r.random_range(0..3) as f64 * 0.5).collect();
    (x, y)
}

// ------------------------------------------------------------------ tree

/// y = 0 for x < 0.5, 1 otherwise, plus N(0, σ²) noise (Box–Muller).
pub fn step_data(n: usize, sigma: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = r.random();
        let (u1, u2): (f64, f64) = (r.random::<f64>().max(1e-300), r.random());
        let noise = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        xs.push(x);
        ys.push(if x < 0.5 { 0.0 } else { 1.0 } + sigma * noise);
    }
    (xs, ys)
}

// --------------------------------------------------------------- metrics

/// Ten hand-built ranked lists with hand-computed MRR, RR@k and upper
/// bound. `None` marks an anchor whose gold duplicate was filtered out.
pub struct MetricFixture {
    pub ranks: Vec<Option<usize>>,
    pub mrr: f64,
    pub rr: BTreeMap<usize, f64>,
    pub upper: f64,
}

pub fn metric_fixture() -> MetricFixture {
    let ranks = vec![Some(1), Some(2), Some(4), None, Some(10), Some(11), Some(25), Some(1), Some(100), None];
    // 1 + 1/2 + 1/4 + 0 + 1/10 + 1/11 + 1/25 + 1 + 1/100 + 0
    let sum = 1.0 + 0.5 + 0.25 + 0.1 + 1.0 / 11.0 + 0.04 + 1.0 + 0.01;
    let rr = BTreeMap::from([
        (1, 0.2),
        (2, 0.3),
        (4, 0.4),
        (10, 0.5),
        (20, 0.6),
        (30, 0.7),
        (50, 0.7),
        (100, 0.8),
        (500, 0.8),
    ]);
    MetricFixture { ranks, mrr: sum / 10.0, rr, upper: 0.8 }
}

/// Ranked lists whose gold ranks are `ranks` (candidate ids 1..=len).
pub fn lists_with_ranks(ranks: &[Option<usize>], len: usize) -> Vec<RankedList> {
    ranks
        .iter()
        .enumerate()
        .map(|(i, r)| RankedList {
            anchor: 10_000 + i as QuestionId,
            entries: (1..=len as QuestionId)
                .map(|id| RankedEntry { id, score: -(id as f64) })
                .collect(),
            gold_rank: *r,
        })
        .collect()
}

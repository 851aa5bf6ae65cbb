//! Skip-gram with negative sampling, shared by the word2vec token encoder
//! and the node2vec tag embeddings.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::EmbeddingStore;
use crate::error::{Error, Result};

const UNIGRAM_POWER: f64 = 0.75;
const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.id(word).map(|i| self.counts[i])
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Count items and keep those seen at least `min_count` times, most
/// frequent first (ties alphabetical).
pub fn build_vocab<S: AsRef<str>>(sequences: &[Vec<S>], min_count: u64) -> Vocabulary {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for seq in sequences {
        for item in seq {
            *counts.entry(item.as_ref()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Vocabulary {
        counts: kept.iter().map(|&(_, c)| c).collect(),
        words,
        index,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// Single-threaded, bitwise reproducible under a seed.
    #[default]
    Deterministic,
    /// Lock-free parallel updates on the current rayon pool. Output varies
    /// from run to run.
    Hogwild,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgnsConfig {
    pub dimension: usize,
    /// Context radius on each side of the center item.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    /// Accepted for compatibility with other SGNS tools; has no effect.
    #[serde(default)]
    pub batch_words: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub mode: TrainingMode,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dimension: 64,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 3,
            batch_words: None,
            seed: 42,
            mode: TrainingMode::Deterministic,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dimension", self.dimension),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("min_count", self.min_count as usize),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("sgns {name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("sgns learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedSgns {
    pub store: EmbeddingStore,
    pub vocabulary: Vocabulary,
    /// Mean per-pair objective for each epoch.
    pub epoch_objective: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    // -softplus(-x)
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log σ(u·v) + Σ log σ(-u_neg·v)` for one center/context pair.
pub fn pair_objective(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(context, center))
        + negatives
            .iter()
            .map(|n| log_sigmoid(-dot(n, center)))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Gradient of [`pair_objective`] with respect to every vector involved.
pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let g_pos = 1.0 - sigmoid(dot(context, center));
    let mut g_center: Vec<f64> = context.iter().map(|u| g_pos * u).collect();
    let g_context = center.iter().map(|v| g_pos * v).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let g = -sigmoid(dot(n, center));
        for (gc, u) in g_center.iter_mut().zip(n.iter()) {
            *gc += g * u;
        }
        g_negs.push(center.iter().map(|v| g * v).collect());
    }
    PairGradient {
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

/// Shared access to a flat parameter matrix.
trait Weights {
    fn get(&self, i: usize) -> f64;
    fn add(&self, i: usize, delta: f64);
}

impl Weights for [Cell<f64>] {
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }
    fn add(&self, i: usize, delta: f64) {
        self[i].set(self[i].get() + delta);
    }
}

impl Weights for [AtomicU64] {
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }
    // Racy read-modify-write; lost updates are tolerated.
    fn add(&self, i: usize, delta: f64) {
        let v = f64::from_bits(self[i].load(Ordering::Relaxed)) + delta;
        self[i].store(v.to_bits(), Ordering::Relaxed);
    }
}

struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(UNIGRAM_POWER);
                acc
            })
            .collect();
        for c in &mut cumulative {
            *c /= acc;
        }
        Self { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// One gradient-ascent step on a center/context pair with sampled
/// negatives. Returns the pair objective before the update.
fn update_pair<W: Weights + ?Sized>(
    input: &W,
    output: &W,
    dim: usize,
    center: usize,
    targets: &[(usize, f64)],
    lr: f64,
    scratch: &mut [f64],
) -> f64 {
    scratch.iter_mut().for_each(|x| *x = 0.0);
    let cbase = center * dim;
    let mut objective = 0.0;
    for &(target, label) in targets {
        let tbase = target * dim;
        let f: f64 = (0..dim).map(|k| input.get(cbase + k) * output.get(tbase + k)).sum();
        objective += if label > 0.5 { log_sigmoid(f) } else { log_sigmoid(-f) };
        let g = (label - sigmoid(f)) * lr;
        for (k, s) in scratch.iter_mut().enumerate() {
            *s += g * output.get(tbase + k);
            output.add(tbase + k, g * input.get(cbase + k));
        }
    }
    for (k, s) in scratch.iter().enumerate() {
        input.add(cbase + k, *s);
    }
    objective
}

struct Schedule {
    initial: f64,
    total_steps: f64,
}

impl Schedule {
    fn rate(&self, done: f64) -> f64 {
        self.initial * (1.0 - done / self.total_steps).max(MIN_LR_FRACTION)
    }
}

#[allow(clippy::too_many_arguments)]
fn train_sequence<W: Weights + ?Sized, R: Rng>(
    input: &W,
    output: &W,
    dim: usize,
    seq: &[usize],
    cfg: &SgnsConfig,
    table: &NegativeTable,
    lr: f64,
    rng: &mut R,
    targets: &mut Vec<(usize, f64)>,
    scratch: &mut [f64],
) -> (f64, usize) {
    let mut objective = 0.0;
    let mut pairs = 0;
    for (i, &center) in seq.iter().enumerate() {
        let reach = rng.random_range(1..=cfg.window);
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(seq.len() - 1);
        for (j, &context) in seq.iter().enumerate().take(hi + 1).skip(lo) {
            if j == i {
                continue;
            }
            targets.clear();
            targets.push((context, 1.0));
            for _ in 0..cfg.negatives {
                let neg = table.sample(rng);
                if neg != context {
                    targets.push((neg, 0.0));
                }
            }
            objective += update_pair(input, output, dim, center, targets, lr, scratch);
            pairs += 1;
        }
    }
    (objective, pairs)
}

/// Train center-item vectors. Items below `min_count` are ignored; the
/// learning rate decays linearly to 1e-4 of its initial value.
pub fn train_sgns<S: AsRef<str>>(sequences: &[Vec<S>], cfg: &SgnsConfig) -> Result<TrainedSgns> {
    cfg.validate()?;
    let vocabulary = build_vocab(sequences, cfg.min_count);
    if vocabulary.is_empty() {
        return Err(Error::InvalidInput(
            "no items reach min_count; vocabulary is empty".into(),
        ));
    }
    let encoded: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| s.iter().filter_map(|w| vocabulary.id(w.as_ref())).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();
    let tokens_per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let dim = cfg.dimension;
    let table = NegativeTable::new(&vocabulary.counts);
    let schedule = Schedule {
        initial: cfg.learning_rate,
        total_steps: (tokens_per_epoch * cfg.epochs).max(1) as f64,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = vocabulary.len() * dim;
    let mut input: Vec<f64> = (0..n)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; n];
    let mut epoch_objective = Vec::with_capacity(cfg.epochs);

    match cfg.mode {
        TrainingMode::Deterministic => {
            let inp = Cell::from_mut(&mut input[..]).as_slice_of_cells();
            let out = Cell::from_mut(&mut output[..]).as_slice_of_cells();
            let mut targets = Vec::with_capacity(cfg.negatives + 1);
            let mut scratch = vec![0.0; dim];
            let mut done = 0usize;
            for _ in 0..cfg.epochs {
                let (mut total, mut pairs) = (0.0, 0usize);
                for seq in &encoded {
                    let lr = schedule.rate(done as f64);
                    let (o, p) = train_sequence(
                        inp, out, dim, seq, cfg, &table, lr, &mut rng, &mut targets, &mut scratch,
                    );
                    total += o;
                    pairs += p;
                    done += seq.len();
                }
                epoch_objective.push(total / pairs.max(1) as f64);
            }
        }
        TrainingMode::Hogwild => {
            let inp: Vec<AtomicU64> = input.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
            let out: Vec<AtomicU64> = output.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
            let chunk = encoded.len().div_ceil(rayon::current_num_threads() * 4).max(1);
            let mut offsets = Vec::new();
            let mut acc = 0usize;
            for c in encoded.chunks(chunk) {
                offsets.push(acc);
                acc += c.iter().map(Vec::len).sum::<usize>();
            }
            for epoch in 0..cfg.epochs {
                let (total, pairs) = encoded
                    .par_chunks(chunk)
                    .enumerate()
                    .map(|(ci, seqs)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(
                            cfg.seed ^ ((epoch as u64) << 32) ^ (ci as u64).wrapping_mul(0x9e37_79b9),
                        );
                        let mut targets = Vec::with_capacity(cfg.negatives + 1);
                        let mut scratch = vec![0.0; dim];
                        let mut done = epoch * tokens_per_epoch + offsets[ci];
                        let (mut total, mut pairs) = (0.0, 0usize);
                        for seq in seqs {
                            let lr = schedule.rate(done as f64);
                            let (o, p) = train_sequence(
                                &inp[..], &out[..], dim, seq, cfg, &table, lr, &mut rng,
                                &mut targets, &mut scratch,
                            );
                            total += o;
                            pairs += p;
                            done += seq.len();
                        }
                        (total, pairs)
                    })
                    .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
                epoch_objective.push(total / pairs.max(1) as f64);
            }
            input = inp.iter().map(|a| f64::from_bits(a.load(Ordering::Relaxed))).collect();
        }
    }

    let mut store = EmbeddingStore::new(dim)?;
    for (i, word) in vocabulary.words.iter().enumerate() {
        store.insert(word.clone(), &input[i * dim..(i + 1) * dim])?;
    }
    Ok(TrainedSgns {
        store,
        vocabulary,
        epoch_objective,
    })
}

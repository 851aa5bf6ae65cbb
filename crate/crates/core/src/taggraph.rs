//! Tag co-occurrence network and node2vec-style biased random walks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::QuestionRecord;
use crate::error::{Error, Result};

/// Returned by [`top_tag`] when none of a question's tags were seen in
/// training.
pub const UNKNOWN_TAG: &str = "unknown-tag";

pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.005;

/// Undirected tag graph with Jaccard edge weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagGraph {
    tags: Vec<String>,
    index: HashMap<String, usize>,
    /// Neighbor lists sorted by neighbor index.
    adjacency: Vec<Vec<(usize, f64)>>,
    question_counts: Vec<u64>,
}

impl TagGraph {
    fn from_parts(
        tags: Vec<String>,
        question_counts: Vec<u64>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let index = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut adjacency = vec![Vec::new(); tags.len()];
        for (a, b, w) in edges {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        Self {
            tags,
            index,
            adjacency,
            question_counts,
        }
    }

    pub fn node_count(&self) -> usize {
        self.tags.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn node(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag(&self, node: usize) -> &str {
        &self.tags[node]
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        let list = &self.adjacency[a];
        list.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn weight_by_tag(&self, a: &str, b: &str) -> Option<f64> {
        self.weight(self.node(a)?, self.node(b)?)
    }

    /// Number of training questions carrying `tag` (0 if unseen).
    pub fn question_count(&self, tag: &str) -> u64 {
        self.node(tag).map_or(0, |i| self.question_counts[i])
    }

    /// Iterate edges once each as `(a, b, weight)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, w)| (a, b, w))
        })
    }

    /// Write `tag_a<TAB>tag_b<TAB>weight` lines plus a `tag<TAB>count`
    /// sidecar.
    pub fn save(&self, edge_path: &Path, counts_path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(edge_path).map_err(|e| Error::io(edge_path, e))?);
        for (a, b, weight) in self.edges() {
            writeln!(w, "{}\t{}\t{}", self.tags[a], self.tags[b], weight)
                .map_err(|e| Error::io(edge_path, e))?;
        }
        w.flush().map_err(|e| Error::io(edge_path, e))?;

        let mut w =
            BufWriter::new(File::create(counts_path).map_err(|e| Error::io(counts_path, e))?);
        for (tag, count) in self.tags.iter().zip(&self.question_counts) {
            writeln!(w, "{tag}\t{count}").map_err(|e| Error::io(counts_path, e))?;
        }
        w.flush().map_err(|e| Error::io(counts_path, e))
    }

    pub fn load(edge_path: &Path, counts_path: &Path) -> Result<Self> {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let file = File::open(counts_path).map_err(|e| Error::io(counts_path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(counts_path, e))?;
            if line.is_empty() {
                continue;
            }
            let (tag, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(i + 1, "expected tag<TAB>count"))?;
            let count = count
                .parse()
                .map_err(|_| Error::format(i + 1, format!("bad count {count:?}")))?;
            counts.insert(tag.to_string(), count);
        }
        let (tags, question_counts): (Vec<_>, Vec<_>) = counts.into_iter().unzip();
        let index: HashMap<&str, usize> =
            tags.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

        let mut edges = Vec::new();
        let file = File::open(edge_path).map_err(|e| Error::io(edge_path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(edge_path, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [a, b, w] = fields[..] else {
                return Err(Error::format(i + 1, "expected tag_a<TAB>tag_b<TAB>weight"));
            };
            let lookup = |t: &str| {
                index
                    .get(t)
                    .copied()
                    .ok_or_else(|| Error::format(i + 1, format!("tag {t:?} missing from counts")))
            };
            let weight: f64 = w
                .parse()
                .map_err(|_| Error::format(i + 1, format!("bad weight {w:?}")))?;
            let (a, b) = (lookup(a)?, lookup(b)?);
            if a == b {
                return Err(Error::format(i + 1, "self edge"));
            }
            edges.push((a.min(b), a.max(b), weight));
        }
        Ok(Self::from_parts(tags, question_counts, edges))
    }
}

/// Build the co-occurrence graph from `records`, keeping edges whose
/// Jaccard weight `|Q(a) ∩ Q(b)| / |Q(a) ∪ Q(b)|` exceeds `threshold`.
pub fn build_graph<'a, I>(records: I, threshold: f64) -> TagGraph
where
    I: IntoIterator<Item = &'a QuestionRecord>,
{
    let mut per_question: Vec<BTreeSet<&str>> = Vec::new();
    let mut all_tags: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        let set: BTreeSet<&str> = r.tags.iter().map(String::as_str).collect();
        all_tags.extend(set.iter().copied());
        per_question.push(set);
    }
    let tags: Vec<String> = all_tags.iter().map(|t| t.to_string()).collect();
    let index: HashMap<&str, usize> = all_tags.iter().enumerate().map(|(i, &t)| (t, i)).collect();

    let mut counts = vec![0u64; tags.len()];
    let mut together: HashMap<(usize, usize), u64> = HashMap::new();
    for set in &per_question {
        let ids: Vec<usize> = set.iter().map(|t| index[t]).collect();
        for (i, &a) in ids.iter().enumerate() {
            counts[a] += 1;
            for &b in &ids[i + 1..] {
                *together.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
    }

    let mut edges: Vec<(usize, usize, f64)> = together
        .into_iter()
        .filter_map(|((a, b), both)| {
            let union = counts[a] + counts[b] - both;
            let w = both as f64 / union as f64;
            (w > threshold).then_some((a, b, w))
        })
        .collect();
    edges.sort_by_key(|&(a, b, _)| (a, b));
    TagGraph::from_parts(tags, counts, edges)
}

/// Parameters of the second-order walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            p: 1.3,
            q: 0.8,
            walks_per_node: 5,
            walk_length: 80,
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0) {
            return Err(Error::Config("walk p and q must be positive".into()));
        }
        if self.walk_length < 1 {
            return Err(Error::Config("walk length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Unnormalized transition weights out of `current`, given the node the
/// walk arrived from. The first step of a walk has no `previous` and uses
/// edge weights directly.
pub fn transition_weights(
    graph: &TagGraph,
    previous: Option<usize>,
    current: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    graph
        .neighbors(current)
        .iter()
        .map(|&(next, w)| {
            let bias = match previous {
                None => 1.0,
                Some(prev) if next == prev => 1.0 / p,
                Some(prev) if graph.weight(prev, next).is_some() => 1.0,
                Some(_) => 1.0 / q,
            };
            (next, w * bias)
        })
        .collect()
}

fn sample_weighted<R: Rng>(rng: &mut R, weights: &[(usize, f64)]) -> usize {
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    let mut target = rng.random::<f64>() * total;
    for &(node, w) in weights {
        if target < w {
            return node;
        }
        target -= w;
    }
    weights[weights.len() - 1].0
}

/// Derive an independent stream seed for one walk.
fn walk_seed(seed: u64, node: usize, walk: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(seed) ^ node as u64) ^ walk as u64)
}

fn single_walk(graph: &TagGraph, start: usize, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let current = walk[walk.len() - 1];
        let previous = (walk.len() >= 2).then(|| walk[walk.len() - 2]);
        let weights = transition_weights(graph, previous, current, cfg.p, cfg.q);
        if weights.is_empty() {
            break;
        }
        walk.push(sample_weighted(rng, &weights));
    }
    walk
}

/// Walks as node indices, ordered by walk round then start node. Each walk
/// draws from its own random stream, so output does not depend on the
/// number of worker threads.
pub fn generate_walk_indices(graph: &TagGraph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    if graph.is_empty() {
        return Err(Error::InvalidInput("cannot walk an empty graph".into()));
    }
    let n = graph.node_count();
    Ok((0..cfg.walks_per_node * n)
        .into_par_iter()
        .map(|job| {
            let (round, node) = (job / n, job % n);
            let mut rng = ChaCha8Rng::seed_from_u64(walk_seed(cfg.seed, node, round));
            single_walk(graph, node, cfg, &mut rng)
        })
        .collect())
}

pub fn generate_walks(graph: &TagGraph, cfg: &WalkConfig) -> Result<Vec<Vec<String>>> {
    Ok(generate_walk_indices(graph, cfg)?
        .into_iter()
        .map(|walk| walk.into_iter().map(|i| graph.tag(i).to_string()).collect())
        .collect())
}

/// The record's most frequent tag in the training data; ties go to the
/// lexicographically smaller tag.
pub fn top_tag<'a>(record: &'a QuestionRecord, graph: &TagGraph) -> &'a str {
    record
        .tags
        .iter()
        .map(|t| (graph.question_count(t), t))
        .filter(|&(c, _)| c > 0)
        .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
        .map_or(UNKNOWN_TAG, |(_, t)| t.as_str())
}

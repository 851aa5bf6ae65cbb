//! Duplicate clusters ("buckets") over training pairs.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{DuplicatePair, QuestionId};
use crate::features::{cosine, QuestionFeatures};

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub id: usize,
    /// Sorted ascending.
    pub members: Vec<QuestionId>,
    /// Mean of the members' encoder title ⊕ body vectors.
    pub centroid: Vec<f64>,
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Connected components of the pair graph, each sorted, ordered by their
/// smallest member.
pub fn duplicate_clusters(pairs: &[DuplicatePair]) -> Vec<Vec<QuestionId>> {
    let mut ids: Vec<QuestionId> = pairs.iter().flat_map(|p| [p.anchor, p.master]).collect();
    ids.sort_unstable();
    ids.dedup();
    let slot: HashMap<QuestionId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut sets = DisjointSet::new(ids.len());
    for p in pairs {
        sets.union(slot[&p.anchor], slot[&p.master]);
    }
    let mut groups: BTreeMap<usize, Vec<QuestionId>> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        groups.entry(sets.find(i)).or_default().push(id);
    }
    let mut clusters: Vec<Vec<QuestionId>> = groups.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Buckets with centroids over the encoder's base vectors. Members without
/// vectors are kept but do not contribute to the centroid.
pub fn build_buckets(pairs: &[DuplicatePair], features: &QuestionFeatures) -> Vec<Bucket> {
    duplicate_clusters(pairs)
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let mut centroid = vec![0.0; features.base_dim()];
            let mut n = 0usize;
            for &m in &members {
                if let Some(v) = features.base(m) {
                    for (c, x) in centroid.iter_mut().zip(v) {
                        *c += x;
                    }
                    n += 1;
                }
            }
            if n > 0 {
                centroid.iter_mut().for_each(|c| *c /= n as f64);
            }
            Bucket {
                id,
                members,
                centroid,
            }
        })
        .collect()
}

/// Symmetric bucket-to-bucket cosine similarity, 1 on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

pub fn bucket_similarity(buckets: &[Bucket]) -> SimilarityMatrix {
    let n = buckets.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let s = cosine(&buckets[i].centroid, &buckets[j].centroid);
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    SimilarityMatrix { n, values }
}

//! CART regression tree with squared-error splits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::read_checkpoint;
use crate::error::{Error, Result};
use crate::features::FeatureMode;

const CHECKPOINT_MAGIC: &str = "regression-tree";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 7,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
    pub mode: FeatureMode,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn mean(idx: &[usize], y: &[f64]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

fn best_split_for(feature: usize, idx: &[usize], x: &[&[f64]], y: &[f64]) -> Option<BestSplit> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
    let n = order.len() as f64;
    let total: f64 = order.iter().map(|&i| y[i]).sum();
    let mut left = 0.0;
    let mut best: Option<BestSplit> = None;
    for k in 0..order.len() - 1 {
        left += y[order[k]];
        let (a, b) = (x[order[k]][feature], x[order[k + 1]][feature]);
        if a == b {
            continue;
        }
        let nl = (k + 1) as f64;
        let nr = n - nl;
        let right = total - left;
        // SSE reduction = nl*ml^2 + nr*mr^2 - n*m^2.
        let gain = left * left / nl + right * right / nr - total * total / n;
        if best.as_ref().is_none_or(|s| gain > s.gain) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some(BestSplit { feature, threshold, gain });
        }
    }
    best
}

impl RegressionTree {
    pub fn fit(x: &[&[f64]], y: &[f64], params: TreeParams, mode: FeatureMode) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput("tree inputs differ in length".into()));
        }
        if x.len() < params.min_samples_split.max(1) {
            return Err(Error::InvalidInput(format!(
                "need at least {} samples to fit a tree",
                params.min_samples_split.max(1)
            )));
        }
        let n_features = x[0].len();
        if x.iter().any(|r| r.len() != n_features) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        let mut tree = Self { nodes: vec![], n_features, mode };
        let all: Vec<usize> = (0..x.len()).collect();
        tree.grow(all, 0, x, y, params);
        Ok(tree)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, x: &[&[f64]], y: &[f64], params: TreeParams) -> usize {
        let at = self.nodes.len();
        let value = mean(&idx, y);
        self.nodes.push(Node::Leaf { value });
        let constant = idx.iter().all(|&i| y[i] == y[idx[0]]);
        if depth >= params.max_depth || idx.len() < params.min_samples_split || constant {
            return at;
        }
        let sse: f64 = idx.iter().map(|&i| (y[i] - value).powi(2)).sum();
        let best = (0..self.n_features)
            .into_par_iter()
            .filter_map(|f| best_split_for(f, &idx, x, y))
            .reduce_with(|a, b| {
                if b.gain > a.gain || (b.gain == a.gain && b.feature < a.feature) {
                    b
                } else {
                    a
                }
            });
        let Some(best) = best.filter(|b| b.gain > 1e-12 * sse.max(1e-300)) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][best.feature] <= best.threshold);
        if l.is_empty() || r.is_empty() {
            return at;
        }
        let left = self.grow(l, depth + 1, x, y, params);
        let right = self.grow(r, depth + 1, x, y, params);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, actual: x.len() });
        }
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return Ok(*value),
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Index of the leaf `x` lands in.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut at = 0;
        while let Node::Split { feature, threshold, left, right } = &self.nodes[at] {
            at = if x[*feature] <= *threshold { *left } else { *right };
        }
        at
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Preorder, one node per line: `split <feature> <threshold>` or
    /// `leaf <value>`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "{CHECKPOINT_MAGIC} n_features={} nodes={} feature_mode={}",
            self.n_features,
            self.nodes.len(),
            self.mode
        )
        .map_err(io)?;
        let mut stack = vec![0];
        while let Some(at) = stack.pop() {
            match &self.nodes[at] {
                Node::Leaf { value } => writeln!(w, "leaf {value}").map_err(io)?,
                Node::Split { feature, threshold, left, right } => {
                    writeln!(w, "split {feature} {threshold}").map_err(io)?;
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, lines) = read_checkpoint(path, CHECKPOINT_MAGIC)?;
        let n_features: usize = header.num("n_features")?;
        let mode: FeatureMode = header.get("feature_mode")?.parse()?;
        let mut lines = lines.into_iter();
        let mut nodes = Vec::new();
        fn read(
            lines: &mut std::vec::IntoIter<(usize, String)>,
            nodes: &mut Vec<Node>,
            n_features: usize,
        ) -> Result<usize> {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, "tree ended early"))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let at = nodes.len();
            let bad = || Error::format(lineno, format!("bad tree node {line:?}"));
            match parts.as_slice() {
                ["leaf", v] => {
                    nodes.push(Node::Leaf { value: v.parse().map_err(|_| bad())? });
                }
                ["split", f, t] => {
                    let feature: usize = f.parse().map_err(|_| bad())?;
                    if feature >= n_features {
                        return Err(bad());
                    }
                    let threshold: f64 = t.parse().map_err(|_| bad())?;
                    nodes.push(Node::Leaf { value: 0.0 });
                    let left = read(lines, nodes, n_features)?;
                    let right = read(lines, nodes, n_features)?;
                    nodes[at] = Node::Split { feature, threshold, left, right };
                }
                _ => return Err(bad()),
            }
            Ok(at)
        }
        read(&mut lines, &mut nodes, n_features)?;
        if let Some((lineno, _)) = lines.next() {
            return Err(Error::format(lineno, "trailing tree nodes"));
        }
        Ok(Self { nodes, n_features, mode })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn constant_targets_single_leaf() {
        let x = rows(&[1.0, 2.0, 3.0]);
        let xr: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let t = RegressionTree::fit(&xr, &[4.0; 3], TreeParams::default(), FeatureMode::Text).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[10.0]).unwrap(), 4.0);
    }

    #[test]
    fn perfect_step_depth_one() {
        let x = rows(&[1.0, 2.0, 3.0, 4.0]);
        let xr: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let y = [0.0, 0.0, 5.0, 5.0];
        let t = RegressionTree::fit(&xr, &y, TreeParams::default(), FeatureMode::Text).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.nodes()[0], Node::Split { feature: 0, threshold: 2.5, left: 1, right: 2 });
        for (xi, yi) in x.iter().zip(y) {
            assert_eq!(t.predict(xi).unwrap(), yi);
        }
    }

    #[test]
    fn too_few_samples() {
        let x = rows(&[1.0]);
        let xr: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        assert!(RegressionTree::fit(&xr, &[1.0], TreeParams::default(), FeatureMode::Text).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 11) as f64]).collect();
        let xr: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 13) % 17) as f64 * 0.3).collect();
        let t = RegressionTree::fit(&xr, &y, TreeParams { max_depth: 4, min_samples_split: 2 }, FeatureMode::TextNetwork)
            .unwrap();
        assert!(t.depth() <= 4);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tree.ckpt");
        t.save(&p).unwrap();
        let back = RegressionTree::load(&p).unwrap();
        for r in &x {
            assert_eq!(back.predict(r).unwrap(), t.predict(r).unwrap());
        }
        assert_eq!(back.depth(), t.depth());
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankedList;

pub const REPORT_KS: [usize; 6] = [10, 20, 30, 50, 100, 500];

/// Mean reciprocal rank; anchors without the gold duplicate count as 0.
pub fn mrr(gold_ranks: &[Option<usize>]) -> Result<f64> {
    if gold_ranks.is_empty() {
        return Err(Error::InvalidInput("MRR of zero anchors".into()));
    }
    let sum: f64 = gold_ranks
        .iter()
        .map(|r| r.map_or(0.0, |r| 1.0 / r as f64))
        .sum();
    Ok(sum / gold_ranks.len() as f64)
}

/// Fraction of anchors whose gold duplicate is ranked within the top `k`.
pub fn recall_at(gold_ranks: &[Option<usize>], k: usize) -> f64 {
    if gold_ranks.is_empty() {
        return 0.0;
    }
    let hits = gold_ranks
        .iter()
        .filter(|r| matches!(r, Some(r) if *r <= k))
        .count();
    hits as f64 / gold_ranks.len() as f64
}

/// Fraction of anchors whose gold duplicate made it into the candidate set.
pub fn upper_bound(gold_present: &[bool]) -> f64 {
    if gold_present.is_empty() {
        return 0.0;
    }
    gold_present.iter().filter(|&&p| p).count() as f64 / gold_present.len() as f64
}

pub fn rmse(gold: &[f64], predicted: &[f64]) -> Result<f64> {
    if gold.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "RMSE length mismatch: {} gold vs {} predicted",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("RMSE of empty vectors".into()));
    }
    let mse = gold
        .iter()
        .zip(predicted)
        .map(|(g, p)| (g - p).powi(2))
        .sum::<f64>()
        / gold.len() as f64;
    Ok(mse.sqrt())
}

pub fn mae(gold: &[f64], predicted: &[f64]) -> Result<f64> {
    if gold.len() != predicted.len() || gold.is_empty() {
        return Err(Error::InvalidInput("MAE needs equal non-empty vectors".into()));
    }
    Ok(gold
        .iter()
        .zip(predicted)
        .map(|(g, p)| (g - p).abs())
        .sum::<f64>()
        / gold.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub anchors: usize,
    pub mrr: f64,
    pub rr_at: BTreeMap<usize, f64>,
    pub upper_bound: f64,
    pub mean_candidates: f64,
    /// Expected MRR of a uniformly random order of each candidate set.
    pub random_mrr: f64,
}

impl RetrievalReport {
    pub fn from_ranked(lists: &[RankedList]) -> Result<Self> {
        let ranks: Vec<Option<usize>> = lists.iter().map(|l| l.gold_rank).collect();
        let present: Vec<bool> = ranks.iter().map(Option::is_some).collect();
        let rr_at = REPORT_KS.iter().map(|&k| (k, recall_at(&ranks, k))).collect();
        let n = lists.len().max(1) as f64;
        Ok(Self {
            anchors: lists.len(),
            mrr: mrr(&ranks)?,
            rr_at,
            upper_bound: upper_bound(&present),
            mean_candidates: lists.iter().map(|l| l.len() as f64).sum::<f64>() / n,
            random_mrr: lists
                .iter()
                .map(|l| if l.gold_rank.is_some() { random_order_mrr(l.len()) } else { 0.0 })
                .sum::<f64>()
                / n,
        })
    }

    /// Layout: one metric per row, percentages.
    pub fn to_table(&self, label: &str) -> String {
        let mut out = format!("{label}\n");
        out.push_str(&format!("  anchors          {}\n", self.anchors));
        out.push_str(&format!("  mean candidates  {:.1}\n", self.mean_candidates));
        out.push_str(&format!("  MRR              {:.3}%\n", 100.0 * self.mrr));
        for (k, v) in &self.rr_at {
            out.push_str(&format!("  RR@{k:<13} {:.3}%\n", 100.0 * v));
        }
        out.push_str(&format!("  upper bound      {:.3}%\n", 100.0 * self.upper_bound));
        out.push_str(&format!("  random MRR       {:.3}%\n", 100.0 * self.random_mrr));
        out
    }
}

/// Expected reciprocal rank of a single relevant item placed uniformly at
/// random among `n`: H(n) / n.
pub fn random_order_mrr(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (1..=n).map(|k| 1.0 / k as f64).sum::<f64>() / n as f64
}

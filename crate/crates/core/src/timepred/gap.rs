//! Confirmation-time targets, per-pair samples and the chronological split.

use chrono::{DateTime, TimeZone, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DuplicatePair};
use crate::error::{Error, Result};
use crate::features::QuestionFeatures;

pub const DEFAULT_GAP_FLOOR_HOURS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Raw hours between anchor creation and the link, before clamping.
    pub hours: f64,
    /// `log10(max(hours, floor))`.
    pub target: f64,
    pub clamped: bool,
}

pub fn gap_from_times(anchor_created: DateTime<Utc>, linked_at: DateTime<Utc>, floor_hours: f64) -> Gap {
    let hours = (linked_at - anchor_created).num_seconds() as f64 / 3600.0;
    let clamped = hours < floor_hours;
    Gap {
        hours,
        target: hours.max(floor_hours).log10(),
        clamped,
    }
}

pub fn compute_gap(pair: &DuplicatePair, corpus: &Corpus, floor_hours: f64) -> Result<Gap> {
    let anchor = corpus.get(pair.anchor).ok_or(Error::UnknownDocument(pair.anchor))?;
    Ok(gap_from_times(anchor.created_at, pair.linked_at, floor_hours))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGapSample {
    pub pair: DuplicatePair,
    /// Anchor features ⊕ master features.
    pub features: Vec<f64>,
    pub target: f64,
    pub clamped: bool,
}

/// One sample per pair, in input order.
pub fn build_samples(
    pairs: &[DuplicatePair],
    corpus: &Corpus,
    features: &QuestionFeatures,
    floor_hours: f64,
) -> Result<Vec<TimeGapSample>> {
    pairs
        .par_iter()
        .map(|p| {
            let gap = compute_gap(p, corpus, floor_hours)?;
            let a = features.input(p.anchor).ok_or(Error::UnknownDocument(p.anchor))?;
            let m = features.input(p.master).ok_or(Error::UnknownDocument(p.master))?;
            Ok(TimeGapSample {
                pair: *p,
                features: a.iter().chain(m).copied().collect(),
                target: gap.target,
                clamped: gap.clamped,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSplit {
    pub train: Vec<DuplicatePair>,
    pub validation: Vec<DuplicatePair>,
    pub test: Vec<DuplicatePair>,
}

pub fn default_time_cutoff() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

/// Pairs whose anchor was posted before `cutoff` form the training pool,
/// the chronologically latest `validation_fraction` of which is held out;
/// the rest are test pairs.
pub fn split_time_pairs(
    pairs: &[DuplicatePair],
    corpus: &Corpus,
    cutoff: DateTime<Utc>,
    validation_fraction: f64,
) -> Result<TimeSplit> {
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::Config(format!(
            "validation fraction {validation_fraction} must be in [0, 1)"
        )));
    }
    let mut keyed = pairs
        .iter()
        .map(|p| {
            let r = corpus.get(p.anchor).ok_or(Error::UnknownDocument(p.anchor))?;
            Ok((r.created_at, *p))
        })
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.anchor.cmp(&b.1.anchor))
            .then(a.1.master.cmp(&b.1.master))
    });
    let (pool, test): (Vec<_>, Vec<_>) = keyed.into_iter().partition(|(t, _)| *t < cutoff);
    let n_val = (pool.len() as f64 * validation_fraction).round() as usize;
    let n_train = pool.len() - n_val;
    let mut pool: Vec<DuplicatePair> = pool.into_iter().map(|(_, p)| p).collect();
    let validation = pool.split_off(n_train);
    Ok(TimeSplit {
        train: pool,
        validation,
        test: test.into_iter().map(|(_, p)| p).collect(),
    })
}

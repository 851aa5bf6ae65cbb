//! Inference: project anchor and candidates through the head, then sort.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::candidates::EvalAnchor;
use super::head::{pnorm_distance, SiameseHead};
use crate::corpus::{Corpus, QuestionId};
use crate::error::{Error, Result};
use crate::features::{cosine, QuestionFeatures};
use crate::ranking::{RankedEntry, RankedList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreFunction {
    /// `-d(a, c)` with the head's norm degree.
    #[default]
    NegDistance,
    Cosine,
}

impl ScoreFunction {
    pub fn score(self, anchor: &[f64], candidate: &[f64], norm_degree: f64) -> f64 {
        match self {
            ScoreFunction::NegDistance => -pnorm_distance(anchor, candidate, norm_degree),
            ScoreFunction::Cosine => cosine(anchor, candidate),
        }
    }
}

pub type Projections = HashMap<QuestionId, Vec<f64>>;

/// Head outputs for every listed id, computed in parallel.
pub fn project_all(head: &SiameseHead, features: &QuestionFeatures, ids: &[QuestionId]) -> Result<Projections> {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.par_iter()
        .map(|&id| {
            let x = features.input(id).ok_or(Error::UnknownDocument(id))?;
            Ok((id, head.forward(x)?))
        })
        .collect()
}

/// Every question id an evaluation run needs projected.
pub fn ids_needed(anchors: &[EvalAnchor]) -> Vec<QuestionId> {
    let mut ids: Vec<QuestionId> = anchors
        .iter()
        .flat_map(|a| std::iter::once(a.set.anchor).chain(a.set.candidates.iter().map(|c| c.id)))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

pub fn rank_projected(
    anchor: &EvalAnchor,
    anchor_vec: &[f64],
    projections: &Projections,
    score: ScoreFunction,
    norm_degree: f64,
    corpus: &Corpus,
) -> Result<RankedList> {
    let scored = anchor
        .set
        .candidates
        .iter()
        .map(|c| {
            let v = projections.get(&c.id).ok_or(Error::UnknownDocument(c.id))?;
            Ok(RankedEntry {
                id: c.id,
                score: score.score(anchor_vec, v, norm_degree),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedList::from_scores(anchor.set.anchor, scored, corpus, &anchor.gold))
}

/// Rank every anchor's candidates; output order follows `anchors`.
pub fn rank_candidates(
    head: &SiameseHead,
    features: &QuestionFeatures,
    anchors: &[EvalAnchor],
    score: ScoreFunction,
    corpus: &Corpus,
) -> Result<Vec<RankedList>> {
    let projections = project_all(head, features, &ids_needed(anchors))?;
    anchors
        .par_iter()
        .map(|a| {
            let v = &projections[&a.set.anchor];
            rank_projected(a, v, &projections, score, head.norm_degree, corpus)
        })
        .collect()
}

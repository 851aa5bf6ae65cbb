//! Mini-batch triplet training of the Siamese head.

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::candidates::EvalAnchor;
use super::head::SiameseHead;
use super::negatives::{NegativeChoice, NegativeSampler};
use super::rank::{rank_candidates, ScoreFunction};
use crate::corpus::{Corpus, DuplicatePair, QuestionId};
use crate::error::{Error, Result};
use crate::eval::mrr;
use crate::features::QuestionFeatures;
use crate::optim::{Optimizer, OptimizerKind};

/// Triplets per gradient chunk; fixed so results do not depend on the
/// thread count.
const GRAD_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadHyper {
    pub out_dim: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub norm_degree: f64,
    pub optimizer: OptimizerKind,
    pub score: ScoreFunction,
    pub seed: u64,
}

impl Default for HeadHyper {
    fn default() -> Self {
        Self {
            out_dim: 512,
            learning_rate: 1e-3,
            epsilon: 1e-8,
            epochs: 40,
            batch_size: 32,
            margin: 1.0,
            norm_degree: 2.0,
            optimizer: OptimizerKind::Adam,
            score: ScoreFunction::NegDistance,
            seed: 42,
        }
    }
}

impl HeadHyper {
    pub fn validate(&self) -> Result<()> {
        if self.out_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("out_dim, epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.epsilon > 0.0) {
            return Err(Error::Config("learning rate and epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: QuestionId,
    pub positive: QuestionId,
    pub negative: QuestionId,
}

pub enum TripletSource<'s> {
    /// The same triplets every epoch.
    Fixed(Vec<Triplet>),
    /// One triplet per training pair per epoch, negatives drawn each epoch.
    Resampled {
        pairs: Vec<DuplicatePair>,
        sampler: &'s NegativeSampler<'s>,
    },
}

/// Validation anchors used for checkpoint selection.
pub struct Validation<'v> {
    pub anchors: &'v [EvalAnchor],
    pub corpus: &'v Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epoch_loss: Vec<f64>,
    /// MRR of the untrained head, when validation data was given.
    pub initial_validation_mrr: Option<f64>,
    pub validation_mrr: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub hard_negatives: usize,
    pub fallback_negatives: usize,
}

fn validation_mrr(head: &SiameseHead, features: &QuestionFeatures, v: &Validation<'_>, score: ScoreFunction) -> Result<f64> {
    let lists = rank_candidates(head, features, v.anchors, score, v.corpus)?;
    let ranks: Vec<Option<usize>> = lists.iter().map(|l| l.gold_rank).collect();
    mrr(&ranks)
}

struct Epochs<'s> {
    source: TripletSource<'s>,
    hard: Vec<Option<QuestionId>>,
}

impl<'s> Epochs<'s> {
    fn new(source: TripletSource<'s>) -> Self {
        let hard = match &source {
            TripletSource::Fixed(_) => vec![],
            TripletSource::Resampled { pairs, sampler } => {
                pairs.par_iter().map(|p| sampler.hardest(p.anchor)).collect()
            }
        };
        Self { source, hard }
    }

    fn is_empty(&self) -> bool {
        match &self.source {
            TripletSource::Fixed(t) => t.is_empty(),
            TripletSource::Resampled { pairs, .. } => pairs.is_empty(),
        }
    }

    fn triplets(&self, rng: &mut ChaCha8Rng, hard: &mut usize, fallback: &mut usize) -> Result<Vec<Triplet>> {
        match &self.source {
            TripletSource::Fixed(t) => Ok(t.clone()),
            TripletSource::Resampled { pairs, sampler } => pairs
                .iter()
                .zip(&self.hard)
                .map(|(p, h)| {
                    let choice = match h {
                        Some(q) => NegativeChoice::Hard(*q),
                        None => NegativeChoice::Fallback(sampler.fallback(p.anchor, rng)?),
                    };
                    match choice {
                        NegativeChoice::Hard(_) => *hard += 1,
                        NegativeChoice::Fallback(_) => *fallback += 1,
                    }
                    Ok(Triplet {
                        anchor: p.anchor,
                        positive: p.master,
                        negative: choice.id(),
                    })
                })
                .collect(),
        }
    }
}

/// Mean triplet loss and its gradient over a batch. Chunks are summed in a
/// fixed order.
pub fn batch_loss_and_grad(
    head: &SiameseHead,
    features: &QuestionFeatures,
    batch: &[Triplet],
) -> Result<(f64, Vec<f64>)> {
    let n_params = head.params().len();
    let partial: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; n_params];
            let mut loss = 0.0;
            for t in chunk {
                let get = |id| features.input(id).ok_or(Error::UnknownDocument(id));
                loss += head.triplet_loss_and_grad(get(t.anchor)?, get(t.positive)?, get(t.negative)?, &mut grad)?;
            }
            Ok((loss, grad))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; n_params];
    let mut loss = 0.0;
    for (l, g) in partial {
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let n = batch.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

/// Train a freshly initialized head. With validation anchors the epoch
/// with the best validation MRR is kept (earliest on ties); otherwise the
/// last epoch.
pub fn train_head(
    source: TripletSource<'_>,
    features: &QuestionFeatures,
    validation: Option<Validation<'_>>,
    hyper: &HeadHyper,
) -> Result<(SiameseHead, TrainingReport)> {
    hyper.validate()?;
    let epochs = Epochs::new(source);
    if epochs.is_empty() {
        return Err(Error::InvalidInput("no training triplets".into()));
    }
    let mut head = SiameseHead::init(
        features.input_dim(),
        hyper.out_dim,
        hyper.norm_degree,
        hyper.margin,
        features.mode(),
        hyper.seed,
    )?;
    let mut opt = Optimizer::new(hyper.optimizer, head.params().len(), hyper.learning_rate, hyper.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x5eed_7121);

    let validation = validation.filter(|v| !v.anchors.is_empty());
    let initial = match &validation {
        Some(v) => Some(validation_mrr(&head, features, v, hyper.score)?),
        None => None,
    };
    let mut report = TrainingReport {
        epoch_loss: vec![],
        initial_validation_mrr: initial,
        validation_mrr: vec![],
        best_epoch: hyper.epochs,
        hard_negatives: 0,
        fallback_negatives: 0,
    };
    let mut best: Option<(f64, SiameseHead)> = None;

    for epoch in 1..=hyper.epochs {
        let mut triplets = epochs.triplets(&mut rng, &mut report.hard_negatives, &mut report.fallback_negatives)?;
        triplets.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in triplets.chunks(hyper.batch_size) {
            let (loss, grad) = batch_loss_and_grad(&head, features, batch)?;
            total += loss * batch.len() as f64;
            opt.step(head.params_mut(), &grad);
        }
        let mean = total / triplets.len() as f64;
        report.epoch_loss.push(mean);
        if let Some(v) = &validation {
            let m = validation_mrr(&head, features, v, hyper.score)?;
            report.validation_mrr.push(m);
            info!("epoch {epoch}: loss {mean:.6}, validation MRR {m:.5}");
            if best.as_ref().is_none_or(|(b, _)| m > *b) {
                best = Some((m, head.clone()));
                report.best_epoch = epoch;
            }
        } else {
            debug!("epoch {epoch}: loss {mean:.6}");
        }
    }
    if let Some((_, h)) = best {
        head = h;
    }
    Ok((head, report))
}

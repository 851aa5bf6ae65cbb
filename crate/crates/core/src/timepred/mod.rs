//! Duplicate confirmation-time regression and ranking.

mod gap;
mod mlp;
mod tree;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gap::{
    build_samples, compute_gap, default_time_cutoff, gap_from_times, split_time_pairs, Gap, TimeGapSample,
    TimeSplit, DEFAULT_GAP_FLOOR_HOURS,
};
pub use mlp::{mean_absolute_error, tanhshrink, train_time_mlp, MlpHyper, MlpReport, TimeMlp};
pub use tree::{Node, RegressionTree, TreeParams};

use crate::corpus::QuestionId;
use crate::error::{Error, Result};
use crate::features::FeatureMode;
use crate::eval::{mae, rmse, spearman_rho};

pub enum TimeModel {
    Mlp(TimeMlp),
    Tree(RegressionTree),
}

impl TimeModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            TimeModel::Mlp(m) => m.predict(x),
            TimeModel::Tree(t) => t.predict(x),
        }
    }
}

pub fn train_time_tree(samples: &[TimeGapSample], params: TreeParams, mode: FeatureMode) -> Result<RegressionTree> {
    let x: Vec<&[f64]> = samples.iter().map(|s| s.features.as_slice()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.target).collect();
    RegressionTree::fit(&x, &y, params, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePrediction {
    pub anchor: QuestionId,
    pub master: QuestionId,
    pub predicted: f64,
    pub gold: f64,
}

/// Predictions sorted longest-predicted-gap first; ties by anchor then
/// master id.
pub fn predict_and_rank(model: &TimeModel, samples: &[TimeGapSample]) -> Result<Vec<TimePrediction>> {
    let mut out = samples
        .par_iter()
        .map(|s| {
            Ok(TimePrediction {
                anchor: s.pair.anchor,
                master: s.pair.master,
                predicted: model.predict(&s.features)?,
                gold: s.target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        b.predicted
            .total_cmp(&a.predicted)
            .then(a.anchor.cmp(&b.anchor))
            .then(a.master.cmp(&b.master))
    });
    Ok(out)
}

/// `anchor<TAB>master<TAB>predicted<TAB>gold`, one pair per line.
pub fn write_time_ranked(path: &Path, preds: &[TimePrediction]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in preds {
        writeln!(w, "{}\t{}\t{}\t{}", p.anchor, p.master, p.predicted, p.gold).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_time_ranked(path: &Path) -> Result<Vec<TimePrediction>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = vec![];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || Error::format(i + 1, format!("bad time ranking line {line:?}"));
        if f.len() != 4 {
            return Err(bad());
        }
        out.push(TimePrediction {
            anchor: f[0].parse().map_err(|_| bad())?,
            master: f[1].parse().map_err(|_| bad())?,
            predicted: f[2].parse().map_err(|_| bad())?,
            gold: f[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeReport {
    pub pairs: usize,
    pub rmse: f64,
    pub mae: f64,
    /// Undefined (absent) when either side is constant.
    pub spearman: Option<f64>,
}

impl TimeReport {
    pub fn from_predictions(preds: &[TimePrediction]) -> Result<Self> {
        let gold: Vec<f64> = preds.iter().map(|p| p.gold).collect();
        let pred: Vec<f64> = preds.iter().map(|p| p.predicted).collect();
        Ok(Self {
            pairs: preds.len(),
            rmse: rmse(&gold, &pred)?,
            mae: mae(&gold, &pred)?,
            spearman: spearman_rho(&gold, &pred).ok(),
        })
    }

    pub fn to_table(&self, label: &str) -> String {
        let rho = self.spearman.map_or("undefined".to_string(), |r| format!("{r:.3}"));
        format!(
            "{label}\n  pairs     {}\n  RMSE      {:.3}\n  MAE       {:.3}\n  Spearman  {rho}\n",
            self.pairs, self.rmse, self.mae
        )
    }
}

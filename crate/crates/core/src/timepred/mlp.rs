//! Two-arm regression network: each question passes through its own pair
//! of ReLU layers, the two outputs are concatenated and mapped to a scalar
//! with a TanhShrink activation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gap::TimeGapSample;
use crate::checkpoint::{parse_floats, read_checkpoint, write_floats};
use crate::error::{Error, Result};
use crate::features::FeatureMode;
use crate::optim::{Optimizer, OptimizerKind};

const CHECKPOINT_MAGIC: &str = "time-mlp";
const GRAD_CHUNK: usize = 8;

pub fn tanhshrink(x: f64) -> f64 {
    x - x.tanh()
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    d: usize,
    h1: usize,
    h2: usize,
}

impl Layout {
    fn arm_len(&self) -> usize {
        self.h1 * self.d + self.h1 + self.h2 * self.h1 + self.h2
    }

    fn len(&self) -> usize {
        2 * self.arm_len() + 2 * self.h2 + 1
    }

    /// (W1, b1, W1', b1') offsets of arm `k`.
    fn arm(&self, k: usize) -> [usize; 4] {
        let base = k * self.arm_len();
        let w1 = base;
        let b1 = w1 + self.h1 * self.d;
        let w2 = b1 + self.h1;
        let b2 = w2 + self.h2 * self.h1;
        [w1, b1, w2, b2]
    }

    fn out(&self) -> usize {
        2 * self.arm_len()
    }

    /// Sizes of each parameter block in storage order, as (rows, cols).
    fn blocks(&self) -> Vec<(usize, usize)> {
        let arm = [(self.h1, self.d), (1, self.h1), (self.h2, self.h1), (1, self.h2)];
        arm.iter().chain(&arm).copied().chain([(1, 2 * self.h2), (1, 1)]).collect()
    }
}

struct ArmCache {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMlp {
    layout: Layout,
    params: Vec<f64>,
    pub mode: FeatureMode,
}

impl TimeMlp {
    /// `question_dim` is the per-question feature length; each layer is
    /// initialized uniformly in `±1/sqrt(fan_in)`.
    pub fn init(question_dim: usize, hidden: [usize; 2], mode: FeatureMode, seed: u64) -> Result<Self> {
        if question_dim == 0 || hidden.contains(&0) {
            return Err(Error::Config("MLP dimensions must be positive".into()));
        }
        let layout = Layout { d: question_dim, h1: hidden[0], h2: hidden[1] };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan_ins = [layout.d, layout.d, layout.h1, layout.h1];
        let mut params = Vec::with_capacity(layout.len());
        for (i, (rows, cols)) in layout.blocks().into_iter().enumerate() {
            let fan_in = match i {
                0..=7 => fan_ins[i % 4],
                _ => 2 * layout.h2,
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            params.extend((0..rows * cols).map(|_| rng.random_range(-bound..bound)));
        }
        Ok(Self { layout, params, mode })
    }

    pub fn question_dim(&self) -> usize {
        self.layout.d
    }

    pub fn hidden(&self) -> [usize; 2] {
        [self.layout.h1, self.layout.h2]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != 2 * self.layout.d {
            return Err(Error::Dimension { expected: 2 * self.layout.d, actual: x.len() });
        }
        Ok(())
    }

    fn arm_forward(&self, k: usize, x: &[f64]) -> ArmCache {
        let Layout { d, h1, h2 } = self.layout;
        let [w1, b1, w2, b2] = self.layout.arm(k);
        let p = &self.params;
        let z1: Vec<f64> = (0..h1)
            .map(|i| {
                let row = &p[w1 + i * d..w1 + (i + 1) * d];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[b1 + i]
            })
            .collect();
        let a1: Vec<f64> = z1.iter().copied().map(relu).collect();
        let z2: Vec<f64> = (0..h2)
            .map(|j| {
                let row = &p[w2 + j * h1..w2 + (j + 1) * h1];
                row.iter().zip(&a1).map(|(w, v)| w * v).sum::<f64>() + p[b2 + j]
            })
            .collect();
        let a2 = z2.iter().copied().map(relu).collect();
        ArmCache { z1, a1, z2, a2 }
    }

    fn output_pre(&self, arms: &[ArmCache; 2]) -> f64 {
        let o = self.layout.out();
        let h2 = self.layout.h2;
        let w = &self.params[o..o + 2 * h2];
        let cat = arms[0].a2.iter().chain(&arms[1].a2);
        cat.zip(w).map(|(a, w)| a * w).sum::<f64>() + self.params[o + 2 * h2]
    }

    /// `x` is anchor features ⊕ master features.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let d = self.layout.d;
        let arms = [self.arm_forward(0, &x[..d]), self.arm_forward(1, &x[d..])];
        Ok(tanhshrink(self.output_pre(&arms)))
    }

    /// Adds `scale * d(prediction)/d(params)` into `grad`; returns the
    /// prediction.
    pub fn accumulate_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> Result<f64> {
        self.check(x)?;
        let Layout { d, h1, h2 } = self.layout;
        let arms = [self.arm_forward(0, &x[..d]), self.arm_forward(1, &x[d..])];
        let z = self.output_pre(&arms);
        let t = z.tanh();
        let dz = scale * t * t;
        let o = self.layout.out();
        for (k, arm) in arms.iter().enumerate() {
            for j in 0..h2 {
                grad[o + k * h2 + j] += dz * arm.a2[j];
            }
        }
        grad[o + 2 * h2] += dz;
        for (k, arm) in arms.iter().enumerate() {
            let xk = &x[k * d..(k + 1) * d];
            let [w1, b1, w2, b2] = self.layout.arm(k);
            let mut da1 = vec![0.0; h1];
            for j in 0..h2 {
                if arm.z2[j] <= 0.0 {
                    continue;
                }
                let dz2 = dz * self.params[o + k * h2 + j];
                grad[b2 + j] += dz2;
                let row = w2 + j * h1;
                for i in 0..h1 {
                    grad[row + i] += dz2 * arm.a1[i];
                    da1[i] += dz2 * self.params[row + i];
                }
            }
            for i in 0..h1 {
                if arm.z1[i] <= 0.0 || da1[i] == 0.0 {
                    continue;
                }
                let dz1 = da1[i];
                grad[b1 + i] += dz1;
                let row = w1 + i * d;
                for (g, v) in grad[row..row + d].iter_mut().zip(xk) {
                    *g += dz1 * v;
                }
            }
        }
        Ok(tanhshrink(z))
    }

    /// Mean absolute error over `batch` and its gradient.
    pub fn l1_loss_and_grad(&self, batch: &[&TimeGapSample]) -> Result<(f64, Vec<f64>)> {
        let n = batch.len().max(1) as f64;
        let partial: Vec<(f64, Vec<f64>)> = batch
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut grad = vec![0.0; self.params.len()];
                let mut loss = 0.0;
                for s in chunk {
                    let pred = self.predict(&s.features)?;
                    let r = pred - s.target;
                    loss += r.abs();
                    let sign = if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 };
                    if sign != 0.0 {
                        self.accumulate_grad(&s.features, sign / n, &mut grad)?;
                    }
                }
                Ok((loss, grad))
            })
            .collect::<Result<_>>()?;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for (l, g) in partial {
            loss += l;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        Ok((loss / n, grad))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "{CHECKPOINT_MAGIC} question_dim={} hidden1={} hidden2={} feature_mode={}",
            self.layout.d, self.layout.h1, self.layout.h2, self.mode
        )
        .map_err(io)?;
        let mut at = 0;
        for (rows, cols) in self.layout.blocks() {
            for _ in 0..rows {
                write_floats(&mut w, &self.params[at..at + cols]).map_err(io)?;
                at += cols;
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, lines) = read_checkpoint(path, CHECKPOINT_MAGIC)?;
        let layout = Layout {
            d: header.num("question_dim")?,
            h1: header.num("hidden1")?,
            h2: header.num("hidden2")?,
        };
        let mode: FeatureMode = header.get("feature_mode")?.parse()?;
        let shapes: Vec<usize> = layout
            .blocks()
            .into_iter()
            .flat_map(|(rows, cols)| std::iter::repeat_n(cols, rows))
            .collect();
        if lines.len() != shapes.len() {
            return Err(Error::format(
                lines.last().map_or(1, |l| l.0),
                format!("expected {} parameter rows, found {}", shapes.len(), lines.len()),
            ));
        }
        let mut params = Vec::with_capacity(layout.len());
        for ((lineno, line), cols) in lines.iter().zip(shapes) {
            let row = parse_floats(line, *lineno)?;
            if row.len() != cols {
                return Err(Error::format(*lineno, format!("expected {cols} values, found {}", row.len())));
            }
            params.extend(row);
        }
        Ok(Self { layout, params, mode })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpHyper {
    /// Hidden sizes; when absent, chosen by feature mode.
    pub hidden: Option<[usize; 2]>,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            hidden: None,
            learning_rate: 2e-5,
            epsilon: 1e-8,
            batch_size: 64,
            epochs: 40,
            optimizer: OptimizerKind::Adam,
            seed: 42,
        }
    }
}

impl MlpHyper {
    pub fn hidden_for(&self, mode: FeatureMode) -> [usize; 2] {
        self.hidden.unwrap_or(match mode {
            FeatureMode::Text => [256, 64],
            FeatureMode::TextNetwork => [512, 64],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpReport {
    pub epoch_loss: Vec<f64>,
    pub validation_mae: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

pub fn mean_absolute_error(model: &TimeMlp, samples: &[TimeGapSample]) -> Result<f64> {
    let errs = samples
        .par_iter()
        .map(|s| Ok((model.predict(&s.features)? - s.target).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len().max(1) as f64)
}

/// Mini-batch L1 training; keeps the epoch with the lowest validation MAE
/// (earliest on ties), or the last epoch without validation samples.
pub fn train_time_mlp(
    train: &[TimeGapSample],
    validation: &[TimeGapSample],
    mode: FeatureMode,
    hyper: &MlpHyper,
) -> Result<(TimeMlp, MlpReport)> {
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidInput("no training samples for the time model".into()))?;
    if hyper.batch_size == 0 || hyper.epochs == 0 {
        return Err(Error::Config("batch size and epochs must be positive".into()));
    }
    let width = first.features.len();
    if width % 2 != 0 || width == 0 {
        return Err(Error::InvalidInput(format!("odd sample width {width}")));
    }
    let mut model = TimeMlp::init(width / 2, hyper.hidden_for(mode), mode, hyper.seed)?;
    let mut opt = Optimizer::new(hyper.optimizer, model.params.len(), hyper.learning_rate, hyper.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x71_3e_9a_ed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = MlpReport {
        epoch_loss: vec![],
        validation_mae: vec![],
        best_epoch: hyper.epochs,
    };
    let mut best: Option<(f64, TimeMlp)> = None;
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(hyper.batch_size) {
            let batch: Vec<&TimeGapSample> = idx.iter().map(|&i| &train[i]).collect();
            let (loss, grad) = model.l1_loss_and_grad(&batch)?;
            total += loss * batch.len() as f64;
            opt.step(&mut model.params, &grad);
        }
        let mean = total / train.len() as f64;
        report.epoch_loss.push(mean);
        if validation.is_empty() {
            debug!("epoch {epoch}: L1 {mean:.6}");
            continue;
        }
        let mae = mean_absolute_error(&model, validation)?;
        report.validation_mae.push(mae);
        info!("epoch {epoch}: L1 {mean:.6}, validation MAE {mae:.6}");
        if best.as_ref().is_none_or(|(b, _)| mae < *b) {
            best = Some((mae, model.clone()));
            report.best_epoch = epoch;
        }
    }
    if let Some((_, m)) = best {
        model = m;
    }
    Ok((model, report))
}

//! The shared projection `σ(W · x + b)` applied to every arm of a triplet,
//! the p-norm triplet margin loss, and its analytic gradient.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{parse_floats, parse_header, write_floats};
use crate::error::{Error, Result};
use crate::features::FeatureMode;

const CHECKPOINT_MAGIC: &str = "siamese-head";

#[derive(Debug, Clone, PartialEq)]
pub struct SiameseHead {
    in_dim: usize,
    out_dim: usize,
    /// `W` row-major (`out_dim × in_dim`), then `b`.
    params: Vec<f64>,
    pub norm_degree: f64,
    pub margin: f64,
    pub mode: FeatureMode,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl SiameseHead {
    pub fn zeros(in_dim: usize, out_dim: usize, norm_degree: f64, margin: f64, mode: FeatureMode) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config("head dimensions must be positive".into()));
        }
        if !(norm_degree >= 1.0 && norm_degree.is_finite()) {
            return Err(Error::Config(format!("norm degree {norm_degree} must be >= 1")));
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::Config(format!("margin {margin} must be >= 0")));
        }
        Ok(Self {
            in_dim,
            out_dim,
            params: vec![0.0; out_dim * in_dim + out_dim],
            norm_degree,
            margin,
            mode,
        })
    }

    /// Uniform `±1/sqrt(in_dim)` initialization of weights and bias.
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        norm_degree: f64,
        margin: f64,
        mode: FeatureMode,
        seed: u64,
    ) -> Result<Self> {
        let mut head = Self::zeros(in_dim, out_dim, norm_degree, margin, mode)?;
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut head.params {
            *p = rng.random_range(-bound..bound);
        }
        Ok(head)
    }

    pub fn from_parts(
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        norm_degree: f64,
        margin: f64,
        mode: FeatureMode,
    ) -> Result<Self> {
        let out_dim = bias.len();
        let in_dim = weights.first().map_or(0, Vec::len);
        if weights.len() != out_dim || weights.iter().any(|r| r.len() != in_dim) {
            return Err(Error::Config("ragged head weight matrix".into()));
        }
        let mut head = Self::zeros(in_dim, out_dim, norm_degree, margin, mode)?;
        head.params = weights.into_iter().flatten().chain(bias).collect();
        Ok(head)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weights(&self) -> &[f64] {
        &self.params[..self.out_dim * self.in_dim]
    }

    fn bias(&self) -> &[f64] {
        &self.params[self.out_dim * self.in_dim..]
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_dim {
            return Err(Error::Dimension {
                expected: self.in_dim,
                actual: input.len(),
            });
        }
        let w = self.weights();
        Ok(self
            .bias()
            .iter()
            .enumerate()
            .map(|(o, b)| {
                let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
                sigmoid(row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>() + b)
            })
            .collect())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        pnorm_distance(a, b, self.norm_degree)
    }

    /// Triplet loss on raw inputs together with its gradient over all head
    /// parameters (same layout as [`params`](Self::params)).
    pub fn triplet_loss_and_grad(
        &self,
        anchor: &[f64],
        positive: &[f64],
        negative: &[f64],
        grad: &mut [f64],
    ) -> Result<f64> {
        let ya = self.forward(anchor)?;
        let yp = self.forward(positive)?;
        let yn = self.forward(negative)?;
        let d_ap = self.distance(&ya, &yp);
        let d_an = self.distance(&ya, &yn);
        let loss = (d_ap - d_an + self.margin).max(0.0);
        if loss <= 0.0 {
            return Ok(0.0);
        }
        let g_ap = distance_grad(&ya, &yp, d_ap, self.norm_degree);
        let g_an = distance_grad(&ya, &yn, d_an, self.norm_degree);
        let dya: Vec<f64> = g_ap.iter().zip(&g_an).map(|(p, n)| p - n).collect();
        let dyp: Vec<f64> = g_ap.iter().map(|g| -g).collect();
        self.accumulate_arm(anchor, &ya, &dya, grad);
        self.accumulate_arm(positive, &yp, &dyp, grad);
        self.accumulate_arm(negative, &yn, &g_an, grad);
        Ok(loss)
    }

    fn accumulate_arm(&self, x: &[f64], y: &[f64], dy: &[f64], grad: &mut [f64]) {
        let (gw, gb) = grad.split_at_mut(self.out_dim * self.in_dim);
        for o in 0..self.out_dim {
            let delta = dy[o] * y[o] * (1.0 - y[o]);
            if delta == 0.0 {
                continue;
            }
            gb[o] += delta;
            let row = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
            for (g, xi) in row.iter_mut().zip(x) {
                *g += delta * xi;
            }
        }
    }

    /// Header line followed by one line per weight row and a bias line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "{CHECKPOINT_MAGIC} in_dim={} out_dim={} norm_degree={} margin={} feature_mode={}",
            self.in_dim, self.out_dim, self.norm_degree, self.margin, self.mode
        )
        .map_err(io)?;
        for row in self.weights().chunks_exact(self.in_dim) {
            write_floats(&mut w, row).map_err(io)?;
        }
        write_floats(&mut w, self.bias()).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(path, e))?
            .ok_or_else(|| Error::format(1, "empty checkpoint"))?;
        let fields = parse_header(&header, CHECKPOINT_MAGIC)?;
        let get = |k: &str| {
            fields
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::format(1, format!("header missing {k}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::format(1, format!("bad {k}")))
        };
        let in_dim = num("in_dim")? as usize;
        let out_dim = num("out_dim")? as usize;
        let mode: FeatureMode = get("feature_mode")?.parse()?;
        let mut head = Self::zeros(in_dim, out_dim, num("norm_degree")?, num("margin")?, mode)?;
        let mut rows = Vec::with_capacity(out_dim + 1);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push((i + 2, parse_floats(&line, i + 2)?));
        }
        if rows.len() != out_dim + 1 {
            return Err(Error::format(
                rows.len() + 1,
                format!("expected {} rows after header, found {}", out_dim + 1, rows.len()),
            ));
        }
        let mut params = Vec::with_capacity(head.params.len());
        for (k, (lineno, row)) in rows.into_iter().enumerate() {
            let expected = if k < out_dim { in_dim } else { out_dim };
            if row.len() != expected {
                return Err(Error::format(
                    lineno,
                    format!("expected {expected} values, found {}", row.len()),
                ));
            }
            params.extend(row);
        }
        head.params = params;
        Ok(head)
    }
}

pub fn pnorm_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    }
    if p == 1.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// d/da of `||a - b||_p`; zero at `a == b`.
fn distance_grad(a: &[f64], b: &[f64], dist: f64, p: f64) -> Vec<f64> {
    if dist == 0.0 {
        return vec![0.0; a.len()];
    }
    let scale = dist.powf(p - 1.0);
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let z = x - y;
            if p == 2.0 {
                z / dist
            } else if p == 1.0 {
                z.signum() * (z != 0.0) as u8 as f64
            } else {
                z.signum() * z.abs().powf(p - 1.0) / scale
            }
        })
        .collect()
}

/// `max(d(a, p) - d(a, n) + margin, 0)` on already-projected vectors.
pub fn triplet_loss(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64, norm_degree: f64) -> f64 {
    let d_ap = pnorm_distance(anchor, positive, norm_degree);
    let d_an = pnorm_distance(anchor, negative, norm_degree);
    (d_ap - d_an + margin).max(0.0)
}

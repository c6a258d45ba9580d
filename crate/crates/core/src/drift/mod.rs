//! Normalized earth mover's distance drift score.
//!
//! The score compares a historical window with an incoming batch in embedding
//! space. Each bootstrap round resamples both sides, solves the exact
//! 1-Wasserstein transport problem under the Euclidean ground metric, and
//! divides it by the norm-inequality bound
//! `W1(a, b) <= E_a[|x|] + E_b[|y|]`, which puts the ratio in `[0, 1]`.
//! Rounds are averaged.

mod assignment;
mod transport;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::types::Declaration;

pub use assignment::solve as solve_assignment;

/// A weighted point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    uniform: bool,
}

impl PointCloud {
    /// Equal mass on every point.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidCloud("no points".into()));
        }
        Self::check_dims(&points)?;
        Ok(PointCloud {
            weights: vec![1.0 / n as f64; n],
            points,
            uniform: true,
        })
    }

    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidCloud("no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidCloud(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        Self::check_dims(&points)?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidCloud("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidCloud(format!("weights sum to {total}")));
        }
        let uniform = weights.iter().all(|w| *w == weights[0]);
        Ok(PointCloud {
            points,
            weights,
            uniform,
        })
    }

    fn check_dims(points: &[Vec<f64>]) -> Result<()> {
        let d = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: p.len(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact 1-Wasserstein distance under the Euclidean ground metric.
///
/// Equal-size uniform clouds are solved as an assignment problem; anything
/// else goes through the general transportation solver.
pub fn emd_w1(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (n, m) = (a.len(), b.len());
    let mut cost = Vec::with_capacity(n * m);
    for p in &a.points {
        for q in &b.points {
            cost.push(euclidean(p, q));
        }
    }
    if a.uniform && b.uniform && n == m {
        let assign = assignment::solve(&cost, n);
        let total: f64 = assign
            .iter()
            .enumerate()
            .map(|(i, &j)| cost[i * n + j])
            .sum();
        Ok(total / n as f64)
    } else {
        Ok(transport::min_cost(&cost, &a.weights, &b.weights))
    }
}

/// `E_a[|x|] + E_b[|y|]`, the norm-inequality upper bound on [`emd_w1`].
pub fn w1_upper_bound(a: &PointCloud, b: &PointCloud) -> f64 {
    let side = |c: &PointCloud| -> f64 {
        c.points
            .iter()
            .zip(&c.weights)
            .map(|(p, w)| w * norm(p))
            .sum()
    };
    side(a) + side(b)
}

/// Bootstrap settings for the drift score. The transport power is fixed at 1
/// and the ground metric is Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub sample_size: usize,
    pub repeats: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            sample_size: 256,
            repeats: 5,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::config("bootstrap_sample", "must be at least 2"));
        }
        if self.repeats < 1 {
            return Err(Error::config("bootstrap_repeats", "must be at least 1"));
        }
        Ok(())
    }
}

fn resample(points: &[Vec<f64>], size: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    if points.len() <= size {
        return points.to_vec();
    }
    (0..size)
        .map(|_| points[rng.random_range(0..points.len())].clone())
        .collect()
}

/// Ratio of transport cost to its bound for one pair of clouds; 0 when the
/// bound vanishes.
pub fn normalized_emd(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let bound = w1_upper_bound(a, b);
    if bound <= 0.0 {
        return Ok(0.0);
    }
    Ok((emd_w1(a, b)? / bound).clamp(0.0, 1.0))
}

/// Drift score between two sets of embedded points.
pub fn drift_score_points(
    historical: &[Vec<f64>],
    incoming: &[Vec<f64>],
    cfg: &DriftConfig,
    rng: &mut SimRng,
) -> Result<f64> {
    if historical.is_empty() || incoming.is_empty() {
        return Err(Error::InsufficientDriftData);
    }
    cfg.validate()?;
    // One sub-stream per round keeps results independent of scheduling.
    let round_seeds: Vec<u64> = (0..cfg.repeats).map(|_| rng.random()).collect();
    let ratios: Vec<f64> = round_seeds
        .par_iter()
        .map(|&seed| {
            let mut r = SimRng::seed_from_u64(seed);
            let a = PointCloud::uniform(resample(historical, cfg.sample_size, &mut r))?;
            let b = PointCloud::uniform(resample(incoming, cfg.sample_size, &mut r))?;
            normalized_emd(&a, &b)
        })
        .collect::<Result<_>>()?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(mean.clamp(0.0, 1.0))
}

/// Drift score between historical and incoming declarations under `embedder`.
pub fn drift_score(
    historical: &[Declaration],
    incoming: &[Declaration],
    embedder: &Embedder,
    cfg: &DriftConfig,
    rng: &mut SimRng,
) -> Result<f64> {
    if historical.is_empty() || incoming.is_empty() {
        return Err(Error::InsufficientDriftData);
    }
    drift_score_points(
        &embedder.encode_all(historical),
        &embedder.encode_all(incoming),
        cfg,
        rng,
    )
}

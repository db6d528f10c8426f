//! Exact t-SNE.
//!
//! Conditional neighbor distributions are calibrated per point to a target
//! perplexity, symmetrized into a joint `P`, and matched by a Student-t
//! kernel `Q` in the plane through gradient descent with momentum, per-
//! coordinate gains and early exaggeration.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::PointCloud;

/// t-SNE settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches to `final_momentum`.
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if n < 5 {
            return Err(Error::InvalidConfig(format!("t-SNE needs at least 5 points, got {n}")));
        }
        if !(self.perplexity > 0.0 && self.perplexity < n as f64) {
            return Err(Error::InvalidConfig(format!(
                "perplexity {} must be positive and below the number of points ({n})",
                self.perplexity
            )));
        }
        let positive = |v: f64| v > 0.0;
        if self.iterations == 0 || !positive(self.learning_rate) || !positive(self.early_exaggeration) {
            return Err(Error::InvalidConfig(
                "iterations, learning rate and exaggeration must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Output of a t-SNE run.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// KL(P || Q) at the final iterate.
    pub kl: f64,
    /// `(iteration, KL)` every 50 iterations and at the end; iterations are 1-based.
    pub kl_trace: Vec<(usize, f64)>,
}

const PERPLEXITY_TOL: f64 = 1e-3;
const MAX_BISECTIONS: usize = 64;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

/// Gaussian conditional distribution over a row of squared distances whose
/// perplexity `2^H` is within 1e-3 of `target`.
///
/// Targets at or above the row length yield the uniform distribution, as do
/// rows of identical distances.
pub fn perplexity_calibration(distances_row: &[f64], target: f64) -> Vec<f64> {
    let len = distances_row.len();
    if len == 0 {
        return Vec::new();
    }
    let min = distances_row.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = distances_row.iter().map(|d| d - min).collect();
    let max = shifted.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || target >= len as f64 {
        return vec![1.0 / len as f64; len];
    }
    let target_entropy = target.ln();
    let mean = shifted.iter().sum::<f64>() / len as f64;
    let mut beta = 1.0 / mean;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut probs = vec![0.0; len];
    for _ in 0..MAX_BISECTIONS {
        let entropy = gaussian_row(&shifted, beta, &mut probs);
        if (entropy.exp() - target).abs() <= PERPLEXITY_TOL {
            break;
        }
        if entropy > target_entropy {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    gaussian_row(&shifted, beta, &mut probs);
    probs
}

/// Fills `probs` with `exp(-beta d) / Z` and returns the entropy in nats.
fn gaussian_row(shifted: &[f64], beta: f64, probs: &mut [f64]) -> f64 {
    let mut z = 0.0;
    for (p, &d) in probs.iter_mut().zip(shifted) {
        *p = (-beta * d).exp();
        z += *p;
    }
    let mut weighted = 0.0;
    for (p, &d) in probs.iter_mut().zip(shifted) {
        *p /= z;
        weighted += d * *p;
    }
    z.ln() + beta * weighted
}

fn squared_distances(data: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = data.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| data.row(i).iter().copied().collect()).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect()
        })
        .collect()
}

/// Symmetrized joint probabilities `P_ij = (p_j|i + p_i|j) / 2n`, dense `n x n`.
pub fn joint_probabilities(data: &DMatrix<f64>, perplexity: f64) -> Vec<f64> {
    let n = data.nrows();
    let dist = squared_distances(data);
    let conditional: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
            let p = perplexity_calibration(&row, perplexity);
            let mut full = Vec::with_capacity(n);
            let mut k = 0;
            for j in 0..n {
                if j == i {
                    full.push(0.0);
                } else {
                    full.push(p[k]);
                    k += 1;
                }
            }
            full
        })
        .collect();
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = (conditional[i][j] + conditional[j][i]) / (2.0 * n as f64);
        }
    }
    joint
}

/// Student-t affinities `(1 + |y_i - y_j|^2)^-1` (zero diagonal) and their sum.
fn student_kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[i][0] - y[j][0];
                        let dy = y[i][1] - y[j][1];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    // Row sums then a sequential total keep the result independent of threading.
    let z: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    (rows.into_iter().flatten().collect(), z)
}

/// `KL(P || Q)` for joint `P` (dense, row-major) and embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let (w, z) = student_kernel(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                let q = (w[i * n + j] / z).max(P_FLOOR);
                kl += pij * (pij.max(P_FLOOR) / q).ln();
            }
        }
    }
    kl
}

/// Gradient of `KL(P || Q)`: `4 sum_j (p_ij - q_ij)(y_i - y_j) / (1 + |y_i - y_j|^2)`.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = y.len();
    let (w, z) = student_kernel(y);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let wij = w[i * n + j];
                let coeff = 4.0 * (p[i * n + j] - wij / z) * wij;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            g
        })
        .collect()
}

/// Runs t-SNE on `points`.
pub fn tsne(points: &PointCloud, config: &TsneConfig) -> Result<TsneResult> {
    tsne_with_cancel(points, config, &|| false)
}

/// As [`tsne`], polling `cancelled` every 10 iterations.
pub fn tsne_with_cancel(
    points: &PointCloud,
    config: &TsneConfig,
    cancelled: &(dyn Fn() -> bool + Sync),
) -> Result<TsneResult> {
    let n = points.len();
    config.validate(n)?;
    let p = joint_probabilities(&points.data, config.perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let exaggerated: Vec<f64> = p.iter().map(|v| v * config.early_exaggeration).collect();
    let mut trace = Vec::new();

    for iter in 0..config.iterations {
        if iter % 10 == 0 && cancelled() {
            return Err(Error::Cancelled);
        }
        let target = if iter < config.exaggeration_iters {
            &exaggerated
        } else {
            &p
        };
        let momentum = if iter < config.momentum_switch {
            config.initial_momentum
        } else {
            config.final_momentum
        };
        let grad = kl_gradient(target, &y);
        if grad.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::Divergence);
        }
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (velocity[i][d] > 0.0);
                gains[i][d] = if same_sign {
                    gains[i][d] * 0.8
                } else {
                    gains[i][d] + 0.2
                }
                .max(MIN_GAIN);
                velocity[i][d] = momentum * velocity[i][d] - config.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += velocity[i][d];
            }
        }
        let mean = [
            y.iter().map(|v| v[0]).sum::<f64>() / n as f64,
            y.iter().map(|v| v[1]).sum::<f64>() / n as f64,
        ];
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Divergence);
        }
        let step = iter + 1;
        if step % 50 == 0 || step == config.iterations {
            trace.push((step, kl_divergence(&p, &y)));
        }
    }
    let kl = trace.last().map_or(f64::NAN, |&(_, kl)| kl);
    Ok(TsneResult {
        coords: y,
        kl,
        kl_trace: trace,
    })
}

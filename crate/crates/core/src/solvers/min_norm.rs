//! Minimum-norm point of the convex hull of a few gradients.
//!
//! Works on the Gram matrix, so the cost per iteration is independent of the
//! gradient dimension. Starts from the best closed-form pair and refines with
//! away-step Frank-Wolfe using exact line search, which converges linearly on
//! the simplex.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How each gradient is rescaled before the hull is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormMode {
    /// Divide by the gradient's own L2 norm.
    L2,
    /// Divide by the task loss.
    Loss,
    /// Divide by loss times L2 norm.
    LossPlus,
    None,
}

impl NormMode {
    pub const ALL: [NormMode; 4] = [NormMode::L2, NormMode::Loss, NormMode::LossPlus, NormMode::None];
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            NormMode::L2 => "l2",
            NormMode::Loss => "loss",
            NormMode::LossPlus => "loss+",
            NormMode::None => "none",
        })
    }
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(NormMode::L2),
            "loss" => Ok(NormMode::Loss),
            "loss+" => Ok(NormMode::LossPlus),
            "none" => Ok(NormMode::None),
            other => Err(Error::Parse(format!("unknown normalization {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    /// Convex weights over the (normalized) gradients.
    pub weights: Vec<f64>,
    /// `Σ weights[j] · g̃_j`
    pub direction: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales gradients per `mode`. Errors on zero norms (l2, loss+) and on
/// non-positive losses (loss, loss+).
pub fn normalize_gradients(gradients: &[Vec<f64>], mode: NormMode, losses: &[f64]) -> Result<Vec<Vec<f64>>> {
    let needs_loss = matches!(mode, NormMode::Loss | NormMode::LossPlus);
    if needs_loss && losses.len() != gradients.len() {
        return Err(Error::DimensionMismatch {
            expected: gradients.len(),
            found: losses.len(),
        });
    }
    gradients
        .iter()
        .enumerate()
        .map(|(task, g)| {
            let norm = || {
                let n = dot(g, g).sqrt();
                if n > 0.0 {
                    Ok(n)
                } else {
                    Err(Error::ZeroNormGradient { task })
                }
            };
            let loss = || {
                let l = losses[task];
                if l > 0.0 && l.is_finite() {
                    Ok(l)
                } else {
                    Err(Error::NonPositiveLoss { task, loss: l })
                }
            };
            let scale = match mode {
                NormMode::None => 1.0,
                NormMode::L2 => norm()?,
                NormMode::Loss => loss()?,
                NormMode::LossPlus => loss()? * norm()?,
            };
            Ok(g.iter().map(|v| v / scale).collect())
        })
        .collect()
}

/// Closed-form weight on `g1` for the min-norm point of segment `[g1, g2]`,
/// given `⟨g1,g1⟩`, `⟨g1,g2⟩`, `⟨g2,g2⟩`.
pub fn two_point_weight(g11: f64, g12: f64, g22: f64) -> f64 {
    let denom = g11 - 2.0 * g12 + g22;
    if denom <= 0.0 {
        return 0.5;
    }
    ((g22 - g12) / denom).clamp(0.0, 1.0)
}

fn gram(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&vectors[i], &vectors[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// Frank-Wolfe iterations between attempts to jump to the affine minimizer
/// of the current support.
const CORRECTION_INTERVAL: usize = 16;

/// Min-norm weights on the simplex for a Gram matrix.
pub fn min_norm_weights(gram: &[Vec<f64>], max_iter: usize, tol: f64) -> (Vec<f64>, usize) {
    let n = gram.len();
    if n == 1 {
        return (vec![1.0], 0);
    }

    // Best pair in closed form.
    let mut gamma = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut best_pair = (0, 1, 0.5);
    for i in 0..n {
        for j in i + 1..n {
            let w = two_point_weight(gram[i][i], gram[i][j], gram[j][j]);
            let val = w * w * gram[i][i] + 2.0 * w * (1.0 - w) * gram[i][j] + (1.0 - w) * (1.0 - w) * gram[j][j];
            if val < best {
                best = val;
                best_pair = (i, j, w);
            }
        }
    }
    gamma[best_pair.0] = best_pair.2;
    gamma[best_pair.1] += 1.0 - best_pair.2;

    let mut iterations = 0;
    while iterations < max_iter {
        let chunk = CORRECTION_INTERVAL.min(max_iter - iterations);
        let taken = frank_wolfe(gram, &mut gamma, chunk, tol);
        iterations += taken;
        let corrected = affine_correction(gram, &mut gamma);
        if taken < chunk && !corrected {
            break;
        }
    }
    (gamma, iterations)
}

/// Minimizes `wᵀGw` over the affine hull of the support of `gamma` and moves
/// there when the minimizer stays on the simplex and lowers the objective.
fn affine_correction(gram: &[Vec<f64>], gamma: &mut [f64]) -> bool {
    let support: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i] > 0.0).collect();
    let k = support.len();
    if k < 2 {
        return false;
    }
    // KKT system [G_S 1; 1ᵀ 0] [w; μ] = [0; 1].
    let mut m = vec![vec![0.0; k + 2]; k + 1];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            m[r][c] = gram[i][j];
        }
        m[r][k] = 1.0;
        m[k][r] = 1.0;
    }
    m[k][k + 1] = 1.0;
    let scale = support.iter().map(|&i| gram[i][i]).fold(0.0, f64::max).max(1.0);
    for col in 0..=k {
        let pivot = (col..=k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).expect("rows");
        if m[pivot][col].abs() <= 1e-12 * scale {
            return false;
        }
        m.swap(col, pivot);
        for r in 0..=k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..k + 2 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let w: Vec<f64> = (0..k).map(|r| m[r][k + 1] / m[r][r]).collect();
    if w.iter().any(|&v| !(v >= 0.0)) {
        return false;
    }
    let quad = |g: &[f64]| -> f64 { (0..g.len()).map(|i| g[i] * dot(&gram[i], g)).sum() };
    let mut candidate = vec![0.0; gamma.len()];
    for (&i, &v) in support.iter().zip(&w) {
        candidate[i] = v;
    }
    let total: f64 = candidate.iter().sum();
    candidate.iter_mut().for_each(|v| *v /= total);
    if quad(&candidate) >= quad(gamma) {
        return false;
    }
    gamma.copy_from_slice(&candidate);
    true
}

/// Away-step Frank-Wolfe iterations from `gamma`; returns the number taken.
fn frank_wolfe(gram: &[Vec<f64>], gamma: &mut [f64], max_iter: usize, tol: f64) -> usize {
    let n = gram.len();
    let mut iterations = 0;
    while iterations < max_iter {
        let g_gamma: Vec<f64> = (0..n).map(|i| dot(&gram[i], gamma)).collect();
        let sq_norm = dot(gamma, &g_gamma);

        let (s, &s_val) = g_gamma
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let (a, &a_val) = g_gamma
            .iter()
            .enumerate()
            .filter(|(i, _)| gamma[*i] > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("some weight is positive");

        let fw_gap = sq_norm - s_val;
        let away_gap = a_val - sq_norm;
        if fw_gap <= tol {
            break;
        }
        iterations += 1;

        if fw_gap >= away_gap {
            // Move toward vertex s: d' = d + t (g_s − d).
            let dist = sq_norm - 2.0 * s_val + gram[s][s];
            let t = if dist > 0.0 { (fw_gap / dist).clamp(0.0, 1.0) } else { 0.0 };
            if t == 0.0 {
                break;
            }
            for (i, w) in gamma.iter_mut().enumerate() {
                *w *= 1.0 - t;
                if i == s {
                    *w += t;
                }
            }
        } else {
            // Move away from vertex a: d' = d + t (d − g_a).
            let dist = sq_norm - 2.0 * a_val + gram[a][a];
            let t_max = if gamma[a] < 1.0 { gamma[a] / (1.0 - gamma[a]) } else { f64::INFINITY };
            let t = if dist > 0.0 { (away_gap / dist).clamp(0.0, t_max) } else { 0.0 };
            if t == 0.0 {
                break;
            }
            for (i, w) in gamma.iter_mut().enumerate() {
                *w *= 1.0 + t;
                if i == a {
                    *w -= t;
                }
            }
            if t == t_max {
                gamma[a] = 0.0;
            }
        }
        // Guard against drift off the simplex.
        for w in gamma.iter_mut() {
            *w = w.max(0.0);
        }
        let total: f64 = gamma.iter().sum();
        gamma.iter_mut().for_each(|w| *w /= total);
    }
    iterations
}

/// Normalizes the gradients per `mode` and finds the minimum-norm point of
/// their convex hull. Weights and direction refer to the normalized gradients.
pub fn min_norm_frank_wolfe(
    gradients: &[Vec<f64>],
    mode: NormMode,
    losses: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<MinNormResult> {
    let Some(first) = gradients.first() else {
        return Err(Error::InvalidConfig("min-norm needs at least one gradient".into()));
    };
    if let Some(bad) = gradients.iter().find(|g| g.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            found: bad.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be positive".into()));
    }
    let normalized = normalize_gradients(gradients, mode, losses)?;
    let gram = gram(&normalized);
    let (weights, iterations) = min_norm_weights(&gram, max_iter, tol);

    let mut direction = vec![0.0; first.len()];
    for (w, g) in weights.iter().zip(&normalized) {
        if *w == 0.0 {
            continue;
        }
        for (d, v) in direction.iter_mut().zip(g) {
            *d += w * v;
        }
    }
    let norm = dot(&direction, &direction).sqrt();
    Ok(MinNormResult {
        weights,
        direction,
        norm,
        iterations,
    })
}

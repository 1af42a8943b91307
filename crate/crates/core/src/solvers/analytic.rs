//! Plain gradient-descent drivers on the analytic bi-objective problem.

use super::min_norm::{min_norm_frank_wolfe, MinNormResult, NormMode};
use super::preference::PreferenceRay;
use crate::error::{Error, Result};
use crate::moo::ObjectiveVector;
use crate::problems::{analytic_eval, analytic_grads, AnalyticProblem};

const ITERS: usize = 1000;
const TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRun {
    pub x: Vec<f64>,
    pub objectives: ObjectiveVector,
    /// Min-norm solution at the final iterate (normalization `none`).
    pub final_min_norm: MinNormResult,
    pub steps: usize,
}

fn min_norm_at(problem: &AnalyticProblem, x: &[f64], mode: NormMode) -> Result<MinNormResult> {
    let (g1, g2) = analytic_grads(problem, x)?;
    let losses = analytic_eval(problem, x)?;
    min_norm_frank_wolfe(&[g1, g2], mode, losses.values(), ITERS, TOL)
}

fn check_start(problem: &AnalyticProblem, x0: &[f64], lr: f64) -> Result<()> {
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: x0.len(),
        });
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidConfig(format!("learning rate must be positive, got {lr}")));
    }
    Ok(())
}

/// MGDA: `x ← x − lr·d` with `d` the min-norm element of the normalized
/// gradients. Stops early once `‖d‖` (under `mode`) drops below `stop_norm`.
pub fn mgda_analytic(
    problem: &AnalyticProblem,
    x0: &[f64],
    mode: NormMode,
    lr: f64,
    max_steps: usize,
    stop_norm: f64,
) -> Result<AnalyticRun> {
    check_start(problem, x0, lr)?;
    let mut x = x0.to_vec();
    let mut steps = 0;
    while steps < max_steps {
        let r = match min_norm_at(problem, &x, mode) {
            Ok(r) => r,
            // A zero gradient or zero loss means x sits on an anchor, which is Pareto optimal.
            Err(Error::ZeroNormGradient { .. } | Error::NonPositiveLoss { .. }) => break,
            Err(e) => return Err(e),
        };
        if r.norm <= stop_norm {
            break;
        }
        for (xi, di) in x.iter_mut().zip(&r.direction) {
            *xi -= lr * di;
        }
        steps += 1;
    }
    Ok(AnalyticRun {
        objectives: analytic_eval(problem, &x)?,
        final_min_norm: min_norm_at(problem, &x, NormMode::None)?,
        x,
        steps,
    })
}

/// Gradient descent on `Σ ray_j f_j`.
pub fn scalarized_analytic(problem: &AnalyticProblem, ray: &PreferenceRay, x0: &[f64], lr: f64, steps: usize) -> Result<AnalyticRun> {
    check_start(problem, x0, lr)?;
    if ray.dim() != 2 {
        return Err(Error::NotTwoObjectives(ray.dim()));
    }
    let w = ray.weights();
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let (g1, g2) = analytic_grads(problem, &x)?;
        for i in 0..x.len() {
            x[i] -= lr * (w[0] * g1[i] + w[1] * g2[i]);
        }
    }
    Ok(AnalyticRun {
        objectives: analytic_eval(problem, &x)?,
        final_min_norm: min_norm_at(problem, &x, NormMode::None)?,
        x,
        steps,
    })
}

//! Simplified two-phase Pareto multi-task learning for two objectives.
//!
//! `K` unit rays at angles `(k + 1/2)·(π/2)/K` split the positive quadrant
//! into cones; model `k` owns the cone of loss vectors whose nearest ray (by
//! cosine) is `u_k`, i.e. `G_l(L) = (u_l − u_k)·L ≤ 0` for every `l ≠ k`.
//! Phase 1 descends the sum of violated constraints until the loss vector
//! enters the cone or a budget of one epoch runs out. Phase 2 follows the
//! min-norm element of the task gradients and the gradients of constraints
//! that are active or nearly so.

use super::config::{Method, SolverConfig};
use super::min_norm::{min_norm_frank_wolfe, NormMode};
use super::train::{check_data, for_each_batch, init_params, train_single_task, TrainedNetwork, MIN_NORM_ITERS, MIN_NORM_TOL};
use crate::autodiff::{adam_step, loss_and_grads, GradientSet, LossMode, NetworkSpec, OptimizerState, ParameterSet};
use crate::error::{Error, Result};
use crate::problems::{analytic_eval, analytic_grads, AnalyticProblem, Split};
use crate::seeds::{self, stream};

/// A constraint is active once the loss vector is within this fraction of
/// the half-cone angle of its boundary. Below one half, the two boundaries of
/// a cone are never active together.
pub const ACTIVE_FRACTION: f64 = 0.25;

/// Unit rays splitting the positive quadrant into `k` equal cones.
pub fn pmtl_rays(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|i| {
            let theta = (i as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / k as f64;
            [theta.cos(), theta.sin()]
        })
        .collect()
}

/// `(l, G_l(L))` for every other ray.
pub fn region_constraints(rays: &[[f64; 2]], own: usize, losses: &[f64]) -> Vec<(usize, f64)> {
    let u = rays[own];
    rays.iter()
        .enumerate()
        .filter(|(l, _)| *l != own)
        .map(|(l, r)| (l, (r[0] - u[0]) * losses[0] + (r[1] - u[1]) * losses[1]))
        .collect()
}

/// Largest constraint value; `≤ 0` means `losses` lies in the cone of ray `own`.
pub fn region_violation(rays: &[[f64; 2]], own: usize, losses: &[f64]) -> f64 {
    region_constraints(rays, own, losses)
        .into_iter()
        .map(|(_, g)| g)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn constraint_weights(rays: &[[f64; 2]], own: usize, l: usize) -> [f64; 2] {
    [rays[l][0] - rays[own][0], rays[l][1] - rays[own][1]]
}

fn active(rays: &[[f64; 2]], own: usize, losses: &[f64]) -> Vec<usize> {
    let norm = losses[0].hypot(losses[1]);
    let threshold = (ACTIVE_FRACTION * std::f64::consts::FRAC_PI_4 / rays.len() as f64).sin();
    region_constraints(rays, own, losses)
        .into_iter()
        .filter(|&(l, g)| {
            let w = constraint_weights(rays, own, l);
            // Sine of the angle between the loss vector and the boundary.
            -g <= threshold * w[0].hypot(w[1]) * norm
        })
        .map(|(l, _)| l)
        .collect()
}

/// Min-norm direction over the task gradients and the active constraint
/// gradients, all given as flat vectors.
fn phase_two_direction(task_grads: &[Vec<f64>], rays: &[[f64; 2]], own: usize, losses: &[f64]) -> Result<Vec<f64>> {
    let mut vectors = task_grads.to_vec();
    for l in active(rays, own, losses) {
        let w = constraint_weights(rays, own, l);
        vectors.push(
            task_grads[0]
                .iter()
                .zip(&task_grads[1])
                .map(|(a, b)| w[0] * a + w[1] * b)
                .collect(),
        );
    }
    Ok(min_norm_frank_wolfe(&vectors, NormMode::None, &[], MIN_NORM_ITERS, MIN_NORM_TOL)?.direction)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmtlModel {
    pub network: TrainedNetwork,
    pub ray: [f64; 2],
    /// Whether phase 1 ended inside the model's cone.
    pub reached_region: bool,
}

fn train_one(spec: &NetworkSpec, train: &Split, config: &SolverConfig, rays: &[[f64; 2]], own: usize) -> Result<PmtlModel> {
    let mut params = init_params(spec, config.seed);
    let mut state = OptimizerState::new(&params);
    let phase1_budget = train.len().div_ceil(config.batch_size);
    let mut phase1_steps = 0usize;
    let mut in_phase1 = true;
    let mut reached = false;

    for_each_batch(train.len(), config, |lr, idx, batch_index| {
        let batch = train.batch(idx, batch_index, &[]);
        let out = loss_and_grads(spec, &params, &batch, &LossMode::PerTaskShared)?;
        let GradientSet::PerTask { shared, heads } = out.grads else {
            unreachable!("per-task mode")
        };
        let task_full: Vec<ParameterSet> = (0..2)
            .map(|j| {
                let mut g = params.zeros_like();
                g.shared = shared[j].clone();
                g.per_task[j] = heads[j].clone();
                g
            })
            .collect();

        if in_phase1 {
            let violated: Vec<usize> = region_constraints(rays, own, &out.losses)
                .into_iter()
                .filter(|(_, g)| *g > 0.0)
                .map(|(l, _)| l)
                .collect();
            if violated.is_empty() {
                in_phase1 = false;
                reached = true;
            } else if phase1_steps >= phase1_budget {
                log::warn!("pmtl ray {own}: phase 1 did not reach its region within {phase1_budget} steps");
                in_phase1 = false;
            } else {
                let mut w = [0.0; 2];
                for l in violated {
                    let c = constraint_weights(rays, own, l);
                    w[0] += c[0];
                    w[1] += c[1];
                }
                let flat: Vec<f64> = task_full[0]
                    .flatten()
                    .iter()
                    .zip(task_full[1].flatten())
                    .map(|(a, b)| w[0] * a + w[1] * b)
                    .collect();
                let grads = params.unflatten_like(&flat)?;
                adam_step(&mut params, &grads, &mut state, lr, config.weight_decay)?;
                phase1_steps += 1;
                return Ok(());
            }
        }

        let flat: Vec<Vec<f64>> = task_full.iter().map(ParameterSet::flatten).collect();
        let direction = phase_two_direction(&flat, rays, own, &out.losses)?;
        let grads = params.unflatten_like(&direction)?;
        adam_step(&mut params, &grads, &mut state, lr, config.weight_decay)
    })?;

    Ok(PmtlModel {
        network: TrainedNetwork {
            spec: spec.clone(),
            params,
            config: config.clone(),
        },
        ray: rays[own],
        reached_region: reached,
    })
}

/// Trains `ray_count` independent models, one per cone. Two tasks only; a
/// single task degenerates to Single Task training for every ray.
pub fn train_pmtl(spec: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<Vec<PmtlModel>> {
    let Method::Pmtl { ray_count } = config.method else {
        return Err(Error::InvalidConfig(format!("train_pmtl got {}", config.method)));
    };
    check_data(spec, train, 0)?;
    config.validate(spec.task_count)?;
    let model_config = |k: usize| SolverConfig {
        seed: seeds::derive(seeds::derive(config.seed, stream::MODEL), k as u64),
        ..config.clone()
    };
    match spec.task_count {
        1 => (0..ray_count)
            .map(|_| {
                Ok(PmtlModel {
                    network: train_single_task(0, spec, train, config)?,
                    ray: [1.0, 0.0],
                    reached_region: true,
                })
            })
            .collect(),
        2 => {
            let rays = pmtl_rays(ray_count);
            (0..ray_count).map(|k| train_one(spec, train, &model_config(k), &rays, k)).collect()
        }
        j => Err(Error::InvalidConfig(format!("simplified pmtl supports at most 2 tasks, got {j}"))),
    }
}

/// PMTL on the analytic problem with plain gradient steps `x ← x − lr·d`.
/// Returns the final decision vector of each model and whether phase 1
/// reached its cone.
pub fn pmtl_analytic(
    problem: &AnalyticProblem,
    starts: &[Vec<f64>],
    lr: f64,
    steps: usize,
    phase1_budget: usize,
) -> Result<Vec<(Vec<f64>, bool)>> {
    if starts.len() < 2 {
        return Err(Error::InvalidConfig("pmtl needs at least 2 rays".into()));
    }
    let rays = pmtl_rays(starts.len());
    starts
        .iter()
        .enumerate()
        .map(|(own, x0)| {
            let mut x = x0.clone();
            let mut reached = false;
            let mut step = 0;
            while step < phase1_budget.min(steps) {
                let losses = analytic_eval(problem, &x)?;
                let violated: Vec<usize> = region_constraints(&rays, own, losses.values())
                    .into_iter()
                    .filter(|(_, g)| *g > 0.0)
                    .map(|(l, _)| l)
                    .collect();
                if violated.is_empty() {
                    reached = true;
                    break;
                }
                let (g1, g2) = analytic_grads(problem, &x)?;
                for l in violated {
                    let w = constraint_weights(&rays, own, l);
                    for i in 0..x.len() {
                        x[i] -= lr * (w[0] * g1[i] + w[1] * g2[i]);
                    }
                }
                step += 1;
            }
            if !reached {
                reached = region_violation(&rays, own, analytic_eval(problem, &x)?.values()) <= 0.0;
                if !reached {
                    log::warn!("pmtl ray {own}: phase 1 did not reach its region within {phase1_budget} steps");
                }
            }
            while step < steps {
                let losses = analytic_eval(problem, &x)?;
                let (g1, g2) = analytic_grads(problem, &x)?;
                let d = phase_two_direction(&[g1, g2], &rays, own, losses.values())?;
                for (xi, di) in x.iter_mut().zip(&d) {
                    *xi -= lr * di;
                }
                step += 1;
            }
            Ok((x, reached))
        })
        .collect()
}

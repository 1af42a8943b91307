//! Preference-conditioned training: the ray is appended to every input row
//! and the network descends `Σ r_j L_j − λ·cos(r, L)`.

use super::config::{Method, SolverConfig};
use super::preference::{PreferenceRay, PreferenceSampler};
use super::train::{check_data, for_each_batch, init_params, Observer, TrainedNetwork};
use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::network::{custom_loss_grads, weighted_sum};
use crate::autodiff::{adam_step, NetworkSpec, OptimizerState};
use crate::error::{Error, Result};
use crate::problems::Split;
use crate::seeds::{self, stream};

/// Where training rays come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RaySource {
    Dirichlet(f64),
    Fixed(PreferenceRay),
}

/// Records `cosmos_loss` on the graph. The cosine nodes are omitted when
/// `λ = 0`, so the root is then exactly the scalarized loss.
pub fn cosmos_root(graph: &mut Graph, losses: &[Var], ray: &PreferenceRay, lambda: f64) -> Var {
    let scalarized = weighted_sum(graph, losses, ray.weights());
    let loss_sq: f64 = losses.iter().map(|l| graph.scalar(*l).powi(2)).sum();
    let ray_norm = ray.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
    if lambda == 0.0 || loss_sq == 0.0 {
        return scalarized;
    }
    let mut sq = graph.mul(losses[0], losses[0]);
    for l in &losses[1..] {
        let term = graph.mul(*l, *l);
        sq = graph.add(sq, term);
    }
    let loss_norm = graph.sqrt(sq);
    let denom = graph.scale(loss_norm, ray_norm);
    let cos = graph.div(scalarized, denom);
    let penalty = graph.scale(cos, -lambda);
    graph.add(scalarized, penalty)
}

/// Trains a network whose input carries `J` extra ray features.
pub fn train_cosmos_with(
    spec: &NetworkSpec,
    train: &Split,
    config: &SolverConfig,
    lambda: f64,
    rays: RaySource,
    mut observer: Option<Observer<'_>>,
) -> Result<TrainedNetwork> {
    let tasks = spec.task_count;
    check_data(spec, train, tasks)?;
    config.validate(tasks)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {lambda}")));
    }
    let mut sampler = match &rays {
        RaySource::Dirichlet(alpha) => Some(PreferenceSampler::new(
            *alpha,
            tasks,
            seeds::derive(config.seed, stream::RAYS),
        )?),
        RaySource::Fixed(ray) if ray.dim() != tasks => {
            return Err(Error::DimensionMismatch {
                expected: tasks,
                found: ray.dim(),
            })
        }
        RaySource::Fixed(_) => None,
    };

    let mut params = init_params(spec, config.seed);
    let mut state = OptimizerState::new(&params);
    let mut step_count = 0usize;
    for_each_batch(train.len(), config, |lr, idx, batch_index| {
        let ray = match (&mut sampler, &rays) {
            (Some(s), _) => s.sample(),
            (None, RaySource::Fixed(r)) => r.clone(),
            (None, RaySource::Dirichlet(_)) => unreachable!("sampler exists"),
        };
        let batch = train.batch(idx, batch_index, ray.weights());
        let (_, _, grads) = custom_loss_grads(spec, &params, &batch, |g, losses| cosmos_root(g, losses, &ray, lambda))?;
        adam_step(&mut params, &grads, &mut state, lr, config.weight_decay)?;
        if let Some(obs) = observer.as_mut() {
            obs(step_count, &params);
        }
        step_count += 1;
        Ok(())
    })?;

    Ok(TrainedNetwork {
        spec: spec.clone(),
        params,
        config: config.clone(),
    })
}

/// COSMOS with Dirichlet(α) ray sampling. `spec` must already include the
/// ray features (see [`NetworkSpec::with_extra_inputs`]).
pub fn train_cosmos(spec: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedNetwork> {
    let Method::Cosmos { alpha, lambda } = config.method else {
        return Err(Error::InvalidConfig(format!("train_cosmos got {}", config.method)));
    };
    train_cosmos_with(spec, train, config, lambda, RaySource::Dirichlet(alpha), None)
}

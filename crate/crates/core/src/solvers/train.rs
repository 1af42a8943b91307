//! Minibatch training for single-network methods: Single Task, fixed-weight
//! scalarization (Uniform included) and MGDA.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Method, SolverConfig};
use super::min_norm::{min_norm_frank_wolfe, NormMode};
use super::preference::PreferenceRay;
use crate::autodiff::{
    adam_step, adam_step_groups, loss_and_grads, lr_at, Checkpoint, GradientSet, LossMode, NetworkSpec,
    OptimizerState, ParameterSet, Partition, ScheduleSpec, Tensor,
};
use crate::error::{Error, Result};
use crate::problems::{epoch_batches, Split};
use crate::seeds::{self, stream};

/// Frank-Wolfe budget used inside training steps.
pub(crate) const MIN_NORM_ITERS: usize = 250;
pub(crate) const MIN_NORM_TOL: f64 = 1e-10;

/// Called after every optimizer step with the global step index.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &ParameterSet);

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    pub spec: NetworkSpec,
    pub params: ParameterSet,
    pub config: SolverConfig,
}

impl TrainedNetwork {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.spec.clone(), self.params.clone()).with_meta("config", self.config.describe())
    }
}

pub(crate) fn check_data(spec: &NetworkSpec, train: &Split, extra_inputs: usize) -> Result<()> {
    spec.validate()?;
    if spec.input_dim != train.pixel_count + extra_inputs {
        return Err(Error::Shape(format!(
            "network expects {} inputs, data provides {}",
            spec.input_dim,
            train.pixel_count + extra_inputs
        )));
    }
    if spec.task_count != train.task_count() {
        return Err(Error::DimensionMismatch {
            expected: train.task_count(),
            found: spec.task_count,
        });
    }
    Ok(())
}

pub(crate) fn init_params(spec: &NetworkSpec, seed: u64) -> ParameterSet {
    ParameterSet::init(spec, &mut ChaCha8Rng::seed_from_u64(seeds::derive(seed, stream::INIT)))
}

/// Runs `step(lr, batch_indices, batch_index)` over every minibatch of every epoch.
pub(crate) fn for_each_batch(
    train_len: usize,
    config: &SolverConfig,
    mut step: impl FnMut(f64, &[usize], usize) -> Result<()>,
) -> Result<()> {
    if config.epochs == 0 {
        return Ok(());
    }
    let schedule = ScheduleSpec::for_epochs(config.schedule, config.lr, config.epochs);
    let epoch_stream = seeds::derive(config.seed, stream::EPOCH);
    for epoch in 0..config.epochs {
        let lr = lr_at(&schedule, epoch)?;
        let batches = epoch_batches(train_len, config.batch_size, seeds::derive(epoch_stream, epoch as u64))?;
        for (i, idx) in batches.iter().enumerate() {
            step(lr, idx, i)?;
        }
    }
    Ok(())
}

pub(crate) fn flatten(tensors: &[Tensor]) -> Vec<f64> {
    tensors.iter().flat_map(|t| t.values().iter().copied()).collect()
}

pub(crate) fn unflatten(template: &[Tensor], flat: &[f64]) -> Vec<Tensor> {
    let mut offset = 0;
    template
        .iter()
        .map(|t| {
            let n = t.len();
            let out = Tensor::new(t.shape().to_vec(), flat[offset..offset + n].to_vec()).expect("template shape");
            offset += n;
            out
        })
        .collect()
}

/// Shared-parameter direction for one MGDA step: the min-norm element of the
/// (normalized) per-task trunk gradients.
pub fn mgda_shared_direction(shared: &[Vec<Tensor>], losses: &[f64], mode: NormMode) -> Result<Vec<Tensor>> {
    let flat: Vec<Vec<f64>> = shared.iter().map(|g| flatten(g)).collect();
    let result = min_norm_frank_wolfe(&flat, mode, losses, MIN_NORM_ITERS, MIN_NORM_TOL)?;
    Ok(unflatten(&shared[0], &result.direction))
}

/// Trains one shared-trunk network with a single-network method.
pub fn train_network(
    spec: &NetworkSpec,
    train: &Split,
    config: &SolverConfig,
    mut observer: Option<Observer<'_>>,
) -> Result<TrainedNetwork> {
    check_data(spec, train, 0)?;
    config.validate(spec.task_count)?;
    let tasks = spec.task_count;

    let mut params = init_params(spec, config.seed);
    let mut state = OptimizerState::new(&params);
    let mut step_count = 0usize;

    let uniform;
    let weights: Option<&PreferenceRay> = match &config.method {
        Method::Uniform => {
            uniform = PreferenceRay::uniform(tasks);
            Some(&uniform)
        }
        Method::FixedWeight(ray) => Some(ray),
        Method::SingleTask(_) | Method::Mgda(_) => None,
        other => {
            return Err(Error::InvalidConfig(format!(
                "{other} does not train a single plain network"
            )))
        }
    };

    for_each_batch(train.len(), config, |lr, idx, batch_index| {
        let batch = train.batch(idx, batch_index, &[]);
        match &config.method {
            Method::SingleTask(task) => {
                let grads = loss_and_grads(spec, &params, &batch, &LossMode::Task(*task))?.combined();
                let keep = *task;
                adam_step_groups(&mut params, &grads, &mut state, lr, config.weight_decay, |p| {
                    matches!(p, Partition::Shared) || p == Partition::Task(keep)
                })?;
            }
            Method::Mgda(mode) => {
                let out = loss_and_grads(spec, &params, &batch, &LossMode::PerTaskShared)?;
                let GradientSet::PerTask { shared, heads } = out.grads else {
                    unreachable!("per-task mode")
                };
                let direction = mgda_shared_direction(&shared, &out.losses, *mode)?;
                let grads = ParameterSet {
                    shared: direction,
                    per_task: heads,
                };
                adam_step(&mut params, &grads, &mut state, lr, config.weight_decay)?;
            }
            _ => {
                let w = weights.expect("scalarized method").weights().to_vec();
                let grads = loss_and_grads(spec, &params, &batch, &LossMode::Scalarized(w))?.combined();
                adam_step(&mut params, &grads, &mut state, lr, config.weight_decay)?;
            }
        }
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

/// Trains a full network on one task's loss; the other heads are never updated.
pub fn train_single_task(task: usize, spec: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedNetwork> {
    train_network(spec, train, &config.with_method(Method::SingleTask(task)), None)
}

/// Descends `Σ ray_j L_j`.
pub fn train_scalarized(ray: &PreferenceRay, spec: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedNetwork> {
    train_network(spec, train, &config.with_method(Method::FixedWeight(ray.clone())), None)
}

/// MGDA: the trunk follows the min-norm combination of per-task gradients,
/// each head follows its own task gradient.
pub fn train_mgda(mode: NormMode, spec: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedNetwork> {
    train_network(spec, train, &config.with_method(Method::Mgda(mode)), None)
}

//! Training strategies, the min-norm solver and model evaluation.

pub mod analytic;
pub mod config;
pub mod cosmos;
pub mod eval;
pub mod min_norm;
pub mod phn;
pub mod pmtl;
pub mod preference;
pub mod train;

pub use analytic::{mgda_analytic, scalarized_analytic, AnalyticRun};
pub use config::{Method, MethodKind, SolverConfig};
pub use cosmos::{cosmos_root, train_cosmos, train_cosmos_with, RaySource};
pub use eval::{combine_single_task, evaluate, evaluate_logits, evaluate_params, EvalPoint, TrainedModel, DEFAULT_EVAL_RAYS};
pub use min_norm::{min_norm_frank_wolfe, normalize_gradients, two_point_weight, MinNormResult, NormMode};
pub use phn::{phn_finite_diff_check, phn_loss_and_grads, phn_target_weights, train_phn, train_phn_with, Hypernetwork};
pub use pmtl::{pmtl_analytic, pmtl_rays, region_violation, train_pmtl, PmtlModel};
pub use preference::{
    cosine_similarity, cosmos_loss, evaluation_rays, sample_preference, simplex_lattice, PreferenceRay,
    PreferenceSampler,
};
pub use train::{train_mgda, train_network, train_scalarized, train_single_task, TrainedNetwork};

use crate::autodiff::NetworkSpec;
use crate::error::{Error, Result};
use crate::problems::Split;

/// Trains whatever `config.method` asks for. `base` is the plain target
/// architecture; COSMOS widens its input by the ray features itself.
pub fn train_model(base: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedModel> {
    Ok(match &config.method {
        Method::Cosmos { .. } => TrainedModel::Conditioned(train_cosmos(
            &base.with_extra_inputs(base.task_count),
            train,
            config,
        )?),
        Method::Phn { .. } => TrainedModel::Hyper(train_phn(base, train, config)?),
        Method::Pmtl { .. } => TrainedModel::Ensemble(train_pmtl(base, train, config)?),
        _ => TrainedModel::Network(train_network(base, train, config, None)?),
    })
}

/// One Single Task model per task, all sharing `config`'s hyperparameters.
pub fn train_single_task_set(base: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedModel> {
    (0..base.task_count)
        .map(|t| train_single_task(t, base, train, config))
        .collect::<Result<Vec<_>>>()
        .map(TrainedModel::SingleTaskSet)
}

/// Trains one harness method: Single Task yields one model per task, every
/// other kind goes through [`train_model`] and must match `config.method`.
pub fn train_for_kind(kind: MethodKind, base: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<TrainedModel> {
    match kind {
        MethodKind::SingleTask => train_single_task_set(base, train, config),
        _ if MethodKind::of(&config.method) == Some(kind) => train_model(base, train, config),
        _ => Err(Error::InvalidConfig(format!("method {} does not match {kind}", config.method))),
    }
}

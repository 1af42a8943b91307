//! Toy Pareto hypernetwork: a small MLP maps a preference ray to every
//! parameter of the target network. Only the linear-scalarization solver is
//! implemented.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Method, SolverConfig};
use super::preference::{PreferenceRay, PreferenceSampler};
use super::train::{check_data, for_each_batch, init_params, Observer};
use crate::autodiff::gradcheck::{central_differences, max_relative_error};
use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::network::{check_labels, forward_on, weighted_sum, ParamVars};
use crate::autodiff::{adam_step, param_count, Batch, NetworkSpec, OptimizerState, ParameterSet, Tensor};
use crate::error::{Error, Result};
use crate::problems::Split;
use crate::seeds::{self, stream};

/// Default width of the two hidden hypernetwork layers.
pub const DEFAULT_HIDDEN: usize = 64;
/// Scale applied to the initial output weights so that every ray starts near
/// the same target initialization.
pub const OUTPUT_WEIGHT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypernetwork {
    pub target: NetworkSpec,
    /// Architecture of the hypernetwork itself: `J` inputs, one output head
    /// with `param_count(target)` units.
    pub spec: NetworkSpec,
    pub params: ParameterSet,
}

impl Hypernetwork {
    pub fn new(target: &NetworkSpec, hidden: usize, seed: u64) -> Result<Self> {
        target.validate()?;
        if hidden == 0 {
            return Err(Error::InvalidConfig("hypernetwork hidden width must be positive".into()));
        }
        let spec = NetworkSpec {
            input_dim: target.task_count,
            trunk_widths: vec![hidden, hidden],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 1,
            classes_per_task: param_count(target),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, stream::MODEL));
        let mut params = ParameterSet::init(&spec, &mut rng);
        let head = &mut params.per_task[0];
        for w in head[0].values_mut() {
            *w *= OUTPUT_WEIGHT_SCALE;
        }
        head[1] = Tensor::new(head[1].shape().to_vec(), init_params(target, seed).flatten())?;
        Ok(Self {
            target: target.clone(),
            spec,
            params,
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.scalar_count()
    }
}

fn ray_input(ray: &PreferenceRay) -> Tensor {
    Tensor::matrix(1, ray.dim(), ray.weights().to_vec()).expect("ray row")
}

/// Records the hypernetwork on `graph` and carves its output into target
/// parameter nodes.
fn generate_on(graph: &mut Graph, hyper: &Hypernetwork, hyper_vars: &ParamVars, ray: &PreferenceRay) -> ParamVars {
    let x = graph.input(ray_input(ray));
    let flat = forward_on(graph, hyper_vars, x)[0];
    let template = ParameterSet::zeros(&hyper.target);
    let mut offset = 0;
    let mut carve = |graph: &mut Graph, t: &Tensor| {
        let v = graph.window(flat, offset, t.shape());
        offset += t.len();
        v
    };
    let shared = template.shared.iter().map(|t| carve(graph, t)).collect();
    let per_task = template
        .per_task
        .iter()
        .map(|g| g.iter().map(|t| carve(graph, t)).collect())
        .collect();
    ParamVars { shared, per_task }
}

fn check_ray(hyper: &Hypernetwork, ray: &PreferenceRay) -> Result<()> {
    if ray.dim() != hyper.target.task_count {
        return Err(Error::DimensionMismatch {
            expected: hyper.target.task_count,
            found: ray.dim(),
        });
    }
    Ok(())
}

/// Target-network parameters generated for `ray`.
pub fn phn_target_weights(hyper: &Hypernetwork, ray: &PreferenceRay) -> Result<ParameterSet> {
    check_ray(hyper, ray)?;
    let mut graph = Graph::new();
    let hv = ParamVars::bind(&mut graph, &hyper.params);
    let target = generate_on(&mut graph, hyper, &hv, ray);
    let mut out = ParameterSet::zeros(&hyper.target);
    for (t, v) in out.tensors_mut().zip(target.shared.iter().chain(target.per_task.iter().flatten())) {
        t.values_mut().copy_from_slice(graph.value(*v).values());
    }
    Ok(out)
}

/// Per-task losses of the generated network and the gradient of
/// `Σ r_j L_j` with respect to the hypernetwork parameters.
pub fn phn_loss_and_grads(hyper: &Hypernetwork, batch: &Batch, ray: &PreferenceRay) -> Result<(Vec<f64>, ParameterSet)> {
    check_ray(hyper, ray)?;
    check_labels(&hyper.target, batch)?;
    if batch.inputs.cols() != hyper.target.input_dim {
        return Err(Error::Shape(format!(
            "inputs have {} features, target expects {}",
            batch.inputs.cols(),
            hyper.target.input_dim
        )));
    }
    let mut graph = Graph::new();
    let hv = ParamVars::bind(&mut graph, &hyper.params);
    let target = generate_on(&mut graph, hyper, &hv, ray);
    let x = graph.input(batch.inputs.clone());
    let logits = forward_on(&mut graph, &target, x);
    let loss_vars: Vec<Var> = logits
        .iter()
        .zip(&batch.labels)
        .map(|(z, y)| graph.softmax_ce(*z, y))
        .collect();
    let losses: Vec<f64> = loss_vars.iter().map(|v| graph.scalar(*v)).collect();
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFiniteLoss { batch: batch.index });
    }
    let root = weighted_sum(&mut graph, &loss_vars, ray.weights());
    let g = graph.backward(root);
    let grads = ParameterSet {
        shared: hv.shared.iter().zip(&hyper.params.shared).map(|(v, t)| g.tensor(*v, t)).collect(),
        per_task: hv
            .per_task
            .iter()
            .zip(&hyper.params.per_task)
            .map(|(vs, ts)| vs.iter().zip(ts).map(|(v, t)| g.tensor(*v, t)).collect())
            .collect(),
    };
    Ok((losses, grads))
}

/// Maximum relative error of the hypernetwork gradient against central
/// differences of the scalarized loss.
pub fn phn_finite_diff_check(hyper: &Hypernetwork, batch: &Batch, ray: &PreferenceRay, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::InvalidConfig(format!("eps {eps} outside (0, 1e-2]")));
    }
    let (_, grads) = phn_loss_and_grads(hyper, batch, ray)?;
    let x0 = hyper.params.flatten();
    let mut probe = hyper.clone();
    let numeric = central_differences(&x0, eps, |x| {
        probe.params = hyper.params.unflatten_like(x).expect("same layout");
        phn_loss_and_grads(&probe, batch, ray)
            .map(|(l, _)| l.iter().zip(ray.weights()).map(|(l, w)| l * w).sum())
            .unwrap_or(f64::NAN)
    });
    Ok(max_relative_error(&grads.flatten(), &numeric))
}

/// Trains a hypernetwork for `target` with rays drawn from Dirichlet(α).
pub fn train_phn_with(
    target: &NetworkSpec,
    train: &Split,
    config: &SolverConfig,
    hidden: usize,
    mut observer: Option<Observer<'_>>,
) -> Result<Hypernetwork> {
    let Method::Phn { alpha } = config.method else {
        return Err(Error::InvalidConfig(format!("train_phn got {}", config.method)));
    };
    check_data(target, train, 0)?;
    config.validate(target.task_count)?;
    let mut hyper = Hypernetwork::new(target, hidden, config.seed)?;
    let mut sampler = PreferenceSampler::new(alpha, target.task_count, seeds::derive(config.seed, stream::RAYS))?;
    let mut state = OptimizerState::new(&hyper.params);
    let mut step_count = 0usize;
    for_each_batch(train.len(), config, |lr, idx, batch_index| {
        let ray = sampler.sample();
        let batch = train.batch(idx, batch_index, &[]);
        let (_, grads) = phn_loss_and_grads(&hyper, &batch, &ray)?;
        adam_step(&mut hyper.params, &grads, &mut state, lr, config.weight_decay)?;
        if let Some(obs) = observer.as_mut() {
            obs(step_count, &hyper.params);
        }
        step_count += 1;
        Ok(())
    })?;
    Ok(hyper)
}

pub fn train_phn(target: &NetworkSpec, train: &Split, config: &SolverConfig) -> Result<Hypernetwork> {
    train_phn_with(target, train, config, DEFAULT_HIDDEN, None)
}

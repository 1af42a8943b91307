//! Shared-trunk network with one classification head per task.
//!
//! The trunk is a stack of dense ReLU layers whose widths scale with the
//! width multiplier; heads keep their base widths and end in a linear layer
//! producing `classes_per_task` logits. Parameters are partitioned into the
//! shared trunk and one group per head.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Width after applying the multiplier, rounded half-up, never below 1.
pub fn realized_width(base: usize, multiplier: f64) -> usize {
    ((base as f64 * multiplier + 0.5).floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub trunk_widths: Vec<usize>,
    pub width_multiplier: f64,
    pub head_widths: Vec<usize>,
    pub task_count: usize,
    pub classes_per_task: usize,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("network spec: {msg}")));
        if self.input_dim == 0 {
            return bad("input_dim must be positive");
        }
        if !(self.width_multiplier.is_finite() && self.width_multiplier > 0.0) {
            return bad("width multiplier must be positive");
        }
        if self.task_count == 0 || self.classes_per_task == 0 {
            return bad("task_count and classes_per_task must be positive");
        }
        if self.trunk_widths.contains(&0) || self.head_widths.contains(&0) {
            return bad("base widths must be positive");
        }
        Ok(())
    }

    pub fn realized_trunk_widths(&self) -> Vec<usize> {
        self.trunk_widths
            .iter()
            .map(|&w| realized_width(w, self.width_multiplier))
            .collect()
    }

    pub fn trunk_output_dim(&self) -> usize {
        self.realized_trunk_widths()
            .last()
            .copied()
            .unwrap_or(self.input_dim)
    }

    /// `(fan_in, fan_out)` of every trunk layer.
    pub fn trunk_layers(&self) -> Vec<(usize, usize)> {
        chain(self.input_dim, &self.realized_trunk_widths())
    }

    /// `(fan_in, fan_out)` of every layer of one head, output layer included.
    pub fn head_layers(&self) -> Vec<(usize, usize)> {
        let mut widths = self.head_widths.clone();
        widths.push(self.classes_per_task);
        chain(self.trunk_output_dim(), &widths)
    }

    /// Same architecture at a different width multiplier.
    pub fn with_multiplier(&self, c: f64) -> Self {
        Self {
            width_multiplier: c,
            ..self.clone()
        }
    }

    /// Same architecture with `extra` additional input features.
    pub fn with_extra_inputs(&self, extra: usize) -> Self {
        Self {
            input_dim: self.input_dim + extra,
            ..self.clone()
        }
    }
}

fn chain(mut fan_in: usize, widths: &[usize]) -> Vec<(usize, usize)> {
    widths
        .iter()
        .map(|&w| {
            let layer = (fan_in, w);
            fan_in = w;
            layer
        })
        .collect()
}

fn join(ws: &[usize]) -> String {
    ws.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn split_widths(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| w.parse().map_err(|_| Error::Parse(format!("bad width {w:?}"))))
        .collect()
}

/// Compact single-line form: `input=144 trunk=32,16 c=1 heads= tasks=2 classes=10`.
impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "input={} trunk={} c={} heads={} tasks={} classes={}",
            self.input_dim,
            join(&self.trunk_widths),
            self.width_multiplier,
            join(&self.head_widths),
            self.task_count,
            self.classes_per_task
        )
    }
}

impl FromStr for NetworkSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = NetworkSpec {
            input_dim: 0,
            trunk_widths: Vec::new(),
            width_multiplier: 1.0,
            head_widths: Vec::new(),
            task_count: 0,
            classes_per_task: 0,
        };
        let num = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| Error::Parse(format!("bad integer {v:?}")))
        };
        for field in s.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
            match key {
                "input" => spec.input_dim = num(value)?,
                "trunk" => spec.trunk_widths = split_widths(value)?,
                "c" => {
                    spec.width_multiplier = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad multiplier {value:?}")))?
                }
                "heads" => spec.head_widths = split_widths(value)?,
                "tasks" => spec.task_count = num(value)?,
                "classes" => spec.classes_per_task = num(value)?,
                other => return Err(Error::Parse(format!("unknown network field {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Total scalar parameters (weights and biases) over trunk and all heads.
pub fn param_count(spec: &NetworkSpec) -> usize {
    let dense = |layers: Vec<(usize, usize)>| -> usize {
        layers.iter().map(|(m, n)| m * n + n).sum()
    };
    dense(spec.trunk_layers()) + spec.task_count * dense(spec.head_layers())
}

/// Which parameter group a tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Shared,
    Task(usize),
}

/// Network parameters split into the shared trunk and one group per task.
///
/// Each group lists `[W0, b0, W1, b1, ...]` with `W` of shape `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub shared: Vec<Tensor>,
    pub per_task: Vec<Vec<Tensor>>,
}

fn dense_zeros(layers: &[(usize, usize)]) -> Vec<Tensor> {
    layers
        .iter()
        .flat_map(|&(m, n)| [Tensor::zeros(&[m, n]), Tensor::zeros(&[n])])
        .collect()
}

fn dense_init(layers: &[(usize, usize)], rng: &mut impl Rng) -> Vec<Tensor> {
    let mut out = Vec::with_capacity(layers.len() * 2);
    for &(m, n) in layers {
        // He-uniform weights, uniform(±1/sqrt(fan_in)) biases.
        let w_bound = (6.0 / m as f64).sqrt();
        let b_bound = 1.0 / (m as f64).sqrt();
        let w = (0..m * n).map(|_| rng.random_range(-w_bound..w_bound)).collect();
        let b = (0..n).map(|_| rng.random_range(-b_bound..b_bound)).collect();
        out.push(Tensor::new(vec![m, n], w).expect("weight shape"));
        out.push(Tensor::new(vec![n], b).expect("bias shape"));
    }
    out
}

impl ParameterSet {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let head = spec.head_layers();
        Self {
            shared: dense_zeros(&spec.trunk_layers()),
            per_task: (0..spec.task_count).map(|_| dense_zeros(&head)).collect(),
        }
    }

    pub fn init(spec: &NetworkSpec, rng: &mut impl Rng) -> Self {
        let shared = dense_init(&spec.trunk_layers(), rng);
        let head = spec.head_layers();
        let per_task = (0..spec.task_count).map(|_| dense_init(&head, rng)).collect();
        Self { shared, per_task }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            shared: self.shared.iter().map(Tensor::zeros_like).collect(),
            per_task: self
                .per_task
                .iter()
                .map(|g| g.iter().map(Tensor::zeros_like).collect())
                .collect(),
        }
    }

    pub fn group(&self, p: Partition) -> &[Tensor] {
        match p {
            Partition::Shared => &self.shared,
            Partition::Task(j) => &self.per_task[j],
        }
    }

    pub fn group_mut(&mut self, p: Partition) -> &mut Vec<Tensor> {
        match p {
            Partition::Shared => &mut self.shared,
            Partition::Task(j) => &mut self.per_task[j],
        }
    }

    pub fn partitions(&self) -> impl Iterator<Item = Partition> {
        std::iter::once(Partition::Shared).chain((0..self.per_task.len()).map(Partition::Task))
    }

    /// Every tensor, shared first, then heads in task order.
    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.shared.iter().chain(self.per_task.iter().flatten())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.shared.iter_mut().chain(self.per_task.iter_mut().flatten())
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors().map(Tensor::len).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().flat_map(|t| t.values().iter().copied()).collect()
    }

    /// Inverse of [`flatten`](Self::flatten) using `self` as the shape template.
    pub fn unflatten_like(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.scalar_count() {
            return Err(Error::DimensionMismatch {
                expected: self.scalar_count(),
                found: flat.len(),
            });
        }
        let mut out = self.clone();
        let mut offset = 0;
        for t in out.tensors_mut() {
            let n = t.len();
            t.values_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(Tensor::is_finite)
    }

    pub fn matches_spec(&self, spec: &NetworkSpec) -> bool {
        let template = Self::zeros(spec);
        self.shared.len() == template.shared.len()
            && self.per_task.len() == template.per_task.len()
            && self
                .tensors()
                .zip(template.tensors())
                .all(|(a, b)| a.shape() == b.shape())
    }
}

/// A minibatch: inputs (`batch × input_dim`) and one label column per task.
#[derive(Debug, Clone)]
pub struct Batch {
    /// Position of the batch within its epoch, reported on failures.
    pub index: usize,
    pub inputs: Tensor,
    pub labels: Vec<Vec<usize>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameter nodes of one network on a graph, mirroring [`ParameterSet`].
#[derive(Debug, Clone)]
pub(crate) struct ParamVars {
    pub shared: Vec<Var>,
    pub per_task: Vec<Vec<Var>>,
}

impl ParamVars {
    pub fn bind(graph: &mut Graph, params: &ParameterSet) -> Self {
        let shared = params.shared.iter().map(|t| graph.leaf(t.clone())).collect();
        let per_task = params
            .per_task
            .iter()
            .map(|g| g.iter().map(|t| graph.leaf(t.clone())).collect())
            .collect();
        Self { shared, per_task }
    }
}

fn dense_stack(graph: &mut Graph, mut x: Var, layers: &[Var], relu_last: bool) -> Var {
    let count = layers.len() / 2;
    for (i, wb) in layers.chunks(2).enumerate() {
        let z = graph.matmul(x, wb[0]);
        x = graph.add_row(z, wb[1]);
        if relu_last || i + 1 < count {
            x = graph.relu(x);
        }
    }
    x
}

/// Records the forward pass on `graph`; returns one logits node per task.
pub(crate) fn forward_on(graph: &mut Graph, vars: &ParamVars, input: Var) -> Vec<Var> {
    let trunk = dense_stack(graph, input, &vars.shared, true);
    vars.per_task
        .iter()
        .map(|head| dense_stack(graph, trunk, head, false))
        .collect()
}

pub(crate) fn check_input(spec: &NetworkSpec, params: &ParameterSet, inputs: &Tensor) -> Result<()> {
    if inputs.shape().len() != 2 || inputs.cols() != spec.input_dim {
        return Err(Error::Shape(format!(
            "inputs of shape {:?} do not match input_dim {}",
            inputs.shape(),
            spec.input_dim
        )));
    }
    if !params.matches_spec(spec) {
        return Err(Error::Shape("parameters do not match the network spec".into()));
    }
    Ok(())
}

/// Per-task logits, each `batch × classes_per_task`. The trunk runs once.
pub fn forward(spec: &NetworkSpec, params: &ParameterSet, inputs: &Tensor) -> Result<Vec<Tensor>> {
    check_input(spec, params, inputs)?;
    let mut graph = Graph::new();
    let vars = ParamVars::bind(&mut graph, params);
    let x = graph.input(inputs.clone());
    let logits = forward_on(&mut graph, &vars, x);
    Ok(logits.into_iter().map(|v| graph.value(v).clone()).collect())
}

/// How task losses are differentiated.
#[derive(Debug, Clone, PartialEq)]
pub enum LossMode {
    /// One gradient per task with respect to the trunk, plus each head's own gradient.
    PerTaskShared,
    /// A single gradient of `Σ w_j L_j` over all parameters.
    Scalarized(Vec<f64>),
    /// Gradient of one task loss alone.
    Task(usize),
}

/// Gradients as produced by [`loss_and_grads`].
#[derive(Debug, Clone)]
pub enum GradientSet {
    PerTask {
        /// `shared[j]` is `∂L_j/∂θ_s`.
        shared: Vec<Vec<Tensor>>,
        /// `heads[j]` is `∂L_j/∂θ_j`.
        heads: Vec<Vec<Tensor>>,
    },
    Combined(ParameterSet),
}

#[derive(Debug, Clone)]
pub struct LossGrads {
    pub losses: Vec<f64>,
    pub grads: GradientSet,
}

impl LossGrads {
    pub fn combined(self) -> ParameterSet {
        match self.grads {
            GradientSet::Combined(p) => p,
            GradientSet::PerTask { .. } => panic!("expected a combined gradient"),
        }
    }
}

pub(crate) fn check_labels(spec: &NetworkSpec, batch: &Batch) -> Result<()> {
    if batch.labels.len() != spec.task_count {
        return Err(Error::DimensionMismatch {
            expected: spec.task_count,
            found: batch.labels.len(),
        });
    }
    for labels in &batch.labels {
        if labels.len() != batch.len() {
            return Err(Error::Shape("one label per example and task is required".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= spec.classes_per_task) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} out of range for {} classes",
                spec.classes_per_task
            )));
        }
    }
    Ok(())
}

/// Builds `Σ w_j L_j` on the graph, skipping nothing so zero weights still
/// contribute exact zeros.
pub(crate) fn weighted_sum(graph: &mut Graph, losses: &[Var], weights: &[f64]) -> Var {
    let mut total = graph.scale(losses[0], weights[0]);
    for (l, w) in losses.iter().zip(weights).skip(1) {
        let term = graph.scale(*l, *w);
        total = graph.add(total, term);
    }
    total
}

/// Mean cross-entropy per task and the gradients requested by `mode`.
pub fn loss_and_grads(
    spec: &NetworkSpec,
    params: &ParameterSet,
    batch: &Batch,
    mode: &LossMode,
) -> Result<LossGrads> {
    check_input(spec, params, &batch.inputs)?;
    check_labels(spec, batch)?;

    let mut graph = Graph::new();
    let vars = ParamVars::bind(&mut graph, params);
    let x = graph.input(batch.inputs.clone());
    let logits = forward_on(&mut graph, &vars, x);
    let loss_vars: Vec<Var> = logits
        .iter()
        .zip(&batch.labels)
        .map(|(z, y)| graph.softmax_ce(*z, y))
        .collect();
    let losses: Vec<f64> = loss_vars.iter().map(|v| graph.scalar(*v)).collect();
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFiniteLoss { batch: batch.index });
    }

    let collect = |grads: &super::graph::Gradients, vars: &[Var], like: &[Tensor]| -> Vec<Tensor> {
        vars.iter().zip(like).map(|(v, t)| grads.tensor(*v, t)).collect()
    };

    let grads = match mode {
        LossMode::PerTaskShared => {
            let mut shared = Vec::with_capacity(spec.task_count);
            let mut heads = Vec::with_capacity(spec.task_count);
            for (j, l) in loss_vars.iter().enumerate() {
                let g = graph.backward(*l);
                shared.push(collect(&g, &vars.shared, &params.shared));
                heads.push(collect(&g, &vars.per_task[j], &params.per_task[j]));
            }
            GradientSet::PerTask { shared, heads }
        }
        LossMode::Scalarized(_) | LossMode::Task(_) => {
            let root = match mode {
                LossMode::Scalarized(w) => {
                    if w.len() != spec.task_count {
                        return Err(Error::DimensionMismatch {
                            expected: spec.task_count,
                            found: w.len(),
                        });
                    }
                    weighted_sum(&mut graph, &loss_vars, w)
                }
                LossMode::Task(j) => *loss_vars
                    .get(*j)
                    .ok_or_else(|| Error::InvalidConfig(format!("task {j} out of range")))?,
                LossMode::PerTaskShared => unreachable!(),
            };
            let g = graph.backward(root);
            GradientSet::Combined(ParameterSet {
                shared: collect(&g, &vars.shared, &params.shared),
                per_task: vars
                    .per_task
                    .iter()
                    .zip(&params.per_task)
                    .map(|(v, p)| collect(&g, v, p))
                    .collect(),
            })
        }
    };
    Ok(LossGrads { losses, grads })
}

/// Differentiates an arbitrary scalar built from the per-task loss nodes.
/// Returns the task losses, the root value and the gradient over all parameters.
pub(crate) fn custom_loss_grads(
    spec: &NetworkSpec,
    params: &ParameterSet,
    batch: &Batch,
    root: impl FnOnce(&mut Graph, &[Var]) -> Var,
) -> Result<(Vec<f64>, f64, ParameterSet)> {
    check_input(spec, params, &batch.inputs)?;
    check_labels(spec, batch)?;
    let mut graph = Graph::new();
    let vars = ParamVars::bind(&mut graph, params);
    let x = graph.input(batch.inputs.clone());
    let logits = forward_on(&mut graph, &vars, x);
    let loss_vars: Vec<Var> = logits
        .iter()
        .zip(&batch.labels)
        .map(|(z, y)| graph.softmax_ce(*z, y))
        .collect();
    let losses: Vec<f64> = loss_vars.iter().map(|v| graph.scalar(*v)).collect();
    let root = root(&mut graph, &loss_vars);
    let value = graph.scalar(root);
    if losses.iter().any(|l| !l.is_finite()) || !value.is_finite() {
        return Err(Error::NonFiniteLoss { batch: batch.index });
    }
    let g = graph.backward(root);
    let grads = ParameterSet {
        shared: vars.shared.iter().zip(&params.shared).map(|(v, t)| g.tensor(*v, t)).collect(),
        per_task: vars
            .per_task
            .iter()
            .zip(&params.per_task)
            .map(|(vs, ts)| vs.iter().zip(ts).map(|(v, t)| g.tensor(*v, t)).collect())
            .collect(),
    };
    Ok((losses, value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> NetworkSpec {
        NetworkSpec {
            input_dim: 5,
            trunk_widths: vec![6, 4],
            width_multiplier: 1.0,
            head_widths: vec![3],
            task_count: 2,
            classes_per_task: 3,
        }
    }

    fn batch(spec: &NetworkSpec, n: usize, seed: u64) -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..n * spec.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..spec.task_count)
            .map(|_| (0..n).map(|_| rng.random_range(0..spec.classes_per_task)).collect())
            .collect();
        Batch {
            index: 0,
            inputs: Tensor::matrix(n, spec.input_dim, inputs).unwrap(),
            labels,
        }
    }

    #[test]
    fn realized_widths_round_half_up_with_floor() {
        assert_eq!(realized_width(10, 0.5), 5);
        assert_eq!(realized_width(3, 0.5), 2);
        assert_eq!(realized_width(1, 0.25), 1);
        assert_eq!(realized_width(32, 0.25), 8);
    }

    #[test]
    fn param_count_examples() {
        let single = NetworkSpec {
            input_dim: 7,
            trunk_widths: vec![],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 1,
            classes_per_task: 4,
        };
        assert_eq!(param_count(&single), 7 * 4 + 4);

        let s = spec();
        let trunk = 5 * 6 + 6 + 6 * 4 + 4;
        let head = 4 * 3 + 3 + 3 * 3 + 3;
        assert_eq!(param_count(&s), trunk + 2 * head);
        assert_eq!(ParameterSet::zeros(&s).scalar_count(), param_count(&s));

        let one_hidden = NetworkSpec {
            input_dim: 100,
            trunk_widths: vec![50],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 1,
            classes_per_task: 1,
        };
        let trunk_weights = |c: f64| {
            let s = one_hidden.with_multiplier(c);
            s.trunk_layers().iter().map(|(m, n)| m * n).sum::<usize>()
        };
        // input width is fixed, so one hidden layer scales linearly; a second
        // hidden layer brings the quadratic term
        let two_hidden = NetworkSpec {
            trunk_widths: vec![50, 50],
            ..one_hidden.clone()
        };
        let tw2 = |c: f64| {
            two_hidden.with_multiplier(c).trunk_layers()[1..]
                .iter()
                .map(|(m, n)| m * n)
                .sum::<usize>()
        };
        assert_eq!(trunk_weights(2.0), 2 * trunk_weights(1.0));
        assert_eq!(tw2(2.0), 4 * tw2(1.0));
    }

    #[test]
    fn spec_round_trips_through_text() {
        let s = spec();
        let parsed: NetworkSpec = s.to_string().parse().unwrap();
        assert_eq!(parsed, s);
        assert!("input=3 bogus=1".parse::<NetworkSpec>().is_err());
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let s = spec();
        let b = batch(&s, 4, 1);
        for logits in forward(&s, &ParameterSet::zeros(&s), &b.inputs).unwrap() {
            assert!(logits.values().iter().all(|v| *v == 0.0));
            assert_eq!(logits.shape(), &[4, 3]);
        }
    }

    #[test]
    fn single_layer_logits_equal_bias_on_zero_weights() {
        let s = NetworkSpec {
            input_dim: 3,
            trunk_widths: vec![],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 1,
            classes_per_task: 3,
        };
        let mut p = ParameterSet::zeros(&s);
        p.per_task[0][1] = Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let x = Tensor::matrix(1, 3, vec![1.0, 1.0, 1.0]).unwrap();
        let logits = forward(&s, &p, &x).unwrap();
        assert_eq!(logits[0].values(), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn rows_are_batch_independent() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ParameterSet::init(&s, &mut rng);
        let b = batch(&s, 32, 2);
        let full = forward(&s, &p, &b.inputs).unwrap();
        let row = Tensor::matrix(1, s.input_dim, b.inputs.row(17).to_vec()).unwrap();
        let single = forward(&s, &p, &row).unwrap();
        for (f, one) in full.iter().zip(&single) {
            assert_eq!(f.row(17), one.values());
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let s = spec();
        let bad = Tensor::matrix(2, 4, vec![0.0; 8]).unwrap();
        assert!(matches!(forward(&s, &ParameterSet::zeros(&s), &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn uniform_logits_give_ln_k() {
        let s = spec();
        let b = batch(&s, 8, 4);
        let out = loss_and_grads(&s, &ParameterSet::zeros(&s), &b, &LossMode::PerTaskShared).unwrap();
        for l in out.losses {
            assert!((l - 3f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_scalarization_isolates_heads() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ParameterSet::init(&s, &mut rng);
        let b = batch(&s, 8, 6);
        let g = loss_and_grads(&s, &p, &b, &LossMode::Scalarized(vec![1.0, 0.0]))
            .unwrap()
            .combined();
        assert!(g.per_task[1].iter().all(|t| t.values().iter().all(|v| *v == 0.0)));

        let per = loss_and_grads(&s, &p, &b, &LossMode::PerTaskShared).unwrap();
        let GradientSet::PerTask { shared, heads } = per.grads else { panic!() };
        assert_eq!(g.shared, shared[0]);
        assert_eq!(g.per_task[0], heads[0]);
    }

    #[test]
    fn out_of_range_labels_are_rejected() {
        let s = spec();
        let mut b = batch(&s, 3, 7);
        b.labels[1][2] = 3;
        assert!(loss_and_grads(&s, &ParameterSet::zeros(&s), &b, &LossMode::PerTaskShared).is_err());
    }

    #[test]
    fn non_finite_loss_reports_batch_index() {
        let s = spec();
        let mut b = batch(&s, 3, 8);
        b.index = 42;
        let mut p = ParameterSet::zeros(&s);
        p.per_task[0][3].values_mut()[0] = f64::NAN;
        match loss_and_grads(&s, &p, &b, &LossMode::PerTaskShared) {
            Err(Error::NonFiniteLoss { batch }) => assert_eq!(batch, 42),
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Adam with coupled L2 weight decay, and epoch-level learning-rate schedules.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::network::{ParameterSet, Partition};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moments for every parameter tensor, plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: ParameterSet,
    pub second_moment: ParameterSet,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &ParameterSet) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }
}

fn adam_tensor(
    param: &mut Tensor,
    grad: &Tensor,
    m: &mut Tensor,
    v: &mut Tensor,
    lr: f64,
    weight_decay: f64,
    bias1: f64,
    bias2: f64,
) {
    let p = param.values_mut();
    for (((w, &g), m), v) in p
        .iter_mut()
        .zip(grad.values())
        .zip(m.values_mut())
        .zip(v.values_mut())
    {
        let g = g + weight_decay * *w;
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *w -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

fn check_step(params: &ParameterSet, grads: &ParameterSet, state: &OptimizerState) -> Result<()> {
    let same = |a: &ParameterSet, b: &ParameterSet| {
        a.shared.len() == b.shared.len()
            && a.per_task.len() == b.per_task.len()
            && a.per_task.iter().zip(&b.per_task).all(|(x, y)| x.len() == y.len())
            && a.tensors().zip(b.tensors()).all(|(x, y)| x.shape() == y.shape())
    };
    if !same(params, grads) || !same(params, &state.first_moment) || !same(params, &state.second_moment) {
        return Err(Error::Shape("parameters, gradients and optimizer state disagree".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    Ok(())
}

/// One Adam step over every parameter group.
pub fn adam_step(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    state: &mut OptimizerState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    adam_step_groups(params, grads, state, lr, weight_decay, |_| true)
}

/// Adam step that leaves groups rejected by `trainable` (and their moments) untouched.
pub fn adam_step_groups(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    state: &mut OptimizerState,
    lr: f64,
    weight_decay: f64,
    trainable: impl Fn(Partition) -> bool,
) -> Result<()> {
    check_step(params, grads, state)?;
    state.step += 1;
    let t = state.step as f64;
    let bias1 = 1.0 - BETA1.powf(t);
    let bias2 = 1.0 - BETA2.powf(t);
    let partitions: Vec<Partition> = params.partitions().collect();
    for part in partitions {
        if !trainable(part) {
            continue;
        }
        let gs = grads.group(part);
        let ps = params.group_mut(part);
        let ms = state.first_moment.group_mut(part);
        let vs = state.second_moment.group_mut(part);
        for (((p, g), m), v) in ps.iter_mut().zip(gs).zip(ms.iter_mut()).zip(vs.iter_mut()) {
            adam_tensor(p, g, m, v, lr, weight_decay, bias1, bias2);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Cosine,
    Step,
    None,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 3] = [ScheduleKind::Cosine, ScheduleKind::Step, ScheduleKind::None];
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Cosine => "cosine",
            ScheduleKind::Step => "step",
            ScheduleKind::None => "none",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(ScheduleKind::Cosine),
            "step" => Ok(ScheduleKind::Step),
            "none" => Ok(ScheduleKind::None),
            other => Err(Error::Parse(format!("unknown scheduler {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    pub min_lr: f64,
    pub milestones: Vec<usize>,
    pub multiplier: f64,
    pub total_epochs: usize,
}

impl ScheduleSpec {
    /// Defaults for a 100-epoch run: cosine floor 1e-6, steps at 33 and 66 by 0.1.
    pub fn new(kind: ScheduleKind, base_lr: f64) -> Self {
        Self {
            kind,
            base_lr,
            min_lr: 1e-6,
            milestones: vec![33, 66],
            multiplier: 0.1,
            total_epochs: 100,
        }
    }

    /// Defaults rescaled to a shorter run: milestones stay at 33% and 66% of
    /// the epochs, which is exactly 33 and 66 for 100 epochs.
    pub fn for_epochs(kind: ScheduleKind, base_lr: f64, total_epochs: usize) -> Self {
        Self {
            milestones: vec![total_epochs * 33 / 100, total_epochs * 66 / 100],
            total_epochs,
            ..Self::new(kind, base_lr)
        }
    }
}

/// Learning rate for `epoch` (0-based).
pub fn lr_at(schedule: &ScheduleSpec, epoch: usize) -> Result<f64> {
    if epoch >= schedule.total_epochs {
        return Err(Error::EpochOutOfRange {
            epoch,
            total: schedule.total_epochs,
        });
    }
    Ok(match schedule.kind {
        ScheduleKind::None => schedule.base_lr,
        ScheduleKind::Cosine => {
            if schedule.total_epochs == 1 {
                return Ok(schedule.base_lr);
            }
            let progress = epoch as f64 / (schedule.total_epochs - 1) as f64;
            schedule.min_lr
                + 0.5 * (schedule.base_lr - schedule.min_lr) * (1.0 + (PI * progress).cos())
        }
        ScheduleKind::Step => {
            let passed = schedule.milestones.iter().filter(|&&m| m <= epoch).count();
            schedule.base_lr * schedule.multiplier.powi(passed as i32)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::network::NetworkSpec;

    fn tiny() -> (NetworkSpec, ParameterSet) {
        let spec = NetworkSpec {
            input_dim: 2,
            trunk_widths: vec![2],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 2,
            classes_per_task: 2,
        };
        let mut p = ParameterSet::zeros(&spec);
        for (i, t) in p.tensors_mut().enumerate() {
            for (k, v) in t.values_mut().iter_mut().enumerate() {
                *v = 0.1 * (i + k) as f64 + 0.05;
            }
        }
        (spec, p)
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let (_, mut p) = tiny();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = OptimizerState::new(&p);
        adam_step(&mut p, &g, &mut s, 0.01, 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_lr_against_the_sign() {
        let (_, mut p) = tiny();
        let before = p.clone();
        let mut g = p.zeros_like();
        for (i, t) in g.tensors_mut().enumerate() {
            for (k, v) in t.values_mut().iter_mut().enumerate() {
                *v = if (i + k) % 2 == 0 { 0.3 * (k + 1) as f64 } else { -2.0 };
            }
        }
        let mut s = OptimizerState::new(&p);
        let lr = 0.01;
        adam_step(&mut p, &g, &mut s, lr, 0.0).unwrap();
        // m̂ = g and v̂ = g² after bias correction, so Δ = -lr·g/(|g| + eps).
        for ((after, before), g) in p.tensors().zip(before.tensors()).zip(g.tensors()) {
            for ((a, b), g) in after.values().iter().zip(before.values()).zip(g.values()) {
                let expected = -lr * g / (g.abs() + EPSILON);
                assert!((a - b - expected).abs() < 1e-12);
                assert!(((a - b).abs() - lr).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn weight_decay_shrinks_positive_weights() {
        let (_, mut p) = tiny();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = OptimizerState::new(&p);
        adam_step(&mut p, &g, &mut s, 0.01, 0.1).unwrap();
        for (a, b) in p.flatten().iter().zip(before.flatten()) {
            assert!(*a < b && *a > 0.0);
        }
    }

    #[test]
    fn frozen_groups_stay_put() {
        let (_, mut p) = tiny();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = OptimizerState::new(&p);
        adam_step_groups(&mut p, &g, &mut s, 0.01, 0.1, |part| part != Partition::Task(1)).unwrap();
        assert_eq!(p.per_task[1], before.per_task[1]);
        assert_ne!(p.per_task[0], before.per_task[0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let (_, mut p) = tiny();
        let mut g = p.zeros_like();
        g.shared[0].values_mut()[0] = f64::INFINITY;
        let mut s = OptimizerState::new(&p);
        assert!(matches!(
            adam_step(&mut p, &g, &mut s, 0.01, 0.0),
            Err(Error::NonFiniteGradient)
        ));
    }

    #[test]
    fn schedules() {
        let cos = ScheduleSpec::new(ScheduleKind::Cosine, 0.01);
        assert_eq!(lr_at(&cos, 0).unwrap(), 0.01);
        assert!((lr_at(&cos, 99).unwrap() - 1e-6).abs() < 1e-18);
        let mid = lr_at(&cos, 50).unwrap();
        assert!(mid < 0.01 && mid > 1e-6);

        let step = ScheduleSpec::new(ScheduleKind::Step, 0.01);
        assert_eq!(lr_at(&step, 32).unwrap(), 0.01);
        assert!((lr_at(&step, 34).unwrap() - 0.001).abs() < 1e-15);
        assert!((lr_at(&step, 67).unwrap() - 0.0001).abs() < 1e-15);

        let none = ScheduleSpec::new(ScheduleKind::None, 0.005);
        assert_eq!(lr_at(&none, 77).unwrap(), 0.005);

        assert!(matches!(lr_at(&none, 100), Err(Error::EpochOutOfRange { .. })));
    }

    #[test]
    fn rescaled_milestones() {
        assert_eq!(ScheduleSpec::for_epochs(ScheduleKind::Step, 0.1, 100).milestones, vec![33, 66]);
        assert_eq!(ScheduleSpec::for_epochs(ScheduleKind::Step, 0.1, 30).milestones, vec![9, 19]);
    }
}

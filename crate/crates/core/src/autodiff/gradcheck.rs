//! Central finite differences against the analytic gradients.

use super::network::{loss_and_grads, Batch, GradientSet, LossMode, NetworkSpec, ParameterSet};
use crate::error::{Error, Result};

/// `|a - b| / max(|a|, |b|, 1e-8)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central-difference gradient of `f` at `x`.
pub fn central_differences(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Largest coordinate-wise relative error between two gradients.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| relative_error(*a, *b))
        .fold(0.0, f64::max)
}

/// Checks every task's gradient, over every parameter, against central
/// differences of that task's loss. Returns the maximum relative error.
pub fn finite_diff_check(
    spec: &NetworkSpec,
    params: &ParameterSet,
    batch: &Batch,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::InvalidConfig(format!("eps {eps} outside (0, 1e-2]")));
    }
    let analytic = loss_and_grads(spec, params, batch, &LossMode::PerTaskShared)?;
    let GradientSet::PerTask { shared, heads } = analytic.grads else {
        unreachable!("per-task mode")
    };

    let x0 = params.flatten();
    let mut worst: f64 = 0.0;
    for task in 0..spec.task_count {
        let mut full = params.zeros_like();
        full.shared = shared[task].clone();
        full.per_task[task] = heads[task].clone();
        let numeric = central_differences(&x0, eps, |x| {
            let p = params.unflatten_like(x).expect("same layout");
            loss_and_grads(spec, &p, batch, &LossMode::Task(task))
                .map(|o| o.losses[task])
                .unwrap_or(f64::NAN)
        });
        worst = worst.max(max_relative_error(&full.flatten(), &numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::tensor::Tensor;

    #[test]
    fn square_function() {
        let numeric = central_differences(&[3.0], 1e-5, |x| x[0] * x[0]);
        assert!(relative_error(6.0, numeric[0]) < 1e-9);
    }

    #[test]
    fn zero_network_has_zero_error() {
        let spec = NetworkSpec {
            input_dim: 3,
            trunk_widths: vec![4],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 2,
            classes_per_task: 3,
        };
        let batch = Batch {
            index: 0,
            inputs: Tensor::matrix(2, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap(),
            labels: vec![vec![0, 1], vec![2, 2]],
        };
        let err = finite_diff_check(&spec, &ParameterSet::zeros(&spec), &batch, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn eps_is_validated() {
        let spec = NetworkSpec {
            input_dim: 1,
            trunk_widths: vec![],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 1,
            classes_per_task: 2,
        };
        let batch = Batch {
            index: 0,
            inputs: Tensor::matrix(1, 1, vec![1.0]).unwrap(),
            labels: vec![vec![0]],
        };
        assert!(finite_diff_check(&spec, &ParameterSet::zeros(&spec), &batch, 0.1).is_err());
    }
}

//! Quick oracle checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{finite_diff_check, Batch, NetworkSpec, ParameterSet, Tensor};
use crate::error::Result;
use crate::moo::{hypervolume_exact_2d, hypervolume_mc, ObjectiveVector, ReferencePoint};
use crate::solvers::{min_norm_frank_wolfe, phn_finite_diff_check, two_point_weight, Hypernetwork, NormMode, PreferenceRay};

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn hv_oracle(rng: &mut ChaCha8Rng) -> Result<SelftestOutcome> {
    let reference = ReferencePoint::default();
    let samples = 200_000;
    let bound = 4.0 * (0.25 / samples as f64).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let n = rng.random_range(1..8);
        let pts: Vec<ObjectiveVector> = (0..n)
            .map(|_| ObjectiveVector::new(vec![rng.random_range(0.0..1.2), rng.random_range(0.0..1.2)]))
            .collect::<Result<_>>()?;
        let exact = hypervolume_exact_2d(&pts, &reference)?;
        let mc = hypervolume_mc(&pts, &reference, samples, i)?;
        // The MC box spans from the componentwise minimum to the reference.
        let lo0 = pts.iter().map(|p| p.values()[0]).fold(f64::INFINITY, f64::min).min(1.0);
        let lo1 = pts.iter().map(|p| p.values()[1]).fold(f64::INFINITY, f64::min).min(1.0);
        let box_volume = (1.0 - lo0) * (1.0 - lo1);
        worst = worst.max((exact - mc).abs() / box_volume.max(f64::MIN_POSITIVE));
    }
    Ok(SelftestOutcome {
        name: "hypervolume exact vs Monte-Carlo",
        passed: worst <= bound,
        detail: format!("max |exact - mc| / box = {worst:.2e} (bound {bound:.2e})"),
    })
}

fn min_norm_oracle(rng: &mut ChaCha8Rng) -> Result<SelftestOutcome> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let dim = rng.random_range(2..=50);
        let g1: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let w = two_point_weight(dot(&g1, &g1), dot(&g1, &g2), dot(&g2, &g2));
        let r = min_norm_frank_wolfe(&[g1.clone(), g2.clone()], NormMode::None, &[], 1000, 1e-14)?;
        for i in 0..dim {
            worst = worst.max((r.direction[i] - (w * g1[i] + (1.0 - w) * g2[i])).abs());
        }
    }
    Ok(SelftestOutcome {
        name: "min-norm Frank-Wolfe vs closed form",
        passed: worst <= 1e-6,
        detail: format!("max coordinate gap {worst:.2e}"),
    })
}

fn random_batch(spec: &NetworkSpec, n: usize, rng: &mut ChaCha8Rng) -> Batch {
    let inputs = (0..n * spec.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Batch {
        index: 0,
        inputs: Tensor::matrix(n, spec.input_dim, inputs).expect("batch shape"),
        labels: (0..spec.task_count)
            .map(|_| (0..n).map(|_| rng.random_range(0..spec.classes_per_task)).collect())
            .collect(),
    }
}

fn finite_difference_oracle(rng: &mut ChaCha8Rng) -> Result<SelftestOutcome> {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let spec = NetworkSpec {
            input_dim: rng.random_range(2..5),
            trunk_widths: vec![rng.random_range(2..5)],
            width_multiplier: 1.0,
            head_widths: vec![],
            task_count: 2,
            classes_per_task: 3,
        };
        let params = ParameterSet::init(&spec, rng);
        let batch = random_batch(&spec, 4, rng);
        worst = worst.max(finite_diff_check(&spec, &params, &batch, 1e-5)?);
    }
    let target = NetworkSpec {
        input_dim: 3,
        trunk_widths: vec![3],
        width_multiplier: 1.0,
        head_widths: vec![],
        task_count: 2,
        classes_per_task: 2,
    };
    let hyper = Hypernetwork::new(&target, 3, 7)?;
    let batch = random_batch(&target, 4, rng);
    let ray = PreferenceRay::new(vec![0.3, 0.7])?;
    let hyper_err = phn_finite_diff_check(&hyper, &batch, &ray, 1e-5)?;
    Ok(SelftestOutcome {
        name: "gradients vs central differences",
        passed: worst < 1e-4 && hyper_err < 1e-3,
        detail: format!("network {worst:.2e}, hypernetwork {hyper_err:.2e}"),
    })
}

/// Runs every oracle suite with a fixed seed.
pub fn run_selftest() -> Result<Vec<SelftestOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    Ok(vec![
        hv_oracle(&mut rng)?,
        min_norm_oracle(&mut rng)?,
        finite_difference_oracle(&mut rng)?,
    ])
}

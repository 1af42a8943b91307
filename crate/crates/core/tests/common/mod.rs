//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use mtlbench::autodiff::{Batch, NetworkSpec, ParameterSet, Tensor};
use mtlbench::moo::{ObjectiveVector, ReferencePoint};
use mtlbench::problems::{generate_glyph_dataset, GlyphDataset, MergedGlyphConfig};
use mtlbench::solvers::{SolverConfig, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ov(a: f64, b: f64) -> ObjectiveVector {
    ObjectiveVector::new(vec![a, b]).expect("finite objectives")
}

pub fn unit_ref() -> ReferencePoint {
    ReferencePoint::default()
}

/// Uniform points in `[lo, hi)²`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<ObjectiveVector> {
    (0..n).map(|_| ov(rng.random_range(lo..hi), rng.random_range(lo..hi))).collect()
}

/// Rectangle-union oracle: sorts by the first objective and sums the
/// exclusive strips. Independent of the library's sweep.
pub fn hv_oracle(points: &[ObjectiveVector], r: (f64, f64)) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.values()[0], p.values()[1]))
        .filter(|(a, b)| *a < r.0 && *b < r.1)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut total = 0.0;
    let mut ceiling = r.1;
    for (a, b) in pts {
        if b < ceiling {
            total += (r.0 - a) * (ceiling - b);
            ceiling = b;
        }
    }
    total
}

pub fn small_glyphs(counts: (usize, usize, usize), seed: u64) -> GlyphDataset {
    let config = MergedGlyphConfig {
        counts,
        ..MergedGlyphConfig::default()
    };
    generate_glyph_dataset(&config, seed).expect("valid glyph config")
}

pub fn glyph_spec(data: &GlyphDataset, trunk: Vec<usize>, c: f64) -> NetworkSpec {
    NetworkSpec {
        input_dim: data.config.pixel_count(),
        trunk_widths: trunk,
        width_multiplier: c,
        head_widths: vec![],
        task_count: 2,
        classes_per_task: data.config.classes_per_task,
    }
}

pub fn quick_config(method: Method, epochs: usize, seed: u64) -> SolverConfig {
    SolverConfig {
        epochs,
        batch_size: 32,
        seed,
        lr: 2.5e-3,
        ..SolverConfig::new(method)
    }
}

/// A random small architecture with one or two trunk layers and optional
/// head layers.
pub fn random_spec(rng: &mut ChaCha8Rng) -> NetworkSpec {
    let layers = rng.random_range(1..=2);
    NetworkSpec {
        input_dim: rng.random_range(2..=5),
        trunk_widths: (0..layers).map(|_| rng.random_range(2..=5)).collect(),
        width_multiplier: 1.0,
        head_widths: if rng.random_bool(0.5) { vec![rng.random_range(2..=4)] } else { vec![] },
        task_count: rng.random_range(1..=3),
        classes_per_task: rng.random_range(2..=4),
    }
}

pub fn random_batch(spec: &NetworkSpec, n: usize, rng: &mut ChaCha8Rng) -> Batch {
    let inputs = (0..n * spec.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Batch {
        index: 0,
        inputs: Tensor::matrix(n, spec.input_dim, inputs).expect("batch shape"),
        labels: (0..spec.task_count)
            .map(|_| (0..n).map(|_| rng.random_range(0..spec.classes_per_task)).collect())
            .collect(),
    }
}

pub fn bits(ts: &[Tensor]) -> Vec<u64> {
    ts.iter().flat_map(|t| t.values().iter().map(|v| v.to_bits())).collect()
}

/// Bit patterns of the trunk and of head `task`.
pub fn shared_and_head_bits(p: &ParameterSet, task: usize) -> (Vec<u64>, Vec<u64>) {
    (bits(&p.shared), bits(&p.per_task[task]))
}

pub fn all_bits(p: &ParameterSet) -> Vec<u64> {
    p.flatten().iter().map(|v| v.to_bits()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

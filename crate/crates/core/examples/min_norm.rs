//! Minimum-norm point in the convex hull of task gradients under each
//! normalization mode.
//!
//! `cargo run --release --example min_norm`

use mtlbench::solvers::{min_norm_frank_wolfe, NormMode};

fn main() -> mtlbench::Result<()> {
    let gradients = vec![vec![1.0, 0.2, -0.4], vec![-0.6, 1.0, 0.3], vec![0.1, -0.3, 2.0]];
    let losses = [0.8, 1.5, 0.3];
    for mode in [NormMode::None, NormMode::L2, NormMode::Loss, NormMode::LossPlus] {
        let r = min_norm_frank_wolfe(&gradients, mode, &losses, 1000, 1e-12)?;
        println!(
            "{:<10} weights {:.4?} norm {:.3e} after {} iterations",
            mode.to_string(),
            r.weights,
            r.norm,
            r.iterations
        );
    }
    Ok(())
}

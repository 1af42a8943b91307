//! Trains a Uniform network, saves it as a text checkpoint, reloads it and
//! checks the reloaded weights score identically.
//!
//! `cargo run --release --example checkpoint -- [path]`

use mtlbench::autodiff::Checkpoint;
use mtlbench::harness::{load_dataset, ExperimentPlan};
use mtlbench::solvers::{evaluate_params, train_scalarized, Method, PreferenceRay, SolverConfig};

fn main() -> mtlbench::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("uniform.ckpt").display().to_string());
    let mut plan = ExperimentPlan::default();
    plan.dataset.counts = (1000, 100, 300);
    let data = load_dataset(&plan)?;
    let config = SolverConfig {
        epochs: 4,
        lr: 2.5e-3,
        batch_size: 32,
        ..SolverConfig::new(Method::Uniform)
    };
    let net = train_scalarized(&PreferenceRay::uniform(2), &plan.base_spec(0.5), &data.train, &config)?;
    net.checkpoint().with_meta("dataset_seed", plan.dataset_seed).save(&path)?;

    let back = Checkpoint::load(&path)?;
    let before = evaluate_params(&net.spec, &net.params, &data.test, &[])?;
    let after = evaluate_params(&back.spec, &back.params, &data.test, &[])?;
    println!("saved to {path}; config {:?}", back.meta("config"));
    println!("test error before {:.4?}, after reload {:.4?}", before.mcr, after.mcr);
    assert_eq!(before, after);
    Ok(())
}

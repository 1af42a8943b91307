//! Single Task, Uniform and MGDA on a small merged-glyph dataset, scored on
//! the test split.
//!
//! `cargo run --release --example train_glyphs -- [epochs]`

use mtlbench::autodiff::param_count;
use mtlbench::harness::{load_dataset, ExperimentPlan};
use mtlbench::solvers::{evaluate, train_for_kind, Method, MethodKind, NormMode, SolverConfig};

fn main() -> mtlbench::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(5), |s| s.parse()).expect("epochs");
    let mut plan = ExperimentPlan::default();
    plan.dataset.counts = (3000, 300, 1000);
    let data = load_dataset(&plan)?;
    let spec = plan.base_spec(1.0);
    println!("{} training examples, {} parameters per network", data.train.len(), param_count(&spec));

    for (kind, method) in [
        (MethodKind::SingleTask, Method::SingleTask(0)),
        (MethodKind::Uniform, Method::Uniform),
        (MethodKind::Mgda, Method::Mgda(NormMode::L2)),
    ] {
        let config = SolverConfig {
            epochs,
            lr: 2.5e-3,
            batch_size: 32,
            ..SolverConfig::new(method)
        };
        let model = train_for_kind(kind, &spec, &data.train, &config)?;
        for p in evaluate(&model, &data.test, None)? {
            println!("{kind:<12} error {:.4?} cross-entropy {:.4?}", p.mcr, p.ce);
        }
    }
    Ok(())
}

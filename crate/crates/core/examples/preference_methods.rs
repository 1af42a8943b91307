//! The preference-based methods (COSMOS-style conditioning, a hypernetwork and
//! PMTL) tracing a front on merged glyphs, with its hypervolume.
//!
//! `cargo run --release --example preference_methods -- [epochs]`

use mtlbench::harness::{load_dataset, ExperimentPlan};
use mtlbench::moo::{hypervolume, ReferencePoint};
use mtlbench::solvers::{evaluate, evaluation_rays, train_for_kind, Method, MethodKind, SolverConfig};

fn main() -> mtlbench::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(5), |s| s.parse()).expect("epochs");
    let mut plan = ExperimentPlan::default();
    plan.dataset.counts = (3000, 300, 1000);
    let data = load_dataset(&plan)?;
    let spec = plan.base_spec(1.0);
    let rays = evaluation_rays(2, 5);
    let reference = ReferencePoint::default();

    for (kind, method) in [
        (MethodKind::Cosmos, Method::Cosmos { alpha: 1.0, lambda: 1.0 }),
        (MethodKind::Phn, Method::Phn { alpha: 1.0 }),
        (MethodKind::Pmtl, Method::Pmtl { ray_count: 5 }),
    ] {
        let config = SolverConfig {
            epochs,
            lr: 2.5e-3,
            batch_size: 32,
            ..SolverConfig::new(method)
        };
        let model = train_for_kind(kind, &spec, &data.train, &config)?;
        let points = evaluate(&model, &data.test, Some(&rays))?;
        println!("{kind}:");
        for p in &points {
            let ray = p.ray.as_ref().map(|r| r.weights().to_vec());
            println!("  ray {ray:.2?} error {:.4?}", p.mcr);
        }
        let objectives = points.iter().map(|p| p.mcr_objectives()).collect::<mtlbench::Result<Vec<_>>>()?;
        println!("  error hypervolume {:.4}", hypervolume(&objectives, &reference)?);
    }
    Ok(())
}

//! Random hyperparameter search for one method, printing the trial log and
//! the selected configuration.
//!
//! `cargo run --release --example hpo_search -- [method] [budget] [epochs]`

use mtlbench::harness::{load_dataset, ExperimentPlan};
use mtlbench::hpo::{run_search, write_trial_log, Budget, SearchSetup, SearchSpace};
use mtlbench::solvers::{Method, MethodKind, SolverConfig};

fn main() -> mtlbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: MethodKind = args.first().map_or("uniform", String::as_str).parse()?;
    let budget: usize = args.get(1).map_or(Ok(6), |s| s.parse()).expect("budget");
    let epochs: usize = args.get(2).map_or(Ok(3), |s| s.parse()).expect("epochs");

    let mut plan = ExperimentPlan::default();
    plan.dataset.counts = (2000, 300, 100);
    let data = load_dataset(&plan)?;
    let setup = SearchSetup {
        spec: plan.base_spec(1.0),
        template: SolverConfig {
            epochs,
            batch_size: plan.batch_size,
            ..SolverConfig::new(Method::Uniform)
        },
        reference: plan.reference.clone(),
        pmtl_rays: plan.pmtl_rays,
        record_timing: true,
    };
    let space = SearchSpace::for_method(kind);
    let outcome = run_search(kind, &space, Budget::Random(budget), &data, &setup, 0)?;
    write_trial_log(&outcome.trials, std::io::stdout().lock())?;
    let best = &outcome.best.config;
    println!(
        "selected config {}: lr {} weight decay {} scheduler {}",
        best.index, best.lr, best.weight_decay, best.scheduler
    );
    Ok(())
}

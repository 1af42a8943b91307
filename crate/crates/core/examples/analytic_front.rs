//! MGDA, linear scalarization and PMTL on the analytic bi-objective problem,
//! compared with its closed-form Pareto front.
//!
//! `cargo run --release --example analytic_front`

use mtlbench::moo::{hypervolume_exact_2d, ReferencePoint};
use mtlbench::problems::{analytic_eval, analytic_pareto_front, AnalyticProblem};
use mtlbench::solvers::{mgda_analytic, pmtl_analytic, scalarized_analytic, NormMode, PreferenceRay};

fn main() -> mtlbench::Result<()> {
    let problem = AnalyticProblem::new(vec![1.0, 2.0, -0.5], vec![-1.0, 0.5, 0.5])?;
    let gap = problem.anchor_gap();
    let x0 = [3.0, -2.0, 4.0];

    let mgda = mgda_analytic(&problem, &x0, NormMode::None, 0.1, 10_000, 1e-6)?;
    println!(
        "MGDA: {} steps, objectives {:.4?}, distance to Pareto set {:.2e}",
        mgda.steps,
        mgda.objectives.values(),
        problem.distance_to_pareto_set(&mgda.x)
    );

    let mut front = Vec::new();
    for i in 0..=10 {
        let t = f64::from(i) / 10.0;
        let ray = PreferenceRay::new(vec![1.0 - t, t])?;
        front.push(scalarized_analytic(&problem, &ray, &x0, 0.1, 500)?.objectives);
    }
    let reference = ReferencePoint::new(vec![gap, gap])?;
    let hv = hypervolume_exact_2d(&front, &reference)?;
    let hv_true = hypervolume_exact_2d(&analytic_pareto_front(&problem, 11)?, &reference)?;
    println!("scalarization over 11 rays: HV {:.4}, closed-form 11-point front {:.4}", hv / (gap * gap), hv_true / (gap * gap));

    let starts = vec![vec![3.0, -2.0, 4.0], vec![-2.0, 1.0, 0.0], vec![0.5, 3.0, -1.0], vec![2.0, 2.0, 2.0], vec![-1.0, -1.0, 1.0]];
    for (i, (x, reached)) in pmtl_analytic(&problem, &starts, 0.02, 3000, 500)?.iter().enumerate() {
        println!(
            "PMTL model {i}: objectives {:.4?}, reached cone {reached}, distance {:.2e}",
            analytic_eval(&problem, x)?.values(),
            problem.distance_to_pareto_set(x)
        );
    }
    Ok(())
}

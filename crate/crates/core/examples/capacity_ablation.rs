//! Single Task against Uniform across width multipliers on the merged-glyph
//! data, printing ΔST per capacity.
//!
//! `cargo run --release --example capacity_ablation -- [seeds] [epochs] [c,c,...]`

use std::time::Instant;

use mtlbench::harness::{format_ablation, load_dataset, run_capacity_ablation, ExperimentPlan};

fn main() -> mtlbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map_or(Ok(2), |s| s.parse()).expect("seed count");
    let epochs: usize = args.get(1).map_or(Ok(10), |s| s.parse()).expect("epochs");
    let cs: Vec<f64> = args
        .get(2)
        .map_or("0.25,1,4", String::as_str)
        .split(',')
        .map(|c| c.parse().expect("multiplier"))
        .collect();

    let plan = ExperimentPlan {
        seeds: (0..seeds).collect(),
        epochs,
        multipliers: cs,
        ..ExperimentPlan::default()
    };
    let data = load_dataset(&plan)?;
    let start = Instant::now();
    let table = run_capacity_ablation(&plan, &data)?;
    print!("{}", format_ablation(&table.rows));
    for r in &table.rows {
        println!(
            "c={}: single task error {:?}, uniform error {:?}",
            r.c, r.single_task_mcr, r.uniform_mcr
        );
    }
    println!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}

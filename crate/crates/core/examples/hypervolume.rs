//! Non-dominated filtering and hypervolume of a small 2-D point set, exact
//! and sampled.
//!
//! `cargo run --release --example hypervolume`

use mtlbench::moo::{hypervolume_exact_2d, hypervolume_mc, nondominated_filter, ObjectiveVector, ReferencePoint};

fn main() -> mtlbench::Result<()> {
    let raw = [[0.2, 0.9], [0.5, 0.5], [0.6, 0.6], [0.9, 0.1], [0.25, 0.75], [1.2, 0.05]];
    let points = raw
        .iter()
        .map(|p| ObjectiveVector::new(p.to_vec()))
        .collect::<mtlbench::Result<Vec<_>>>()?;
    let reference = ReferencePoint::default();

    let front = nondominated_filter(&points)?;
    println!("front ({} of {} points):", front.points.len(), points.len());
    for p in &front.points {
        println!("  {:?}", p.values());
    }
    let exact = hypervolume_exact_2d(&points, &reference)?;
    let sampled = hypervolume_mc(&points, &reference, 200_000, 7)?;
    println!("exact hypervolume   {exact:.6}");
    println!("sampled hypervolume {sampled:.6}");
    Ok(())
}

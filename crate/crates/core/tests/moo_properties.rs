//! Dominance, filtering and hypervolume against independent oracles.

mod common;

use common::*;
use mtlbench::moo::{
    delta_st, dominates, hypervolume, hypervolume_exact_2d, hypervolume_mc, nondominated_filter, ObjectiveVector,
    ReferencePoint,
};
use mtlbench::Error;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = ObjectiveVector> {
    (0.0..1.3f64, 0.0..1.3f64).prop_map(|(a, b)| ov(a, b))
}

fn point_set(max: usize) -> impl Strategy<Value = Vec<ObjectiveVector>> {
    prop::collection::vec(point(), 0..max)
}

/// Points on a coarse lattice so that ties and duplicates are common.
fn lattice_point() -> impl Strategy<Value = ObjectiveVector> {
    (0u8..5, 0u8..5).prop_map(|(a, b)| ov(f64::from(a) / 4.0, f64::from(b) / 4.0))
}

#[test]
fn two_point_staircase_hypervolume() {
    // 0.5·0.5 from (0.5, 0.5) plus the 0.25·0.25 strip added by (0.25, 0.75).
    let pts = [ov(0.5, 0.5), ov(0.25, 0.75)];
    let exact = hypervolume_exact_2d(&pts, &unit_ref()).unwrap();
    assert!((exact - 0.3125).abs() < 1e-15);
    let samples = 400_000;
    let mc = hypervolume_mc(&pts, &unit_ref(), samples, 17).unwrap();
    // The sampling box is [0.25, 1]², area 0.5625; binomial 4σ bound.
    let p = 0.3125 / 0.5625;
    let sigma = 0.5625 * (p * (1.0 - p) / samples as f64).sqrt();
    assert!((mc - 0.3125).abs() < 4.0 * sigma, "mc {mc}");
}

#[test]
fn points_outside_the_reference_contribute_nothing() {
    let hv = hypervolume_exact_2d(&[ov(1.2, 0.1), ov(0.1, 1.0)], &unit_ref()).unwrap();
    assert_eq!(hv, 0.0);
    assert_eq!(hypervolume_exact_2d(&[], &unit_ref()).unwrap(), 0.0);
}

#[test]
fn three_objectives_are_rejected_by_the_exact_routine() {
    let p = ObjectiveVector::new(vec![0.1, 0.2, 0.3]).unwrap();
    let r = ReferencePoint::unit(3);
    assert!(matches!(hypervolume_exact_2d(std::slice::from_ref(&p), &r), Err(Error::NotTwoObjectives(3))));
    // The generic entry point falls back to sampling.
    let v = hypervolume(&[p], &r).unwrap();
    assert!((v - 0.9 * 0.8 * 0.7).abs() < 0.01);
}

#[test]
fn delta_st_sign_convention() {
    assert!((delta_st(0.8566, 0.8484) - 0.0082).abs() < 1e-12);
    assert!(delta_st(0.5, 0.6) < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_matches_strip_oracle(pts in point_set(12), rx in 0.5..1.5f64, ry in 0.5..1.5f64) {
        let r = ReferencePoint::new(vec![rx, ry]).unwrap();
        let exact = hypervolume_exact_2d(&pts, &r).unwrap();
        prop_assert!((exact - hv_oracle(&pts, (rx, ry))).abs() < 1e-12);
    }

    #[test]
    fn bounded_by_the_reference_box(pts in point_set(12)) {
        let hv = hypervolume_exact_2d(&pts, &unit_ref()).unwrap();
        prop_assert!((0.0..=1.0).contains(&hv));
    }

    #[test]
    fn adding_a_point_never_decreases(pts in point_set(12), extra in point()) {
        let base = hypervolume_exact_2d(&pts, &unit_ref()).unwrap();
        let mut grown = pts.clone();
        grown.push(extra);
        prop_assert!(hypervolume_exact_2d(&grown, &unit_ref()).unwrap() >= base - 1e-12);
    }

    #[test]
    fn dominated_points_do_not_change_the_volume(
        pts in prop::collection::vec(point(), 1..12),
        pick in any::<prop::sample::Index>(),
        da in 0.0..0.5f64,
        db in 0.0..0.5f64,
    ) {
        let anchor = pick.get(&pts).values().to_vec();
        let base = hypervolume_exact_2d(&pts, &unit_ref()).unwrap();
        let mut with = pts.clone();
        with.push(ov(anchor[0] + da, anchor[1] + db));
        prop_assert!((hypervolume_exact_2d(&with, &unit_ref()).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn volume_depends_only_on_the_front(pts in point_set(12)) {
        let front = nondominated_filter(&pts).unwrap();
        let a = hypervolume_exact_2d(&pts, &unit_ref()).unwrap();
        let b = hypervolume_exact_2d(&front.points, &unit_ref()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dominance_is_a_strict_partial_order(a in lattice_point(), b in lattice_point(), c in lattice_point()) {
        prop_assert!(!dominates(&a, &a).unwrap());
        if dominates(&a, &b).unwrap() {
            prop_assert!(!dominates(&b, &a).unwrap());
            if dominates(&b, &c).unwrap() {
                prop_assert!(dominates(&a, &c).unwrap());
            }
        }
    }

    #[test]
    fn filter_keeps_exactly_the_undominated(pts in prop::collection::vec(lattice_point(), 0..15)) {
        let front = nondominated_filter(&pts).unwrap();
        for (i, p) in front.points.iter().enumerate() {
            for (k, q) in front.points.iter().enumerate() {
                prop_assert!(!dominates(q, p).unwrap());
                if i != k {
                    prop_assert_ne!(p.values(), q.values());
                }
            }
        }
        for p in &pts {
            let kept = front.points.iter().any(|f| f.values() == p.values());
            let beaten = pts.iter().any(|q| dominates(q, p).unwrap());
            prop_assert_eq!(kept, !beaten);
        }
    }

    #[test]
    fn filter_is_idempotent(pts in prop::collection::vec(lattice_point(), 0..15)) {
        let once = nondominated_filter(&pts).unwrap();
        prop_assert_eq!(nondominated_filter(&once.points).unwrap(), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_agrees_with_exact(pts in prop::collection::vec(point(), 1..8), seed in any::<u64>()) {
        let samples = 100_000;
        let exact = hypervolume_exact_2d(&pts, &unit_ref()).unwrap();
        let mc = hypervolume_mc(&pts, &unit_ref(), samples, seed).unwrap();
        // Worst-case binomial standard error on a unit box, at 5σ.
        prop_assert!((exact - mc).abs() < 5.0 * (0.25 / samples as f64).sqrt());
    }
}

//! Pareto-space primitives: dominance, non-dominated filtering, hypervolume
//! and the gap to the Single Task reference.
//!
//! Every objective is minimized. Hypervolume clips each coordinate to the
//! reference point, so points at or beyond the reference contribute nothing
//! and losses above the reference (cross-entropy above 1, say) stay well defined.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in objective space. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    values: Vec<f64>,
}

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("objective vector needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective vector"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Upper corner of the box in which hypervolume is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    values: Vec<f64>,
}

impl ReferencePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("reference point needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reference point"));
        }
        Ok(Self { values })
    }

    /// The `(1, ..., 1)` reference used for error rates.
    pub fn unit(dim: usize) -> Self {
        Self { values: vec![1.0; dim] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl Default for ReferencePoint {
    fn default() -> Self {
        Self::unit(2)
    }
}

/// A set of mutually non-dominated points, in input order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub points: Vec<ObjectiveVector>,
}

impl Front {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_all(points: &[ObjectiveVector], dim: usize) -> Result<()> {
    points.iter().try_for_each(|p| check_dim(dim, p.dim()))
}

fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_dim(a.dim(), b.dim())?;
    Ok(dominates_unchecked(&a.values, &b.values))
}

/// Keeps the points no other point strictly dominates. Duplicates collapse
/// onto their first occurrence; the survivors keep their input order.
pub fn nondominated_filter(points: &[ObjectiveVector]) -> Result<Front> {
    let Some(first) = points.first() else {
        return Ok(Front::default());
    };
    check_all(points, first.dim())?;

    let mut kept: Vec<ObjectiveVector> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dominated = points
            .iter()
            .enumerate()
            .any(|(j, q)| j != i && dominates_unchecked(&q.values, &p.values));
        if dominated || kept.iter().any(|k| k.values == p.values) {
            continue;
        }
        kept.push(p.clone());
    }
    Ok(Front { points: kept })
}

fn clipped(p: &ObjectiveVector, reference: &ReferencePoint) -> Vec<f64> {
    p.values
        .iter()
        .zip(&reference.values)
        .map(|(v, r)| v.min(*r))
        .collect()
}

/// Exact dominated area for two objectives by a sort-and-sweep.
pub fn hypervolume_exact_2d(points: &[ObjectiveVector], reference: &ReferencePoint) -> Result<f64> {
    if reference.dim() != 2 {
        return Err(Error::NotTwoObjectives(reference.dim()));
    }
    check_all(points, 2)?;

    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let c = clipped(p, reference);
            (c[0], c[1])
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Staircase with strictly decreasing second coordinate.
    let mut stairs: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (x, y) in pts {
        if stairs.last().is_none_or(|&(_, last_y)| y < last_y) {
            stairs.push((x, y));
        }
    }

    let (ref_x, ref_y) = (reference.values[0], reference.values[1]);
    let mut area = 0.0;
    for (i, &(x, y)) in stairs.iter().enumerate() {
        let next_x = stairs.get(i + 1).map_or(ref_x, |s| s.0);
        area += (next_x - x) * (ref_y - y);
    }
    Ok(area)
}

/// Monte-Carlo estimate of the dominated volume for any number of objectives.
///
/// Samples uniformly in the box spanned by the componentwise minimum of the
/// clipped points and the reference point. Deterministic given `seed`.
pub fn hypervolume_mc(
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::InvalidConfig("sample_count must be at least 1".into()));
    }
    let dim = reference.dim();
    check_all(points, dim)?;
    if points.is_empty() {
        return Ok(0.0);
    }

    let clipped: Vec<Vec<f64>> = points.iter().map(|p| clipped(p, reference)).collect();
    let lower: Vec<f64> = (0..dim)
        .map(|j| clipped.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_volume: f64 = lower
        .iter()
        .zip(&reference.values)
        .map(|(lo, r)| r - lo)
        .product();
    if box_volume <= 0.0 {
        return Ok(0.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = vec![0.0; dim];
    let mut hits = 0usize;
    for _ in 0..sample_count {
        for (j, s) in sample.iter_mut().enumerate() {
            *s = lower[j] + rng.random::<f64>() * (reference.values[j] - lower[j]);
        }
        if clipped
            .iter()
            .any(|p| p.iter().zip(&sample).all(|(pv, sv)| pv <= sv))
        {
            hits += 1;
        }
    }
    Ok(box_volume * hits as f64 / sample_count as f64)
}

/// Hypervolume that dispatches to the exact sweep for two objectives and to
/// Monte-Carlo otherwise.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ReferencePoint) -> Result<f64> {
    if reference.dim() == 2 {
        hypervolume_exact_2d(points, reference)
    } else {
        hypervolume_mc(points, reference, 1_000_000, 0)
    }
}

/// Gap between the Single Task hypervolume and a method's hypervolume.
/// Negative when the method beats Single Task.
pub fn delta_st(single_task_hv: f64, method_hv: f64) -> f64 {
    single_task_hv - method_hv
}

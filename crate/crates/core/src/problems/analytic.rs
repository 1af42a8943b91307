//! Convex bi-objective problem `f1(x) = ‖x − a‖²`, `f2(x) = ‖x − b‖²`.
//!
//! Its Pareto set is the segment `[a, b]`: every point there trades one
//! objective against the other, unlike shared-trunk multi-task losses.

use crate::error::{Error, Result};
use crate::moo::ObjectiveVector;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticProblem {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl AnalyticProblem {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        if a.is_empty() || a == b {
            return Err(Error::InvalidConfig("anchors must be distinct, non-empty vectors".into()));
        }
        Ok(Self { a, b })
    }

    pub fn anchors(&self) -> (&[f64], &[f64]) {
        (&self.a, &self.b)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `‖a − b‖²`, the largest value either objective takes on the front.
    pub fn anchor_gap(&self) -> f64 {
        sq_dist(&self.a, &self.b)
    }

    /// Euclidean distance from `x` to the segment `[a, b]`.
    pub fn distance_to_pareto_set(&self, x: &[f64]) -> f64 {
        let ab: Vec<f64> = self.b.iter().zip(&self.a).map(|(b, a)| b - a).collect();
        let ax: Vec<f64> = x.iter().zip(&self.a).map(|(x, a)| x - a).collect();
        let t = (dot(&ax, &ab) / dot(&ab, &ab)).clamp(0.0, 1.0);
        let proj: Vec<f64> = self.a.iter().zip(&ab).map(|(a, d)| a + t * d).collect();
        sq_dist(x, &proj).sqrt()
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check(p: &AnalyticProblem, x: &[f64]) -> Result<()> {
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: x.len(),
        });
    }
    Ok(())
}

pub fn analytic_eval(p: &AnalyticProblem, x: &[f64]) -> Result<ObjectiveVector> {
    check(p, x)?;
    ObjectiveVector::new(vec![sq_dist(x, &p.a), sq_dist(x, &p.b)])
}

/// `(2(x − a), 2(x − b))`
pub fn analytic_grads(p: &AnalyticProblem, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check(p, x)?;
    let g1 = x.iter().zip(&p.a).map(|(x, a)| 2.0 * (x - a)).collect();
    let g2 = x.iter().zip(&p.b).map(|(x, b)| 2.0 * (x - b)).collect();
    Ok((g1, g2))
}

/// Images of `k` equally spaced points along `[a, b]`, from `a` to `b`.
pub fn analytic_pareto_front(p: &AnalyticProblem, k: usize) -> Result<Vec<ObjectiveVector>> {
    if k < 2 {
        return Err(Error::InvalidConfig("front needs at least 2 points".into()));
    }
    (0..k)
        .map(|i| {
            let t = i as f64 / (k - 1) as f64;
            let x: Vec<f64> = p.a.iter().zip(&p.b).map(|(a, b)| a + t * (b - a)).collect();
            analytic_eval(p, &x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moo::dominates;

    fn unit() -> AnalyticProblem {
        AnalyticProblem::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn at_anchor() {
        let p = AnalyticProblem::new(vec![1.0, 2.0], vec![-1.0, 0.5]).unwrap();
        let f = analytic_eval(&p, &[1.0, 2.0]).unwrap();
        assert_eq!(f.values(), &[0.0, p.anchor_gap()]);
        let (g1, _) = analytic_grads(&p, &[1.0, 2.0]).unwrap();
        assert!(g1.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn midpoint_gradients_cancel() {
        let p = AnalyticProblem::new(vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 0.0]).unwrap();
        let mid: Vec<f64> = vec![0.0, 1.25, 1.5];
        let (g1, g2) = analytic_grads(&p, &mid).unwrap();
        for (x, y) in g1.iter().zip(&g2) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn front_endpoints_and_midpoint() {
        let front = analytic_pareto_front(&unit(), 3).unwrap();
        assert_eq!(front[0].values(), &[0.0, 1.0]);
        assert_eq!(front[1].values(), &[0.25, 0.25]);
        assert_eq!(front[2].values(), &[1.0, 0.0]);
        for a in &front {
            for b in &front {
                assert!(!dominates(a, b).unwrap());
            }
        }
    }

    #[test]
    fn rejects_degenerate_anchors() {
        assert!(AnalyticProblem::new(vec![1.0], vec![1.0]).is_err());
        assert!(AnalyticProblem::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(analytic_pareto_front(&unit(), 1).is_err());
    }

    #[test]
    fn distance_to_segment() {
        let p = unit();
        assert!((p.distance_to_pareto_set(&[0.5, 2.0]) - 2.0).abs() < 1e-15);
        assert!((p.distance_to_pareto_set(&[-3.0, 4.0]) - 5.0).abs() < 1e-15);
        assert_eq!(p.distance_to_pareto_set(&[0.3, 0.0]), 0.0);
    }
}

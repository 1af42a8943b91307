//! Preference rays on the probability simplex and the COSMOS-style objective.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRay {
    weights: Vec<f64>,
}

impl PreferenceRay {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("preference ray needs at least one weight".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(format!("ray weights must be non-negative: {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidConfig(format!("ray weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Rescales non-negative weights onto the simplex.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidConfig(format!("cannot normalize {weights:?}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(j: usize) -> Self {
        Self {
            weights: vec![1.0 / j as f64; j],
        }
    }

    pub fn one_hot(j: usize, task: usize) -> Self {
        let mut weights = vec![0.0; j];
        weights[task] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

impl fmt::Display for PreferenceRay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(f64::to_string).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Symmetric Dirichlet sampler with its own deterministic stream.
#[derive(Debug, Clone)]
pub struct PreferenceSampler {
    gamma: Gamma<f64>,
    tasks: usize,
    rng: ChaCha8Rng,
}

impl PreferenceSampler {
    pub fn new(alpha: f64, tasks: usize, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("Dirichlet alpha must be positive, got {alpha}")));
        }
        if tasks == 0 {
            return Err(Error::InvalidConfig("need at least one task".into()));
        }
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self {
            gamma,
            tasks,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sample(&mut self) -> PreferenceRay {
        let draws: Vec<f64> = (0..self.tasks).map(|_| self.gamma.sample(&mut self.rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return PreferenceRay {
                weights: draws.into_iter().map(|d| d / total).collect(),
            };
        }
        // Every gamma draw underflowed (tiny alpha): the mass sits on one vertex.
        let vertex = self.rng.random_range(0..self.tasks);
        PreferenceRay::one_hot(self.tasks, vertex)
    }
}

/// One symmetric Dirichlet(α, …, α) draw over `j` tasks.
pub fn sample_preference(alpha: f64, j: usize, seed: u64) -> Result<PreferenceRay> {
    Ok(PreferenceSampler::new(alpha, j, seed)?.sample())
}

/// Cosine similarity, defined as 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// `Σ ray_j · losses_j − λ · cos(ray, losses)`
pub fn cosmos_loss(losses: &[f64], ray: &PreferenceRay, lambda: f64) -> f64 {
    let scalarized: f64 = losses.iter().zip(ray.weights()).map(|(l, w)| l * w).sum();
    scalarized - lambda * cosine_similarity(ray.weights(), losses)
}

/// All rays whose weights are multiples of `1/divisions`, first weight ascending.
/// For two tasks and 10 divisions these are the 11 evenly spaced rays.
pub fn simplex_lattice(tasks: usize, divisions: usize) -> Vec<PreferenceRay> {
    fn rec(left: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    if tasks == 0 {
        return Vec::new();
    }
    if divisions == 0 {
        return vec![PreferenceRay::uniform(tasks)];
    }
    let mut out = Vec::new();
    rec(divisions, tasks, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|parts| PreferenceRay {
            weights: parts.iter().map(|&p| p as f64 / divisions as f64).collect(),
        })
        .collect()
}

/// Evaluation rays with `count - 1` divisions per axis. For two tasks these
/// are `count` evenly spaced rays, endpoints included.
pub fn evaluation_rays(tasks: usize, count: usize) -> Vec<PreferenceRay> {
    simplex_lattice(tasks, count.max(2) - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_validation() {
        assert!(PreferenceRay::new(vec![0.3, 0.7]).is_ok());
        assert!(PreferenceRay::new(vec![0.3, 0.8]).is_err());
        assert!(PreferenceRay::new(vec![-0.1, 1.1]).is_err());
        assert_eq!(PreferenceRay::normalized(vec![1.0, 3.0]).unwrap().weights(), &[0.25, 0.75]);
    }

    #[test]
    fn samples_are_on_the_simplex() {
        let mut s = PreferenceSampler::new(0.1, 3, 1).unwrap();
        for _ in 0..1000 {
            let r = s.sample();
            assert!(r.weights().iter().all(|w| *w >= 0.0));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = PreferenceSampler::new(1.2, 2, 7).unwrap();
        let mut b = PreferenceSampler::new(1.2, 2, 7).unwrap();
        for _ in 0..20 {
            assert_eq!(a.sample(), b.sample());
        }
        assert!(PreferenceSampler::new(0.0, 2, 7).is_err());
    }

    #[test]
    fn cosmos_loss_examples() {
        let ray = PreferenceRay::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(cosmos_loss(&[2.0, 4.0], &ray, 0.0), 3.5);
        let parallel = [0.5, 1.5];
        let v = cosmos_loss(&parallel, &ray, 3.0);
        assert!((v - (0.125 + 1.125 - 3.0)).abs() < 1e-12);
        let e1 = PreferenceRay::one_hot(2, 0);
        assert_eq!(cosmos_loss(&[0.0, 1.0], &e1, 5.0), 0.0);
        assert_eq!(cosmos_loss(&[0.0, 0.0], &ray, 5.0), 0.0);
    }

    #[test]
    fn lattice() {
        let rays = simplex_lattice(2, 10);
        assert_eq!(rays.len(), 11);
        assert_eq!(rays[0].weights(), &[0.0, 1.0]);
        assert_eq!(rays[10].weights(), &[1.0, 0.0]);
        assert_eq!(simplex_lattice(3, 2).len(), 6);
        assert_eq!(evaluation_rays(2, 11), rays);
    }
}

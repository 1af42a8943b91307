//! Scoring trained models: per-task misclassification rate and mean
//! cross-entropy over a full split.

use serde::{Deserialize, Serialize};

use super::phn::{phn_target_weights, Hypernetwork};
use super::pmtl::PmtlModel;
use super::preference::{evaluation_rays, PreferenceRay};
use super::train::TrainedNetwork;
use crate::autodiff::{forward, NetworkSpec, ParameterSet, Tensor};
use crate::error::{Error, Result};
use crate::moo::ObjectiveVector;
use crate::problems::Split;

/// Default number of evenly spaced evaluation rays.
pub const DEFAULT_EVAL_RAYS: usize = 11;
const EVAL_CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub mcr: Vec<f64>,
    pub ce: Vec<f64>,
    pub ray: Option<PreferenceRay>,
}

impl EvalPoint {
    pub fn mcr_objectives(&self) -> Result<ObjectiveVector> {
        ObjectiveVector::new(self.mcr.clone())
    }

    pub fn ce_objectives(&self) -> Result<ObjectiveVector> {
        ObjectiveVector::new(self.ce.clone())
    }
}

/// Running sums of errors and cross-entropy per task.
#[derive(Debug, Clone)]
struct Tally {
    errors: Vec<usize>,
    ce: Vec<f64>,
    count: usize,
}

impl Tally {
    fn new(tasks: usize) -> Self {
        Self {
            errors: vec![0; tasks],
            ce: vec![0.0; tasks],
            count: 0,
        }
    }

    fn add(&mut self, logits: &[Tensor], labels: &[&[usize]]) {
        for (task, (z, y)) in logits.iter().zip(labels).enumerate() {
            for (r, &label) in y.iter().enumerate() {
                let row = z.row(r);
                let (argmax, max) = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                self.ce[task] += lse - row[label];
                if argmax != label {
                    self.errors[task] += 1;
                }
            }
        }
        self.count += labels.first().map_or(0, |y| y.len());
    }

    fn finish(self, ray: Option<PreferenceRay>) -> EvalPoint {
        let n = self.count as f64;
        EvalPoint {
            mcr: self.errors.iter().map(|&e| e as f64 / n).collect(),
            ce: self.ce.iter().map(|c| c / n).collect(),
            ray,
        }
    }
}

/// Scores precomputed logits against labels.
pub fn evaluate_logits(logits: &[Tensor], labels: &[&[usize]]) -> Result<EvalPoint> {
    if logits.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: logits.len(),
        });
    }
    if labels.first().is_none_or(|y| y.is_empty()) {
        return Err(Error::EmptySplit);
    }
    let mut tally = Tally::new(labels.len());
    tally.add(logits, labels);
    Ok(tally.finish(None))
}

/// Scores one parameter set on a split, optionally appending `extra`
/// features (a conditioning ray) to every input row.
pub fn evaluate_params(spec: &NetworkSpec, params: &ParameterSet, split: &Split, extra: &[f64]) -> Result<EvalPoint> {
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    let indices: Vec<usize> = (0..split.len()).collect();
    let mut tally = Tally::new(spec.task_count);
    for (i, chunk) in indices.chunks(EVAL_CHUNK).enumerate() {
        let batch = split.batch(chunk, i, extra);
        let logits = forward(spec, params, &batch.inputs)?;
        let labels: Vec<&[usize]> = batch.labels.iter().map(Vec::as_slice).collect();
        tally.add(&logits, &labels);
    }
    Ok(tally.finish(None))
}

/// Any trained artifact that can be scored.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    /// One plain network, one point.
    Network(TrainedNetwork),
    /// One network per task; task `j`'s score is taken from model `j`.
    SingleTaskSet(Vec<TrainedNetwork>),
    /// A network taking the ray as extra input features.
    Conditioned(TrainedNetwork),
    Hyper(Hypernetwork),
    /// Independently trained models, one point each.
    Ensemble(Vec<PmtlModel>),
}

/// Combines Single Task models: the score of task `j` comes from `points[j]`.
pub fn combine_single_task(points: &[EvalPoint]) -> EvalPoint {
    EvalPoint {
        mcr: points.iter().enumerate().map(|(j, p)| p.mcr[j]).collect(),
        ce: points.iter().enumerate().map(|(j, p)| p.ce[j]).collect(),
        ray: None,
    }
}

/// Scores `model` on `split`. Conditioned models produce one point per ray;
/// `rays` defaults to [`DEFAULT_EVAL_RAYS`] evenly spaced rays.
pub fn evaluate(model: &TrainedModel, split: &Split, rays: Option<&[PreferenceRay]>) -> Result<Vec<EvalPoint>> {
    let default_rays = |tasks: usize| evaluation_rays(tasks, DEFAULT_EVAL_RAYS);
    match model {
        TrainedModel::Network(n) => Ok(vec![evaluate_params(&n.spec, &n.params, split, &[])?]),
        TrainedModel::SingleTaskSet(models) => {
            let points = models
                .iter()
                .map(|n| evaluate_params(&n.spec, &n.params, split, &[]))
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![combine_single_task(&points)])
        }
        TrainedModel::Conditioned(n) => {
            let owned;
            let rays = match rays {
                Some(r) => r,
                None => {
                    owned = default_rays(n.spec.task_count);
                    &owned
                }
            };
            rays.iter()
                .map(|r| {
                    let mut p = evaluate_params(&n.spec, &n.params, split, r.weights())?;
                    p.ray = Some(r.clone());
                    Ok(p)
                })
                .collect()
        }
        TrainedModel::Hyper(h) => {
            let owned;
            let rays = match rays {
                Some(r) => r,
                None => {
                    owned = default_rays(h.target.task_count);
                    &owned
                }
            };
            rays.iter()
                .map(|r| {
                    let params = phn_target_weights(h, r)?;
                    let mut p = evaluate_params(&h.target, &params, split, &[])?;
                    p.ray = Some(r.clone());
                    Ok(p)
                })
                .collect()
        }
        TrainedModel::Ensemble(models) => models
            .iter()
            .map(|m| {
                let mut p = evaluate_params(&m.network.spec, &m.network.params, split, &[])?;
                p.ray = PreferenceRay::normalized(m.ray.to_vec()).ok();
                Ok(p)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let z = Tensor::matrix(2, 3, vec![9.0, 0.0, 0.0, 0.0, 0.0, 9.0]).unwrap();
        let p = evaluate_logits(&[z.clone(), z], &[&[0, 2], &[0, 2]]).unwrap();
        assert_eq!(p.mcr, vec![0.0, 0.0]);
        assert!(p.ce.iter().all(|c| *c < 1e-3));
    }

    #[test]
    fn uniform_logits_are_chance_level() {
        let z = Tensor::zeros(&[10, 10]);
        let labels: Vec<usize> = (0..10).collect();
        let p = evaluate_logits(&[z], &[&labels]).unwrap();
        assert!((p.ce[0] - 10f64.ln()).abs() < 1e-12);
        // Ties resolve to class 0, so exactly one example in ten is correct.
        assert!((p.mcr[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn single_task_combination_takes_diagonal() {
        let a = EvalPoint {
            mcr: vec![0.1, 0.9],
            ce: vec![0.2, 2.0],
            ray: None,
        };
        let b = EvalPoint {
            mcr: vec![0.8, 0.3],
            ce: vec![1.5, 0.4],
            ray: None,
        };
        let c = combine_single_task(&[a, b]);
        assert_eq!(c.mcr, vec![0.1, 0.3]);
        assert_eq!(c.ce, vec![0.2, 0.4]);
    }
}

//! Hyperparameter search: the 9 × 13 × 3 base grid, method-specific
//! extensions, random sampling without replacement and selection by
//! validation hypervolume of cross-entropy losses.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{NetworkSpec, ScheduleKind};
use crate::error::{Error, Result};
use crate::moo::{hypervolume, ObjectiveVector, ReferencePoint};
use crate::problems::GlyphDataset;
use crate::solvers::{evaluate, train_for_kind, EvalPoint, Method, MethodKind, NormMode, SolverConfig};

pub const LEARNING_RATES: [f64; 9] = [1e-2, 7.5e-3, 5e-3, 2.5e-3, 1e-3, 7.5e-4, 5e-4, 2.5e-4, 1e-4];
pub const WEIGHT_DECAYS: [f64; 13] = [
    1e-1, 7.5e-2, 5e-2, 2.5e-2, 1e-2, 7.5e-3, 5e-3, 2.5e-3, 1e-3, 7.5e-4, 5e-4, 2.5e-4, 1e-4,
];
pub const DIRICHLET_ALPHAS: [f64; 6] = [0.1, 0.2, 0.5, 1.0, 1.2, 1.5];
pub const COSINE_PENALTIES: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];
/// Models trained by PMTL when no ray count is given.
pub const DEFAULT_PMTL_RAYS: usize = 5;

/// Method-specific hyperparameters of one configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub norm_mode: Option<NormMode>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
}

/// Extension lists for `kind`. PHN's internal solver is fixed to linear
/// scalarization, so only α is searched.
pub fn method_specific_space(kind: MethodKind) -> Vec<MethodParams> {
    match kind {
        MethodKind::Mgda => NormMode::ALL
            .iter()
            .map(|&m| MethodParams {
                norm_mode: Some(m),
                ..Default::default()
            })
            .collect(),
        MethodKind::Phn => DIRICHLET_ALPHAS
            .iter()
            .map(|&a| MethodParams {
                alpha: Some(a),
                ..Default::default()
            })
            .collect(),
        MethodKind::Cosmos => DIRICHLET_ALPHAS
            .iter()
            .flat_map(|&a| {
                COSINE_PENALTIES.iter().map(move |&l| MethodParams {
                    alpha: Some(a),
                    lambda: Some(l),
                    ..Default::default()
                })
            })
            .collect(),
        MethodKind::SingleTask | MethodKind::Uniform | MethodKind::Pmtl => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub schedulers: Vec<ScheduleKind>,
    /// Innermost grid axis; empty means no extension.
    pub extension: Vec<MethodParams>,
}

impl SearchSpace {
    pub fn base() -> Self {
        Self {
            learning_rates: LEARNING_RATES.to_vec(),
            weight_decays: WEIGHT_DECAYS.to_vec(),
            schedulers: ScheduleKind::ALL.to_vec(),
            extension: Vec::new(),
        }
    }

    pub fn for_method(kind: MethodKind) -> Self {
        Self {
            extension: method_specific_space(kind),
            ..Self::base()
        }
    }

    pub fn grid_size(&self) -> usize {
        self.learning_rates.len() * self.weight_decays.len() * self.schedulers.len() * self.extension.len().max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.weight_decays.is_empty() || self.schedulers.is_empty() {
            return Err(Error::InvalidConfig("search space axes must be non-empty".into()));
        }
        Ok(())
    }
}

/// One point of the grid together with its position in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub index: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub scheduler: ScheduleKind,
    pub params: MethodParams,
}

impl TrialConfig {
    /// The concrete method for `kind`, falling back to the first extension
    /// value for anything left unset.
    pub fn method(&self, kind: MethodKind, pmtl_rays: usize) -> Method {
        let p = self.params;
        match kind {
            MethodKind::SingleTask => Method::SingleTask(0),
            MethodKind::Uniform => Method::Uniform,
            MethodKind::Mgda => Method::Mgda(p.norm_mode.unwrap_or(NormMode::L2)),
            MethodKind::Cosmos => Method::Cosmos {
                alpha: p.alpha.unwrap_or(DIRICHLET_ALPHAS[0]),
                lambda: p.lambda.unwrap_or(COSINE_PENALTIES[0]),
            },
            MethodKind::Phn => Method::Phn {
                alpha: p.alpha.unwrap_or(DIRICHLET_ALPHAS[0]),
            },
            MethodKind::Pmtl => Method::Pmtl { ray_count: pmtl_rays },
        }
    }

    /// `template` with this configuration's hyperparameters filled in.
    pub fn solver_config(&self, kind: MethodKind, template: &SolverConfig, pmtl_rays: usize) -> SolverConfig {
        SolverConfig {
            method: self.method(kind, pmtl_rays),
            lr: self.lr,
            weight_decay: self.weight_decay,
            schedule: self.scheduler,
            ..template.clone()
        }
    }
}

/// Full Cartesian product: learning rate outermost, then weight decay,
/// then scheduler, then the extension.
pub fn enumerate_grid(space: &SearchSpace) -> Vec<TrialConfig> {
    let default_ext = [MethodParams::default()];
    let ext: &[MethodParams] = if space.extension.is_empty() { &default_ext } else { &space.extension };
    let mut out = Vec::with_capacity(space.grid_size());
    for &lr in &space.learning_rates {
        for &weight_decay in &space.weight_decays {
            for &scheduler in &space.schedulers {
                for &params in ext {
                    out.push(TrialConfig {
                        index: out.len(),
                        lr,
                        weight_decay,
                        scheduler,
                        params,
                    });
                }
            }
        }
    }
    out
}

/// `budget` distinct grid points drawn uniformly without replacement, in
/// draw order.
pub fn sample_random(space: &SearchSpace, budget: usize, seed: u64) -> Result<Vec<TrialConfig>> {
    space.validate()?;
    let grid = enumerate_grid(space);
    if budget > grid.len() {
        return Err(Error::BudgetTooLarge {
            budget,
            grid: grid.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, grid.len(), budget)
        .into_iter()
        .map(|i| grid[i].clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrialStatus {
    Completed,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: TrialConfig,
    pub method: String,
    pub status: TrialStatus,
    pub val_hv_ce: Option<f64>,
    pub val_hv_mcr: Option<f64>,
    pub wall_seconds: Option<f64>,
}

/// Validation scores of one trained trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialScore {
    pub hv_ce: f64,
    pub hv_mcr: f64,
}

/// Hypervolume of the CE and MCR point sets of `points`.
pub fn score_points(points: &[EvalPoint], reference: &ReferencePoint) -> Result<TrialScore> {
    let ce: Vec<ObjectiveVector> = points.iter().map(EvalPoint::ce_objectives).collect::<Result<_>>()?;
    let mcr: Vec<ObjectiveVector> = points.iter().map(EvalPoint::mcr_objectives).collect::<Result<_>>()?;
    Ok(TrialScore {
        hv_ce: hypervolume(&ce, reference)?,
        hv_mcr: hypervolume(&mcr, reference)?,
    })
}

/// Runs `score` for every configuration (possibly concurrently) and returns
/// the trials sorted by config index. Failures become `Failed` trials.
pub fn run_trials<F>(configs: &[TrialConfig], method: &str, record_timing: bool, score: F) -> Vec<Trial>
where
    F: Fn(&TrialConfig) -> Result<TrialScore> + Sync,
{
    let mut trials: Vec<Trial> = configs
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let outcome = score(c);
            let wall_seconds = record_timing.then(|| start.elapsed().as_secs_f64());
            match outcome {
                Ok(s) => Trial {
                    config: c.clone(),
                    method: method.to_string(),
                    status: TrialStatus::Completed,
                    val_hv_ce: Some(s.hv_ce),
                    val_hv_mcr: Some(s.hv_mcr),
                    wall_seconds,
                },
                Err(e) => {
                    log::warn!("trial {} failed: {e}", c.index);
                    Trial {
                        config: c.clone(),
                        method: method.to_string(),
                        status: TrialStatus::Failed(e.to_string()),
                        val_hv_ce: None,
                        val_hv_mcr: None,
                        wall_seconds,
                    }
                }
            }
        })
        .collect();
    trials.sort_by_key(|t| t.config.index);
    trials
}

/// Completed trial with the largest CE-based validation HV; the lower config
/// index wins ties.
pub fn select_best(trials: &[Trial]) -> Option<&Trial> {
    trials
        .iter()
        .filter(|t| t.status == TrialStatus::Completed)
        .filter_map(|t| t.val_hv_ce.map(|hv| (t, hv)))
        .fold(None, |best: Option<(&Trial, f64)>, (t, hv)| match best {
            Some((b, bhv)) if bhv > hv || (bhv == hv && b.config.index <= t.config.index) => Some((b, bhv)),
            _ => Some((t, hv)),
        })
        .map(|(t, _)| t)
}

/// How configurations are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    Random(usize),
    Grid,
}

/// Everything `run_search` needs besides the method and space.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSetup {
    pub spec: NetworkSpec,
    /// Supplies epochs, batch size and seed; method and optimizer settings
    /// are overwritten per trial.
    pub template: SolverConfig,
    pub reference: ReferencePoint,
    pub pmtl_rays: usize,
    pub record_timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: Trial,
    pub trials: Vec<Trial>,
}

/// Trains one model per configuration on the training split with the
/// template's single seed and picks the best by validation CE hypervolume.
pub fn run_search(
    kind: MethodKind,
    space: &SearchSpace,
    budget: Budget,
    data: &GlyphDataset,
    setup: &SearchSetup,
    hpo_seed: u64,
) -> Result<SearchOutcome> {
    if data.validation.is_empty() {
        return Err(Error::EmptySplit);
    }
    let configs = match budget {
        Budget::Grid => {
            space.validate()?;
            enumerate_grid(space)
        }
        Budget::Random(n) => sample_random(space, n, hpo_seed)?,
    };
    let trials = run_trials(&configs, &kind.to_string(), setup.record_timing, |c| {
        let config = c.solver_config(kind, &setup.template, setup.pmtl_rays);
        let model = train_for_kind(kind, &setup.spec, &data.train, &config)?;
        score_points(&evaluate(&model, &data.validation, None)?, &setup.reference)
    });
    let best = select_best(&trials)
        .cloned()
        .ok_or_else(|| Error::InvalidConfig(format!("every {kind} trial failed")))?;
    Ok(SearchOutcome { best, trials })
}

/// Trial-log column names.
pub const TRIAL_COLUMNS: [&str; 12] = [
    "config_index",
    "method",
    "lr",
    "wd",
    "scheduler",
    "norm_mode",
    "alpha",
    "lambda",
    "status",
    "val_hv_ce",
    "val_hv_mcr",
    "wall_seconds",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the trial log as CSV, ordered by config index.
pub fn write_trial_log<W: Write>(trials: &[Trial], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_COLUMNS)?;
    let mut sorted: Vec<&Trial> = trials.iter().collect();
    sorted.sort_by_key(|t| t.config.index);
    for t in sorted {
        let status = match &t.status {
            TrialStatus::Completed => "completed".to_string(),
            TrialStatus::Failed(msg) => format!("failed: {msg}"),
        };
        w.write_record([
            t.config.index.to_string(),
            t.method.clone(),
            t.config.lr.to_string(),
            t.config.weight_decay.to_string(),
            t.config.scheduler.to_string(),
            opt(t.config.params.norm_mode),
            opt(t.config.params.alpha),
            opt(t.config.params.lambda),
            status,
            opt(t.val_hv_ce),
            opt(t.val_hv_mcr),
            opt(t.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trial_log(trials: &[Trial], path: impl AsRef<Path>) -> Result<()> {
    write_trial_log(trials, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn completed(index: usize, hv: f64) -> Trial {
        Trial {
            config: TrialConfig {
                index,
                lr: 1e-3,
                weight_decay: 1e-4,
                scheduler: ScheduleKind::None,
                params: MethodParams::default(),
            },
            method: "uniform".into(),
            status: TrialStatus::Completed,
            val_hv_ce: Some(hv),
            val_hv_mcr: Some(hv),
            wall_seconds: None,
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(enumerate_grid(&SearchSpace::base()).len(), 351);
        assert_eq!(enumerate_grid(&SearchSpace::for_method(MethodKind::Mgda)).len(), 1404);
        assert_eq!(method_specific_space(MethodKind::Cosmos).len(), 30);
        assert!(method_specific_space(MethodKind::Uniform).is_empty());
        let single = SearchSpace {
            learning_rates: vec![1e-3],
            weight_decays: vec![1e-4],
            schedulers: vec![ScheduleKind::Cosine],
            extension: vec![],
        };
        assert_eq!(enumerate_grid(&single).len(), 1);
    }

    #[test]
    fn grid_order_is_lr_major() {
        let grid = enumerate_grid(&SearchSpace::base());
        assert_eq!(grid[0].lr, 1e-2);
        assert_eq!(grid[0].scheduler, ScheduleKind::Cosine);
        assert_eq!(grid[1].scheduler, ScheduleKind::Step);
        assert_eq!(grid[3].weight_decay, 7.5e-2);
        assert_eq!(grid[39].lr, 7.5e-3);
    }

    #[test]
    fn random_sampling() {
        let space = SearchSpace::base();
        let s = sample_random(&space, 100, 3).unwrap();
        let mut idx: Vec<usize> = s.iter().map(|c| c.index).collect();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 100);
        assert_eq!(s, sample_random(&space, 100, 3).unwrap());
        assert_eq!(sample_random(&space, 351, 0).unwrap().len(), 351);
        assert!(matches!(sample_random(&space, 352, 0), Err(Error::BudgetTooLarge { .. })));
    }

    #[test]
    fn selection_skips_failures_and_breaks_ties_by_index() {
        let mut failed = completed(0, 0.0);
        failed.status = TrialStatus::Failed("diverged".into());
        failed.val_hv_ce = None;
        let trials = vec![failed, completed(1, 0.5), completed(2, 0.7), completed(3, 0.7)];
        assert_eq!(select_best(&trials).unwrap().config.index, 2);
        let same = vec![completed(4, 0.3), completed(5, 0.3)];
        assert_eq!(select_best(&same).unwrap().config.index, 4);
        assert!(select_best(&[]).is_none());
    }
}

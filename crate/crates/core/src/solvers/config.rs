use std::fmt;

use serde::{Deserialize, Serialize};

use super::min_norm::NormMode;
use super::preference::PreferenceRay;
use crate::autodiff::ScheduleKind;
use crate::error::{Error, Result};

/// Training strategy plus its method-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Train on one task's loss only.
    SingleTask(usize),
    /// Equal weights `1/J`.
    Uniform,
    FixedWeight(PreferenceRay),
    Mgda(NormMode),
    /// Preference rays fed as extra input features, Dirichlet(α) sampling,
    /// cosine penalty weight λ.
    Cosmos { alpha: f64, lambda: f64 },
    /// Hypernetwork producing the target weights from a ray (linear scalarization).
    Phn { alpha: f64 },
    /// Simplified two-phase Pareto multi-task learning with `ray_count` models.
    Pmtl { ray_count: usize },
}

impl Method {
    pub fn validate(&self, tasks: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self {
            Method::SingleTask(t) if *t >= tasks => bad(format!("task {t} out of range for {tasks} tasks")),
            Method::FixedWeight(r) if r.dim() != tasks => bad(format!("ray has {} weights for {tasks} tasks", r.dim())),
            Method::Cosmos { alpha, lambda } if !(*alpha > 0.0) || !(*lambda >= 0.0) => {
                bad(format!("cosmos needs alpha > 0 and lambda >= 0, got {alpha}, {lambda}"))
            }
            Method::Phn { alpha } if !(*alpha > 0.0) => bad(format!("phn needs alpha > 0, got {alpha}")),
            Method::Pmtl { ray_count } if *ray_count < 2 => bad("pmtl needs at least 2 rays".into()),
            _ => Ok(()),
        }
    }

    /// Whether the trained model is evaluated at several rays.
    pub fn produces_front(&self) -> bool {
        matches!(self, Method::Cosmos { .. } | Method::Phn { .. } | Method::Pmtl { .. })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SingleTask(t) => write!(f, "single_task({t})"),
            Method::Uniform => write!(f, "uniform"),
            Method::FixedWeight(r) => write!(f, "fixed_weight({r})"),
            Method::Mgda(m) => write!(f, "mgda({m})"),
            Method::Cosmos { alpha, lambda } => write!(f, "cosmos(alpha={alpha};lambda={lambda})"),
            Method::Phn { alpha } => write!(f, "phn(alpha={alpha};solver=ls)"),
            Method::Pmtl { ray_count } => write!(f, "pmtl(rays={ray_count};simplified)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub lr: f64,
    pub weight_decay: f64,
    pub schedule: ScheduleKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            lr: 1e-3,
            weight_decay: 1e-4,
            schedule: ScheduleKind::Cosine,
            epochs: 10,
            batch_size: 64,
            seed: 0,
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }

    pub fn validate(&self, tasks: usize) -> Result<()> {
        self.method.validate(tasks)?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.weight_decay < 0.0 || self.weight_decay.is_nan() {
            return Err(Error::InvalidConfig("weight decay must be non-negative".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }

    /// One-line provenance string.
    pub fn describe(&self) -> String {
        format!(
            "method={} lr={} wd={} scheduler={} epochs={} batch={} seed={}",
            self.method, self.lr, self.weight_decay, self.schedule, self.epochs, self.batch_size, self.seed
        )
    }
}

/// Method families benchmarked by the harness. `SingleTask` here means the
/// combined set of one model per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    SingleTask,
    Uniform,
    Mgda,
    Cosmos,
    Phn,
    Pmtl,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::SingleTask,
        MethodKind::Uniform,
        MethodKind::Mgda,
        MethodKind::Cosmos,
        MethodKind::Phn,
        MethodKind::Pmtl,
    ];

    pub fn of(method: &Method) -> Option<Self> {
        match method {
            Method::SingleTask(_) => Some(MethodKind::SingleTask),
            Method::Uniform => Some(MethodKind::Uniform),
            Method::Mgda(_) => Some(MethodKind::Mgda),
            Method::Cosmos { .. } => Some(MethodKind::Cosmos),
            Method::Phn { .. } => Some(MethodKind::Phn),
            Method::Pmtl { .. } => Some(MethodKind::Pmtl),
            Method::FixedWeight(_) => None,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            MethodKind::SingleTask => "single_task",
            MethodKind::Uniform => "uniform",
            MethodKind::Mgda => "mgda",
            MethodKind::Cosmos => "cosmos",
            MethodKind::Phn => "phn",
            MethodKind::Pmtl => "pmtl",
        })
    }
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

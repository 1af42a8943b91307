//! Experiment plans and their flat `key = value` text form.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{NetworkSpec, ScheduleKind};
use crate::error::{Error, Result};
use crate::hpo::{MethodParams, DEFAULT_PMTL_RAYS};
use crate::moo::ReferencePoint;
use crate::problems::MergedGlyphConfig;
use crate::solvers::{MethodKind, NormMode, DEFAULT_EVAL_RAYS};

/// How the configuration of every (method, c) cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HpoMode {
    Random,
    Grid,
    /// Use the plan's fixed hyperparameters.
    None,
}

impl FromStr for HpoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(HpoMode::Random),
            "grid" => Ok(HpoMode::Grid),
            "none" => Ok(HpoMode::None),
            other => Err(Error::Parse(format!("unknown hpo mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for HpoMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HpoMode::Random => "random",
            HpoMode::Grid => "grid",
            HpoMode::None => "none",
        })
    }
}

/// Hyperparameters used when `hpo = none`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedHyperparameters {
    pub lr: f64,
    pub weight_decay: f64,
    pub scheduler: ScheduleKind,
    pub params: MethodParams,
}

impl Default for FixedHyperparameters {
    fn default() -> Self {
        Self {
            lr: 2.5e-3,
            weight_decay: 1e-4,
            scheduler: ScheduleKind::Cosine,
            params: MethodParams {
                norm_mode: Some(NormMode::L2),
                alpha: Some(1.0),
                lambda: Some(1.0),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dataset: MergedGlyphConfig,
    pub dataset_seed: u64,
    pub methods: Vec<MethodKind>,
    pub seeds: Vec<u64>,
    pub multipliers: Vec<f64>,
    pub hpo: HpoMode,
    pub budget: usize,
    pub hpo_seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub trunk_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
    pub eval_rays: usize,
    pub reference: ReferencePoint,
    pub pmtl_rays: usize,
    pub fixed: FixedHyperparameters,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            dataset: MergedGlyphConfig::default(),
            dataset_seed: 0,
            methods: vec![MethodKind::SingleTask, MethodKind::Uniform],
            seeds: (0..10).collect(),
            multipliers: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            hpo: HpoMode::None,
            budget: 100,
            hpo_seed: 0,
            epochs: 20,
            batch_size: 64,
            trunk_widths: vec![32, 16],
            head_widths: Vec::new(),
            eval_rays: DEFAULT_EVAL_RAYS,
            reference: ReferencePoint::default(),
            pmtl_rays: DEFAULT_PMTL_RAYS,
            fixed: FixedHyperparameters::default(),
        }
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("{key}: bad value {s:?}"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: bad value {v:?}")))
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.is_empty() {
        Ok(None)
    } else {
        parse_one(key, v).map(Some)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if self.seeds.is_empty() || distinct.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("seeds must be non-empty and distinct".into()));
        }
        if self.multipliers.is_empty() || self.multipliers.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidConfig("width multipliers must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("plan lists no methods".into()));
        }
        if self.batch_size == 0 || self.eval_rays < 2 || self.pmtl_rays < 2 {
            return Err(Error::InvalidConfig(
                "batch_size must be positive, eval_rays and pmtl_rays at least 2".into(),
            ));
        }
        if self.reference.dim() != 2 {
            return Err(Error::NotTwoObjectives(self.reference.dim()));
        }
        self.base_spec(1.0).validate()
    }

    /// Target network for the glyph data at multiplier `c`.
    pub fn base_spec(&self, c: f64) -> NetworkSpec {
        NetworkSpec {
            input_dim: self.dataset.pixel_count(),
            trunk_widths: self.trunk_widths.clone(),
            width_multiplier: c,
            head_widths: self.head_widths.clone(),
            task_count: 2,
            classes_per_task: self.dataset.classes_per_task,
        }
    }

    pub fn to_text(&self) -> String {
        let d = &self.dataset;
        let f = &self.fixed;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to string");
        kv("dataset.glyph_size", d.glyph_size.to_string());
        kv("dataset.canvas_size", d.canvas_size.to_string());
        kv("dataset.classes", d.classes_per_task.to_string());
        kv("dataset.overlap_shift", d.overlap_shift.to_string());
        kv("dataset.noise_std", d.noise_std.to_string());
        kv("dataset.train", d.counts.0.to_string());
        kv("dataset.validation", d.counts.1.to_string());
        kv("dataset.test", d.counts.2.to_string());
        kv("dataset.seed", self.dataset_seed.to_string());
        kv("methods", join(&self.methods));
        kv("seeds", join(&self.seeds));
        kv("c", join(&self.multipliers));
        kv("hpo", self.hpo.to_string());
        kv("budget", self.budget.to_string());
        kv("hpo_seed", self.hpo_seed.to_string());
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("trunk", join(&self.trunk_widths));
        kv("heads", join(&self.head_widths));
        kv("eval_rays", self.eval_rays.to_string());
        kv("ref_point", join(self.reference.values()));
        kv("pmtl_rays", self.pmtl_rays.to_string());
        kv("lr", f.lr.to_string());
        kv("wd", f.weight_decay.to_string());
        kv("scheduler", f.scheduler.to_string());
        kv("norm_mode", opt(f.params.norm_mode));
        kv("alpha", opt(f.params.alpha));
        kv("lambda", opt(f.params.lambda));
        s
    }

    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped; unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "dataset.glyph_size" => p.dataset.glyph_size = parse_one(k, v)?,
                "dataset.canvas_size" => p.dataset.canvas_size = parse_one(k, v)?,
                "dataset.classes" => p.dataset.classes_per_task = parse_one(k, v)?,
                "dataset.overlap_shift" => p.dataset.overlap_shift = parse_one(k, v)?,
                "dataset.noise_std" => p.dataset.noise_std = parse_one(k, v)?,
                "dataset.train" => p.dataset.counts.0 = parse_one(k, v)?,
                "dataset.validation" => p.dataset.counts.1 = parse_one(k, v)?,
                "dataset.test" => p.dataset.counts.2 = parse_one(k, v)?,
                "dataset.seed" => p.dataset_seed = parse_one(k, v)?,
                "methods" => p.methods = parse_list(k, v)?,
                "seeds" => p.seeds = parse_list(k, v)?,
                "c" => p.multipliers = parse_list(k, v)?,
                "hpo" => p.hpo = parse_one(k, v)?,
                "budget" => p.budget = parse_one(k, v)?,
                "hpo_seed" => p.hpo_seed = parse_one(k, v)?,
                "epochs" => p.epochs = parse_one(k, v)?,
                "batch_size" => p.batch_size = parse_one(k, v)?,
                "trunk" => p.trunk_widths = parse_list(k, v)?,
                "heads" => p.head_widths = parse_list(k, v)?,
                "eval_rays" => p.eval_rays = parse_one(k, v)?,
                "ref_point" => p.reference = ReferencePoint::new(parse_list(k, v)?)?,
                "pmtl_rays" => p.pmtl_rays = parse_one(k, v)?,
                "lr" => p.fixed.lr = parse_one(k, v)?,
                "wd" => p.fixed.weight_decay = parse_one(k, v)?,
                "scheduler" => p.fixed.scheduler = parse_one(k, v)?,
                "norm_mode" => p.fixed.params.norm_mode = parse_opt(k, v)?,
                "alpha" => p.fixed.params.alpha = parse_opt(k, v)?,
                "lambda" => p.fixed.params.lambda = parse_opt(k, v)?,
                other => return Err(Error::Parse(format!("unknown plan key {other:?}"))),
            }
        }
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut plan = ExperimentPlan {
            methods: vec![MethodKind::Mgda, MethodKind::Cosmos],
            head_widths: vec![8],
            ..ExperimentPlan::default()
        };
        plan.fixed.params.lambda = None;
        assert_eq!(ExperimentPlan::from_text(&plan.to_text()).unwrap(), plan);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentPlan::from_text("seeds = 1,2\nfoo = 3\n").is_err());
        assert!(ExperimentPlan::from_text("# comment\n\nseeds = 1,2\n").is_ok());
    }

    #[test]
    fn validation() {
        let mut plan = ExperimentPlan::default();
        assert!(plan.validate().is_ok());
        plan.seeds = vec![1, 1];
        assert!(plan.validate().is_err());
        plan.seeds = vec![1];
        plan.multipliers = vec![0.0];
        assert!(plan.validate().is_err());
    }
}

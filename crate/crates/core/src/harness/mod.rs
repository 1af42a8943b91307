//! Experiment orchestration: configuration choice per (method, c), final
//! multi-seed runs on the test split, the capacity ablation and reports.

pub mod plan;
pub mod records;
pub mod report;
pub mod selftest;

pub use plan::{ExperimentPlan, FixedHyperparameters, HpoMode};
pub use records::{
    aggregate, apply_delta_st, read_records_csv, representative_point, sort_records, write_records_csv, Aggregate,
    MeanStd, ResultRecord, RECORD_COLUMNS,
};
pub use report::{emit_report, render_report, ReportFormat};
pub use selftest::{run_selftest, SelftestOutcome};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::param_count;
use crate::error::{Error, Result};
use crate::hpo::{run_search, Budget, SearchSetup, SearchSpace, Trial, TrialConfig};
use crate::problems::{generate_glyph_dataset, GlyphDataset};
use crate::solvers::{evaluate, evaluation_rays, train_for_kind, MethodKind, SolverConfig, TrainedModel};

/// Generates the plan's dataset.
pub fn load_dataset(plan: &ExperimentPlan) -> Result<GlyphDataset> {
    generate_glyph_dataset(&plan.dataset, plan.dataset_seed)
}

/// Identifier written into every record.
pub fn dataset_id(data: &GlyphDataset) -> String {
    format!("glyphs-seed{}", data.seed)
}

fn template(plan: &ExperimentPlan) -> SolverConfig {
    SolverConfig {
        epochs: plan.epochs,
        batch_size: plan.batch_size,
        seed: plan.hpo_seed,
        ..SolverConfig::new(crate::solvers::Method::Uniform)
    }
}

/// Configuration chosen for one (method, c) cell, with the search log when
/// HPO ran.
#[derive(Debug, Clone, PartialEq)]
pub struct ChosenConfig {
    pub kind: MethodKind,
    pub c: f64,
    pub config: SolverConfig,
    pub trials: Vec<Trial>,
}

/// Runs the plan's HPO mode for `kind` at multiplier `c`.
pub fn choose_config(plan: &ExperimentPlan, data: &GlyphDataset, kind: MethodKind, c: f64) -> Result<ChosenConfig> {
    let template = template(plan);
    let budget = match plan.hpo {
        HpoMode::None => {
            let fixed = TrialConfig {
                index: 0,
                lr: plan.fixed.lr,
                weight_decay: plan.fixed.weight_decay,
                scheduler: plan.fixed.scheduler,
                params: plan.fixed.params,
            };
            return Ok(ChosenConfig {
                kind,
                c,
                config: fixed.solver_config(kind, &template, plan.pmtl_rays),
                trials: Vec::new(),
            });
        }
        HpoMode::Random => Budget::Random(plan.budget),
        HpoMode::Grid => Budget::Grid,
    };
    let setup = SearchSetup {
        spec: plan.base_spec(c),
        template: template.clone(),
        reference: plan.reference.clone(),
        pmtl_rays: plan.pmtl_rays,
        record_timing: false,
    };
    let outcome = run_search(kind, &SearchSpace::for_method(kind), budget, data, &setup, plan.hpo_seed)?;
    log::info!(
        "{kind} c={c}: best config {} (val HV_CE {:?})",
        outcome.best.config.index,
        outcome.best.val_hv_ce
    );
    Ok(ChosenConfig {
        kind,
        c,
        config: outcome.best.config.solver_config(kind, &template, plan.pmtl_rays),
        trials: outcome.trials,
    })
}

fn trained_param_count(model: &TrainedModel) -> usize {
    match model {
        TrainedModel::Network(n) | TrainedModel::Conditioned(n) => param_count(&n.spec),
        TrainedModel::SingleTaskSet(ms) => ms.iter().map(|n| param_count(&n.spec)).sum(),
        TrainedModel::Hyper(h) => h.param_count(),
        TrainedModel::Ensemble(ms) => ms.iter().map(|m| param_count(&m.network.spec)).sum(),
    }
}

/// Trains one (method, c, seed) cell on the training split and scores it on
/// the test split. ΔST columns are left empty.
pub fn run_cell(plan: &ExperimentPlan, data: &GlyphDataset, chosen: &ChosenConfig, seed: u64) -> Result<ResultRecord> {
    let config = SolverConfig {
        seed,
        ..chosen.config.clone()
    };
    let model = train_for_kind(chosen.kind, &plan.base_spec(chosen.c), &data.train, &config)?;
    let rays = evaluation_rays(2, plan.eval_rays);
    let points = evaluate(&model, &data.test, Some(&rays))?;
    let score = crate::hpo::score_points(&points, &plan.reference)?;
    let rep = &points[representative_point(&points)];
    Ok(ResultRecord {
        method: chosen.kind,
        dataset: dataset_id(data),
        seed,
        c: chosen.c,
        param_count: trained_param_count(&model),
        mcr: rep.mcr.clone(),
        ce: rep.ce.clone(),
        hv_mcr: score.hv_mcr,
        hv_ce: score.hv_ce,
        delta_st_mcr: None,
        delta_st_ce: None,
        delta_st_mcr_paired: None,
        config: config.describe(),
        front_mcr: points.iter().map(|p| p.mcr.clone()).collect(),
        front_ce: points.iter().map(|p| p.ce.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Sorted by (method, dataset, c, seed) with ΔST filled in.
    pub records: Vec<ResultRecord>,
    pub chosen: Vec<ChosenConfig>,
    /// `(method, c, seed, error)` of cells that failed.
    pub failures: Vec<(MethodKind, f64, u64, String)>,
}

/// For every multiplier and method: choose a configuration, then train and
/// test one model per seed. Validation data is only used by HPO.
pub fn run_final(plan: &ExperimentPlan, data: &GlyphDataset) -> Result<RunOutput> {
    plan.validate()?;
    let mut chosen = Vec::new();
    for &c in &plan.multipliers {
        for &kind in &plan.methods {
            chosen.push(choose_config(plan, data, kind, c)?);
        }
    }
    let cells: Vec<(&ChosenConfig, u64)> = chosen
        .iter()
        .flat_map(|ch| plan.seeds.iter().map(move |&s| (ch, s)))
        .collect();
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|(ch, seed)| (ch.kind, ch.c, *seed, run_cell(plan, data, ch, *seed)))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (kind, c, seed, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("{kind} c={c} seed={seed} failed and is excluded from aggregates: {e}");
                failures.push((kind, c, seed, e.to_string()));
            }
        }
    }
    apply_delta_st(&mut records);
    sort_records(&mut records);
    Ok(RunOutput {
        records,
        chosen,
        failures,
    })
}

/// One capacity row: Single Task against Uniform at multiplier `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub c: f64,
    pub param_count: usize,
    pub single_task_hv: MeanStd,
    pub uniform_hv: MeanStd,
    pub delta_st: MeanStd,
    /// Mean per-task test error.
    pub single_task_mcr: Vec<f64>,
    pub uniform_mcr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub run: RunOutput,
}

/// Builds the capacity rows from records that contain Single Task and
/// Uniform results for every multiplier.
pub fn ablation_rows(records: &[ResultRecord]) -> Result<Vec<AblationRow>> {
    let aggs = aggregate(records);
    let mut cs: Vec<f64> = aggs.iter().map(|a| a.c).collect();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    cs.into_iter()
        .map(|c| {
            let find = |k: MethodKind| {
                aggs.iter()
                    .find(|a| a.method == k && a.c == c)
                    .ok_or_else(|| Error::InvalidConfig(format!("no {k} results at c={c}")))
            };
            let st = find(MethodKind::SingleTask)?;
            let uni = find(MethodKind::Uniform)?;
            Ok(AblationRow {
                c,
                param_count: uni.param_count,
                single_task_hv: st.hv_mcr,
                uniform_hv: uni.hv_mcr,
                delta_st: uni
                    .delta_st_mcr
                    .ok_or_else(|| Error::InvalidConfig(format!("missing delta at c={c}")))?,
                single_task_mcr: st.mcr.iter().map(|m| m.mean).collect(),
                uniform_mcr: uni.mcr.iter().map(|m| m.mean).collect(),
            })
        })
        .collect()
}

/// Final runs at every multiplier followed by the ΔST-per-capacity table.
pub fn run_capacity_ablation(plan: &ExperimentPlan, data: &GlyphDataset) -> Result<AblationTable> {
    for needed in [MethodKind::SingleTask, MethodKind::Uniform] {
        if !plan.methods.contains(&needed) {
            return Err(Error::InvalidConfig(format!("the capacity ablation needs {needed}")));
        }
    }
    let run = run_final(plan, data)?;
    let rows = ablation_rows(&run.records)?;
    Ok(AblationTable { rows, run })
}

/// Plain-text rendering of the ablation table.
pub fn format_ablation(rows: &[AblationRow]) -> String {
    let mut s = String::from("c\tparams\tST HV\tUniform HV\tdelta ST\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{:.4} ± {:.4}\t{:.4} ± {:.4}\t{:.4} ± {:.4}\n",
            r.c,
            r.param_count,
            r.single_task_hv.mean,
            r.single_task_hv.std,
            r.uniform_hv.mean,
            r.uniform_hv.std,
            r.delta_st.mean,
            r.delta_st.std
        ));
    }
    s
}

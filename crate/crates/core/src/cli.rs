//! Command-line front end: `hpo`, `run`, `ablate`, `report`, `selftest`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{
    emit_report, format_ablation, load_dataset, read_records_csv, run_capacity_ablation, run_final, run_selftest,
    ExperimentPlan, HpoMode,
};
use crate::hpo::{run_search, save_trial_log, Budget, SearchSetup, SearchSpace};
use crate::moo::ReferencePoint;
use crate::problems::GlyphDataset;
use crate::solvers::{MethodKind, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "mtlbench", version, about = "Multi-objective optimization benchmark for multi-task learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hyperparameter search for one method; writes the trial log.
    Hpo(CommonArgs),
    /// Final multi-seed runs on the test split.
    Run(CommonArgs),
    /// Capacity ablation: Single Task against Uniform across width multipliers.
    Ablate(CommonArgs),
    /// Re-render a record CSV as csv, json or plotdata.
    Report(ReportArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Plan file (`key = value` lines); flags override its values.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// `glyphs` to generate from the plan, or a path to an exported dataset file.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Comma-separated methods, e.g. `single_task,uniform`.
    #[arg(long)]
    pub method: Option<String>,
    /// A count `N` (seeds 0..N) or a comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// A single seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated width multipliers.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// random, grid or none.
    #[arg(long)]
    pub hpo: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Comma-separated reference point.
    #[arg(long)]
    pub ref_point: Option<String>,
    #[arg(long)]
    pub eval_rays: Option<usize>,
    /// Training/validation/test sizes, comma-separated.
    #[arg(long)]
    pub counts: Option<String>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv, json or plotdata.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Fill the wall_seconds column of trial logs.
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Record CSV produced by `run` or `ablate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Only include these methods (comma-separated).
    #[arg(long)]
    pub method: Option<String>,
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Parse(format!("{what}: bad value {v:?}"))))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if !s.contains(',') {
        let n: u64 = s.trim().parse().map_err(|_| Error::Parse(format!("seeds: bad value {s:?}")))?;
        return Ok((0..n).collect());
    }
    parse_list("seeds", s)
}

/// Plan from `--plan` (or the defaults) with every given flag applied.
pub fn build_plan(a: &CommonArgs) -> Result<ExperimentPlan> {
    let mut plan = match &a.plan {
        Some(p) => ExperimentPlan::load(p)?,
        None => ExperimentPlan::default(),
    };
    if let Some(m) = &a.method {
        plan.methods = parse_list("method", m)?;
    }
    if let Some(s) = &a.seeds {
        plan.seeds = parse_seeds(s)?;
    }
    if let Some(s) = a.seed {
        plan.seeds = vec![s];
    }
    if let Some(c) = &a.c {
        plan.multipliers = parse_list("c", c)?;
    }
    if let Some(e) = a.epochs {
        plan.epochs = e;
    }
    if let Some(b) = a.batch_size {
        plan.batch_size = b;
    }
    if let Some(h) = &a.hpo {
        plan.hpo = h.parse()?;
    }
    if let Some(b) = a.budget {
        plan.budget = b;
    }
    if let Some(r) = &a.ref_point {
        plan.reference = ReferencePoint::new(parse_list("ref-point", r)?)?;
    }
    if let Some(r) = a.eval_rays {
        plan.eval_rays = r;
    }
    if let Some(c) = &a.counts {
        let v: Vec<usize> = parse_list("counts", c)?;
        let [train, validation, test] = v[..] else {
            return Err(Error::Parse("counts needs three values".into()));
        };
        plan.dataset.counts = (train, validation, test);
    }
    plan.validate()?;
    Ok(plan)
}

fn dataset(a: &CommonArgs, plan: &mut ExperimentPlan) -> Result<GlyphDataset> {
    match a.dataset.as_deref() {
        None | Some("glyphs") => load_dataset(plan),
        Some(path) => {
            let data = GlyphDataset::load(path)?;
            plan.dataset = data.config.clone();
            plan.dataset_seed = data.seed;
            Ok(data)
        }
    }
}

fn out_path(a: &CommonArgs, default: &str) -> PathBuf {
    a.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn cmd_hpo(a: &CommonArgs) -> Result<()> {
    let mut plan = build_plan(a)?;
    let data = dataset(a, &mut plan)?;
    let kind = plan.methods[0];
    let budget = match plan.hpo {
        HpoMode::Grid => Budget::Grid,
        HpoMode::Random | HpoMode::None => Budget::Random(plan.budget),
    };
    let setup = SearchSetup {
        spec: plan.base_spec(plan.multipliers[0]),
        template: SolverConfig {
            epochs: plan.epochs,
            batch_size: plan.batch_size,
            seed: plan.hpo_seed,
            ..SolverConfig::new(crate::solvers::Method::Uniform)
        },
        reference: plan.reference.clone(),
        pmtl_rays: plan.pmtl_rays,
        record_timing: a.record_timing,
    };
    let outcome = run_search(kind, &SearchSpace::for_method(kind), budget, &data, &setup, plan.hpo_seed)?;
    let out = out_path(a, "trials.csv");
    save_trial_log(&outcome.trials, &out)?;
    println!(
        "best config {} (lr={} wd={} scheduler={}), validation HV_CE {:.4}; {} trials written to {}",
        outcome.best.config.index,
        outcome.best.config.lr,
        outcome.best.config.weight_decay,
        outcome.best.config.scheduler,
        outcome.best.val_hv_ce.unwrap_or(f64::NAN),
        outcome.trials.len(),
        out.display()
    );
    Ok(())
}

fn write_records(a: &CommonArgs, records: &[crate::harness::ResultRecord], default: &str) -> Result<PathBuf> {
    let out = out_path(a, default);
    emit_report(records, a.format.parse()?, &out, None)?;
    Ok(out)
}

fn cmd_run(a: &CommonArgs) -> Result<()> {
    let mut plan = build_plan(a)?;
    if a.c.is_none() && a.plan.is_none() {
        plan.multipliers = vec![1.0];
    }
    let data = dataset(a, &mut plan)?;
    let run = run_final(&plan, &data)?;
    let out = write_records(a, &run.records, "results.csv")?;
    for (kind, c, seed, err) in &run.failures {
        eprintln!("warning: {kind} c={c} seed={seed} failed: {err}");
    }
    println!("{} records written to {}", run.records.len(), out.display());
    Ok(())
}

fn cmd_ablate(a: &CommonArgs) -> Result<()> {
    let mut plan = build_plan(a)?;
    if a.method.is_none() && a.plan.is_none() {
        plan.methods = vec![MethodKind::SingleTask, MethodKind::Uniform];
    }
    let data = dataset(a, &mut plan)?;
    let table = run_capacity_ablation(&plan, &data)?;
    let out = write_records(a, &table.run.records, "ablation.csv")?;
    print!("{}", format_ablation(&table.rows));
    println!("{} records written to {}", table.run.records.len(), out.display());
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let records = read_records_csv(std::fs::File::open(&a.input)?)?;
    let methods: Option<Vec<MethodKind>> = a.method.as_deref().map(|m| parse_list("method", m)).transpose()?;
    emit_report(&records, a.format.parse()?, &a.out, methods.as_deref())?;
    println!("report written to {}", a.out.display());
    Ok(())
}

fn cmd_selftest() -> Result<bool> {
    let outcomes = run_selftest()?;
    for o in &outcomes {
        println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::Parse(_) | Error::InvalidConfig(_) | Error::BudgetTooLarge { .. })
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Hpo(a) => cmd_hpo(a).map(|_| true),
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Ablate(a) => cmd_ablate(a).map(|_| true),
        Command::Report(a) => cmd_report(a).map(|_| true),
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) if is_usage_error(&e) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}


//! Search protocol, records, reports and plan files.

mod common;

use std::collections::BTreeSet;

use mtlbench::harness::{
    aggregate, apply_delta_st, read_records_csv, render_report, run_final, write_records_csv, ExperimentPlan, HpoMode,
    MeanStd, ReportFormat, ResultRecord, RECORD_COLUMNS,
};
use mtlbench::hpo::{
    enumerate_grid, run_trials, sample_random, select_best, write_trial_log, SearchSpace, TrialScore, TrialStatus,
    TRIAL_COLUMNS,
};
use mtlbench::solvers::MethodKind;
use mtlbench::Error;
use proptest::prelude::*;

#[test]
fn grid_sizes_per_method() {
    let sizes: Vec<(MethodKind, usize)> = MethodKind::ALL
        .iter()
        .map(|&k| (k, enumerate_grid(&SearchSpace::for_method(k)).len()))
        .collect();
    for (k, n) in sizes {
        let expected = match k {
            MethodKind::Mgda => 351 * 4,
            MethodKind::Phn => 351 * 6,
            MethodKind::Cosmos => 351 * 30,
            _ => 351,
        };
        assert_eq!(n, expected, "{k}");
    }
}

#[test]
fn grid_configs_are_distinct_and_indexed_in_order() {
    let grid = enumerate_grid(&SearchSpace::for_method(MethodKind::Cosmos));
    assert!(grid.iter().enumerate().all(|(i, c)| c.index == i));
    let keys: BTreeSet<String> = grid
        .iter()
        .map(|c| format!("{} {} {} {:?}", c.lr, c.weight_decay, c.scheduler, c.params))
        .collect();
    assert_eq!(keys.len(), grid.len());
}

#[test]
fn random_search_inclusion_is_uniform() {
    // Each grid point is included with probability 100/351 per search, so
    // over 2000 searches its count is Binomial(2000, 0.285): mean 570, σ ≈ 20.
    let space = SearchSpace::base();
    let searches = 2000;
    let mut counts = vec![0usize; 351];
    for seed in 0..searches {
        for c in sample_random(&space, 100, seed).unwrap() {
            counts[c.index] += 1;
        }
    }
    let p = 100.0 / 351.0;
    let mean = searches as f64 * p;
    let sigma = (searches as f64 * p * (1.0 - p)).sqrt();
    let worst = counts.iter().map(|&c| (c as f64 - mean).abs()).fold(0.0, f64::max);
    assert!(worst < 4.0 * sigma, "worst deviation {worst} vs σ {sigma}");
}

#[test]
fn budget_limits() {
    let space = SearchSpace::base();
    assert!(matches!(sample_random(&space, 352, 0), Err(Error::BudgetTooLarge { budget: 352, grid: 351 })));
    let all = sample_random(&space, 351, 4).unwrap();
    let idx: BTreeSet<usize> = all.iter().map(|c| c.index).collect();
    assert_eq!(idx.len(), 351);
    assert!(sample_random(&space, 0, 0).unwrap().is_empty());
}

#[test]
fn failed_trials_are_logged_and_skipped() {
    let configs = sample_random(&SearchSpace::base(), 12, 3).unwrap();
    let trials = run_trials(&configs, "uniform", false, |c| {
        if c.lr >= 7.5e-3 {
            Err(Error::NonFiniteLoss { batch: 0 })
        } else {
            Ok(TrialScore {
                hv_ce: c.lr,
                hv_mcr: 0.5,
            })
        }
    });
    assert!(trials.windows(2).all(|w| w[0].config.index < w[1].config.index));
    let best = select_best(&trials).unwrap();
    let expected = configs.iter().map(|c| c.lr).filter(|lr| *lr < 7.5e-3).fold(0.0, f64::max);
    assert_eq!(best.val_hv_ce, Some(expected));
    assert!(trials.iter().any(|t| matches!(t.status, TrialStatus::Failed(_))));

    let mut log = Vec::new();
    write_trial_log(&trials, &mut log).unwrap();
    let text = String::from_utf8(log).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRIAL_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 13);
    assert!(text.contains("failed"));

    let all_failed = run_trials(&configs, "uniform", false, |_| Err(Error::NonFiniteGradient));
    assert!(select_best(&all_failed).is_none());
}

fn record_strategy() -> impl Strategy<Value = ResultRecord> {
    let pair = || prop::collection::vec(0.0..3.0f64, 2);
    (
        prop::sample::select(MethodKind::ALL.to_vec()),
        any::<u64>(),
        prop::sample::select(vec![0.25, 0.5, 1.0, 2.0, 4.0]),
        (pair(), pair(), 0.0..1.0f64, 0.0..1.0f64),
        prop::option::of(-1.0..1.0f64),
        "[a-z=;, ]{0,30}",
        prop::collection::vec(pair(), 1..5),
    )
        .prop_map(|(method, seed, c, (mcr, ce, hv_mcr, hv_ce), delta, config, front)| ResultRecord {
            method,
            dataset: "glyphs-seed0".into(),
            seed,
            c,
            param_count: 1234,
            mcr,
            ce,
            hv_mcr,
            hv_ce,
            delta_st_mcr: delta,
            delta_st_ce: delta.map(|d| d / 2.0),
            delta_st_mcr_paired: None,
            config,
            front_ce: front.clone(),
            front_mcr: front,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn record_csv_round_trips(records in prop::collection::vec(record_strategy(), 0..6)) {
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf).unwrap();
        prop_assert_eq!(read_records_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn delta_st_is_mean_single_task_minus_own(records in prop::collection::vec(record_strategy(), 1..12)) {
        let mut records = records;
        apply_delta_st(&mut records);
        for r in &records {
            let st: Vec<f64> = records
                .iter()
                .filter(|s| s.method == MethodKind::SingleTask && s.c == r.c)
                .map(|s| s.hv_mcr)
                .collect();
            if st.is_empty() {
                continue;
            }
            let mean = st.iter().sum::<f64>() / st.len() as f64;
            prop_assert!((r.delta_st_mcr.unwrap() - (mean - r.hv_mcr)).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregates_match_recomputation(records in prop::collection::vec(record_strategy(), 1..12)) {
        for a in aggregate(&records) {
            let hv: Vec<f64> = records
                .iter()
                .filter(|r| r.method == a.method && r.c == a.c)
                .map(|r| r.hv_mcr)
                .collect();
            let n = hv.len() as f64;
            let mean = hv.iter().sum::<f64>() / n;
            let std = (hv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert_eq!(a.seeds, hv.len());
            prop_assert!((a.hv_mcr.mean - mean).abs() < 1e-12);
            prop_assert!((a.hv_mcr.std - std).abs() < 1e-12);
        }
    }
}

#[test]
fn one_seed_has_zero_spread() {
    assert_eq!(MeanStd::of(&[0.7]).unwrap(), MeanStd { mean: 0.7, std: 0.0 });
    assert!(MeanStd::of(&[]).is_none());
}

#[test]
fn record_header_is_rejected_when_altered() {
    let header = RECORD_COLUMNS.join(",").replace("hv_ce", "hv_x");
    assert!(read_records_csv(format!("{header}\n").as_bytes()).is_err());
}

fn tiny_plan(seeds: Vec<u64>) -> ExperimentPlan {
    let mut plan = ExperimentPlan {
        methods: vec![MethodKind::SingleTask, MethodKind::Uniform],
        seeds,
        multipliers: vec![0.5],
        hpo: HpoMode::None,
        epochs: 1,
        eval_rays: 5,
        ..ExperimentPlan::default()
    };
    plan.dataset.counts = (300, 50, 100);
    plan
}

#[test]
fn seeds_are_isolated() {
    let plan_a = tiny_plan(vec![0, 1]);
    let plan_b = tiny_plan(vec![0, 2]);
    let data = mtlbench::harness::load_dataset(&plan_a).unwrap();
    let a = run_final(&plan_a, &data).unwrap();
    let b = run_final(&plan_b, &data).unwrap();
    let strip = |r: &ResultRecord| ResultRecord {
        delta_st_mcr: None,
        delta_st_ce: None,
        ..r.clone()
    };
    for (ra, rb) in a.records.iter().zip(&b.records).filter(|(r, _)| r.seed == 0) {
        assert_eq!(strip(ra), strip(rb));
        assert_eq!(ra.delta_st_mcr_paired, rb.delta_st_mcr_paired);
    }
    let seed1 = a.records.iter().find(|r| r.seed == 1).unwrap();
    let seed2 = b.records.iter().find(|r| r.seed == 2 && r.method == seed1.method).unwrap();
    assert_ne!(seed1.front_mcr, seed2.front_mcr);
    assert!(a.failures.is_empty());
    // Records come out ordered by (method, dataset, c, seed).
    let keys: Vec<(MethodKind, u64)> = a.records.iter().map(|r| (r.method, r.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn reports_in_every_format() {
    let plan = tiny_plan(vec![0]);
    let data = mtlbench::harness::load_dataset(&plan).unwrap();
    let run = run_final(&plan, &data).unwrap();

    let json: serde_json::Value = serde_json::from_str(&render_report(&run.records, ReportFormat::Json, None).unwrap()).unwrap();
    assert_eq!(json["records"].as_array().unwrap().len(), run.records.len());
    assert_eq!(json["aggregates"].as_array().unwrap().len(), 2);
    assert_eq!(json["aggregates"][1]["hv_mcr"]["std"], 0.0);

    let plot = render_report(&run.records, ReportFormat::Plotdata, None).unwrap();
    assert!(plot.starts_with("series,method,c,seed,point,task0,task1\n"));
    assert!(plot.lines().any(|l| l.starts_with("front,uniform,")));
    assert_eq!(plot.lines().filter(|l| l.starts_with("capacity,")).count(), 2);

    let csv = render_report(&run.records, ReportFormat::Csv, Some(&[MethodKind::Uniform])).unwrap();
    assert_eq!(read_records_csv(csv.as_bytes()).unwrap().len(), 1);
    assert!("xml".parse::<ReportFormat>().is_err());
}

#[test]
fn plan_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.txt");
    let plan = tiny_plan(vec![3, 1]);
    plan.save(&path).unwrap();
    assert_eq!(ExperimentPlan::load(&path).unwrap(), plan);

    let edited = ExperimentPlan::from_text("# desk run\nmethods = mgda, cosmos\nc = 0.5,4\nhpo = grid\n").unwrap();
    assert_eq!(edited.methods, vec![MethodKind::Mgda, MethodKind::Cosmos]);
    assert_eq!(edited.multipliers, vec![0.5, 4.0]);
    assert_eq!(edited.hpo, HpoMode::Grid);
    assert!(ExperimentPlan::from_text("method = uniform\n").is_err());
    assert!(ExperimentPlan::from_text("seeds\n").is_err());
    assert!(ExperimentPlan::from_text("hpo = bayesian\n").is_err());
}

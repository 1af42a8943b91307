//! Per-seed result records, ΔST bookkeeping and seed aggregates.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::delta_st;
use crate::solvers::{EvalPoint, MethodKind};

/// One (method, dataset, c, seed) outcome on the test split.
///
/// `mcr` and `ce` hold the representative point: the only point for
/// single-point methods, otherwise the point whose ray is closest to uniform.
/// `front_mcr` / `front_ce` hold every evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: MethodKind,
    pub dataset: String,
    pub seed: u64,
    pub c: f64,
    pub param_count: usize,
    pub mcr: Vec<f64>,
    pub ce: Vec<f64>,
    pub hv_mcr: f64,
    pub hv_ce: f64,
    /// Mean Single Task HV at the same `c` minus `hv_mcr`.
    pub delta_st_mcr: Option<f64>,
    pub delta_st_ce: Option<f64>,
    /// Same-seed Single Task HV minus `hv_mcr`.
    pub delta_st_mcr_paired: Option<f64>,
    pub config: String,
    pub front_mcr: Vec<Vec<f64>>,
    pub front_ce: Vec<Vec<f64>>,
}

/// CSV header, in field order.
pub const RECORD_COLUMNS: [&str; 16] = [
    "method",
    "dataset",
    "seed",
    "c",
    "param_count",
    "mcr",
    "ce",
    "hv_mcr",
    "hv_ce",
    "delta_st_mcr",
    "delta_st_ce",
    "delta_st_mcr_paired",
    "config",
    "front_mcr",
    "front_ce",
    "points",
];

/// Index of the point whose ray is most aligned with the uniform ray.
pub fn representative_point(points: &[EvalPoint]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in points.iter().enumerate() {
        let score = match &p.ray {
            Some(r) => crate::solvers::cosine_similarity(r.weights(), &vec![1.0; r.dim()]),
            None => 0.0,
        };
        if score > best.1 {
            best = (i, score);
        }
    }
    best.0
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn join_front(front: &[Vec<f64>]) -> String {
    front.iter().map(|p| join(p)).collect::<Vec<_>>().join("|")
}

fn parse_floats(field: &str, s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|v| v.parse().map_err(|_| Error::Parse(format!("{field}: bad number {v:?}"))))
        .collect()
}

fn parse_front(field: &str, s: &str) -> Result<Vec<Vec<f64>>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('|').map(|p| parse_floats(field, p)).collect()
}

fn parse_opt(field: &str, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse(format!("{field}: bad number {s:?}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRecord {
    fn to_row(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.dataset.clone(),
            self.seed.to_string(),
            self.c.to_string(),
            self.param_count.to_string(),
            join(&self.mcr),
            join(&self.ce),
            self.hv_mcr.to_string(),
            self.hv_ce.to_string(),
            opt(self.delta_st_mcr),
            opt(self.delta_st_ce),
            opt(self.delta_st_mcr_paired),
            self.config.clone(),
            join_front(&self.front_mcr),
            join_front(&self.front_ce),
            self.front_mcr.len().to_string(),
        ]
    }

    fn from_row(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != RECORD_COLUMNS.len() {
            return Err(Error::Parse(format!(
                "record has {} columns, expected {}",
                row.len(),
                RECORD_COLUMNS.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::Parse(format!("{}: bad number {:?}", RECORD_COLUMNS[i], &row[i])))
        };
        let rec = Self {
            method: row[0].parse()?,
            dataset: row[1].to_string(),
            seed: row[2].parse().map_err(|_| Error::Parse(format!("bad seed {:?}", &row[2])))?,
            c: num(3)?,
            param_count: row[4]
                .parse()
                .map_err(|_| Error::Parse(format!("bad param_count {:?}", &row[4])))?,
            mcr: parse_floats("mcr", &row[5])?,
            ce: parse_floats("ce", &row[6])?,
            hv_mcr: num(7)?,
            hv_ce: num(8)?,
            delta_st_mcr: parse_opt("delta_st_mcr", &row[9])?,
            delta_st_ce: parse_opt("delta_st_ce", &row[10])?,
            delta_st_mcr_paired: parse_opt("delta_st_mcr_paired", &row[11])?,
            config: row[12].to_string(),
            front_mcr: parse_front("front_mcr", &row[13])?,
            front_ce: parse_front("front_ce", &row[14])?,
        };
        if rec.front_mcr.len().to_string() != row[15] {
            return Err(Error::Parse("points column disagrees with front_mcr".into()));
        }
        Ok(rec)
    }
}

/// Sorts by (method, dataset, c, seed).
pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (a.method, &a.dataset)
            .cmp(&(b.method, &b.dataset))
            .then(a.c.total_cmp(&b.c))
            .then(a.seed.cmp(&b.seed))
    });
}

pub fn write_records_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(Error::Parse("unexpected record CSV header".into()));
    }
    r.records().map(|row| ResultRecord::from_row(&row?)).collect()
}

fn cell_key(r: &ResultRecord) -> (String, u64) {
    (r.dataset.clone(), r.c.to_bits())
}

/// Fills the ΔST columns of every record from the Single Task records with
/// the same dataset and `c`. Cells without Single Task records keep `None`.
pub fn apply_delta_st(records: &mut [ResultRecord]) {
    let mut st: BTreeMap<(String, u64), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.method == MethodKind::SingleTask) {
        st.entry(cell_key(r)).or_default().push(r);
    }
    let refs: BTreeMap<(String, u64), (f64, f64, BTreeMap<u64, f64>)> = st
        .into_iter()
        .map(|(k, rs)| {
            let n = rs.len() as f64;
            let mcr = rs.iter().map(|r| r.hv_mcr).sum::<f64>() / n;
            let ce = rs.iter().map(|r| r.hv_ce).sum::<f64>() / n;
            let by_seed = rs.iter().map(|r| (r.seed, r.hv_mcr)).collect();
            (k, (mcr, ce, by_seed))
        })
        .collect();
    for r in records.iter_mut() {
        if let Some((mcr, ce, by_seed)) = refs.get(&cell_key(r)) {
            r.delta_st_mcr = Some(delta_st(*mcr, r.hv_mcr));
            r.delta_st_ce = Some(delta_st(*ce, r.hv_ce));
            r.delta_st_mcr_paired = by_seed.get(&r.seed).map(|st| delta_st(*st, r.hv_mcr));
        }
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

/// Seed aggregate of one (method, dataset, c) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: MethodKind,
    pub dataset: String,
    pub c: f64,
    pub seeds: usize,
    pub param_count: usize,
    pub mcr: Vec<MeanStd>,
    pub ce: Vec<MeanStd>,
    pub hv_mcr: MeanStd,
    pub hv_ce: MeanStd,
    pub delta_st_mcr: Option<MeanStd>,
    pub delta_st_ce: Option<MeanStd>,
}

/// Groups records by (method, dataset, c) in sorted order.
pub fn aggregate(records: &[ResultRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(MethodKind, String, u64), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.dataset.clone(), r.c.to_bits())).or_default().push(r);
    }
    let mut out: Vec<Aggregate> = groups
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let col = |f: &dyn Fn(&ResultRecord) -> f64| MeanStd::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let opt_col = |f: &dyn Fn(&ResultRecord) -> Option<f64>| {
                let vals: Option<Vec<f64>> = rs.iter().map(|r| f(r)).collect();
                vals.and_then(|v| MeanStd::of(&v))
            };
            let tasks = first.mcr.len();
            Aggregate {
                method: first.method,
                dataset: first.dataset.clone(),
                c: first.c,
                seeds: rs.len(),
                param_count: first.param_count,
                mcr: (0..tasks).map(|j| col(&|r| r.mcr[j]).expect("non-empty")).collect(),
                ce: (0..tasks).map(|j| col(&|r| r.ce[j]).expect("non-empty")).collect(),
                hv_mcr: col(&|r| r.hv_mcr).expect("non-empty"),
                hv_ce: col(&|r| r.hv_ce).expect("non-empty"),
                delta_st_mcr: opt_col(&|r| r.delta_st_mcr),
                delta_st_ce: opt_col(&|r| r.delta_st_ce),
            }
        })
        .collect();
    out.sort_by(|a, b| (a.method, &a.dataset).cmp(&(b.method, &b.dataset)).then(a.c.total_cmp(&b.c)));
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(method: MethodKind, seed: u64, c: f64, hv: f64) -> ResultRecord {
        ResultRecord {
            method,
            dataset: "glyphs".into(),
            seed,
            c,
            param_count: 100,
            mcr: vec![0.1, 0.2],
            ce: vec![0.3, 0.4],
            hv_mcr: hv,
            hv_ce: hv / 2.0,
            delta_st_mcr: None,
            delta_st_ce: None,
            delta_st_mcr_paired: None,
            config: "method=uniform lr=0.001".into(),
            front_mcr: vec![vec![0.1, 0.2]],
            front_ce: vec![vec![0.3, 0.4]],
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut recs = vec![record(MethodKind::Uniform, 1, 0.25, 0.7123456789012345), record(MethodKind::SingleTask, 0, 1.0, 0.8)];
        recs[0].front_mcr = vec![vec![0.1, 0.2], vec![1.0 / 3.0, 0.05]];
        recs[0].front_ce = vec![vec![0.5, 0.6], vec![0.7, 0.8]];
        apply_delta_st(&mut recs);
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn delta_st_uses_mean_single_task() {
        let mut recs = vec![
            record(MethodKind::SingleTask, 0, 1.0, 0.8),
            record(MethodKind::SingleTask, 1, 1.0, 0.9),
            record(MethodKind::Uniform, 0, 1.0, 0.7),
            record(MethodKind::Uniform, 0, 2.0, 0.7),
        ];
        apply_delta_st(&mut recs);
        assert!((recs[2].delta_st_mcr.unwrap() - 0.15).abs() < 1e-12);
        assert!((recs[2].delta_st_mcr_paired.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(recs[3].delta_st_mcr, None);
    }

    #[test]
    fn aggregates() {
        let recs = vec![record(MethodKind::Uniform, 0, 1.0, 0.6), record(MethodKind::Uniform, 1, 1.0, 0.8)];
        let agg = aggregate(&recs);
        assert_eq!(agg.len(), 1);
        assert!((agg[0].hv_mcr.mean - 0.7).abs() < 1e-12);
        assert!((agg[0].hv_mcr.std - 0.1).abs() < 1e-12);
        let one = aggregate(&recs[..1]);
        assert_eq!(one[0].hv_mcr.std, 0.0);
    }
}

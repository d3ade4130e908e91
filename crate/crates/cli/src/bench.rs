//! Benchmark harness: runs queries against a built index, measures
//! candidates, distinct pages read, wall time, and the overall ratio
//! (mean returned-distance / true-distance), and writes CSV/JSON reports.

use std::fmt;
use std::path::Path;

use bregpart_core::data::Matrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{Index, ResultItem};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Exact,
    Approx(f64),
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Mode::Exact);
        }
        if let Some(p) = s.strip_prefix("approx:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad mode {s:?}")))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "approximation probability must be in (0, 1], got {p}"
                )));
            }
            return Ok(Mode::Approx(p));
        }
        Err(Error::InvalidArgument(format!(
            "unknown mode {s:?}; expected \"exact\" or \"approx:P\""
        )))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Approx(p) => write!(f, "approx:{p}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub query: usize,
    pub k: usize,
    pub mode: String,
    pub candidates: usize,
    pub pages_read: u64,
    pub elapsed_us: u64,
    /// None for queries excluded as degenerate (zero exact distance with a
    /// differing approximate distance).
    pub overall_ratio: Option<f64>,
    pub shortfall: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchAggregate {
    pub rows: usize,
    pub mean_candidates: f64,
    pub mean_pages_read: f64,
    pub mean_elapsed_us: f64,
    pub mean_overall_ratio: Option<f64>,
    pub p50_elapsed_us: u64,
    pub p95_elapsed_us: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub rows: Vec<BenchRow>,
    pub aggregate: BenchAggregate,
}

/// Mean of per-rank distance ratios against the exact answer. Both lists
/// must have equal length. A rank with exact distance 0 contributes 1 when
/// the approximate distance is also 0; otherwise the query is degenerate
/// and `None` is returned (the caller excludes it from aggregation).
pub fn overall_ratio(approx: &[ResultItem], exact: &[ResultItem]) -> Result<Option<f64>> {
    if approx.len() != exact.len() {
        return Err(Error::InvalidArgument(format!(
            "result lists differ in length: {} vs {}",
            approx.len(),
            exact.len()
        )));
    }
    if approx.is_empty() {
        return Err(Error::InvalidArgument("empty result lists".into()));
    }
    let mut sum = 0.0;
    for (a, e) in approx.iter().zip(exact.iter()) {
        if e.distance == 0.0 {
            if a.distance == 0.0 {
                sum += 1.0;
            } else {
                return Ok(None);
            }
        } else {
            sum += a.distance / e.distance;
        }
    }
    Ok(Some(sum / approx.len() as f64))
}

fn aggregate(rows: &[BenchRow]) -> BenchAggregate {
    let n = rows.len();
    if n == 0 {
        return BenchAggregate {
            rows: 0,
            mean_candidates: 0.0,
            mean_pages_read: 0.0,
            mean_elapsed_us: 0.0,
            mean_overall_ratio: None,
            p50_elapsed_us: 0,
            p95_elapsed_us: 0,
        };
    }
    let mut elapsed: Vec<u64> = rows.iter().map(|r| r.elapsed_us).collect();
    elapsed.sort_unstable();
    let pct = |q: f64| elapsed[((q * (n - 1) as f64).round() as usize).min(n - 1)];
    let ors: Vec<f64> = rows.iter().filter_map(|r| r.overall_ratio).collect();
    BenchAggregate {
        rows: n,
        mean_candidates: rows.iter().map(|r| r.candidates as f64).sum::<f64>() / n as f64,
        mean_pages_read: rows.iter().map(|r| r.pages_read as f64).sum::<f64>() / n as f64,
        mean_elapsed_us: rows.iter().map(|r| r.elapsed_us as f64).sum::<f64>() / n as f64,
        mean_overall_ratio: if ors.is_empty() {
            None
        } else {
            Some(ors.iter().sum::<f64>() / ors.len() as f64)
        },
        p50_elapsed_us: pct(0.5),
        p95_elapsed_us: pct(0.95),
    }
}

/// Runs queries × k × modes. Rows come back ordered by (query, k, mode
/// position) regardless of execution interleaving.
pub fn bench_run(index: &Index, queries: &Matrix, ks: &[usize], modes: &[Mode]) -> Result<BenchReport> {
    if queries.rows() > 0 && queries.cols() != index.d() {
        return Err(Error::InvalidArgument(format!(
            "query dimension {} does not match index dimension {}",
            queries.cols(),
            index.d()
        )));
    }
    for &k in ks {
        if k == 0 || k > index.n() {
            return Err(Error::InvalidArgument(format!(
                "k={k} out of range for an index of {} records",
                index.n()
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..queries.rows())
        .flat_map(|q| ks.iter().map(move |&k| (q, k)))
        .collect();
    let rows: Result<Vec<Vec<BenchRow>>> = jobs
        .par_iter()
        .map(|&(q, k)| {
            let y = queries.row(q);
            let mut out = Vec::with_capacity(modes.len());
            // The exact pipeline doubles as the reference for OR.
            let (exact, exact_report) = index.knn_search(y, k)?;
            for mode in modes {
                let row = match mode {
                    Mode::Exact => BenchRow {
                        query: q,
                        k,
                        mode: mode.to_string(),
                        candidates: exact_report.candidates,
                        pages_read: exact_report.pages_read,
                        elapsed_us: exact_report.elapsed_us,
                        overall_ratio: Some(1.0),
                        shortfall: false,
                    },
                    Mode::Approx(p) => {
                        let (res, report) = index.approx_knn_search(y, k, *p)?;
                        BenchRow {
                            query: q,
                            k,
                            mode: mode.to_string(),
                            candidates: report.candidates,
                            pages_read: report.pages_read,
                            elapsed_us: report.elapsed_us,
                            overall_ratio: overall_ratio(&res, &exact)?,
                            shortfall: report.shortfall,
                        }
                    }
                };
                out.push(row);
            }
            Ok(out)
        })
        .collect();
    let rows: Vec<BenchRow> = rows?.into_iter().flatten().collect();
    let aggregate = aggregate(&rows);
    Ok(BenchReport { schema_version: REPORT_SCHEMA_VERSION, rows, aggregate })
}

pub fn write_csv_report(path: &Path, report: &BenchReport) -> Result<()> {
    let mut out = String::from("query,k,mode,candidates,pages_read,elapsed_us,overall_ratio,shortfall\n");
    for r in &report.rows {
        let or = r.overall_ratio.map_or_else(|| "degenerate".to_string(), |v| format!("{v}"));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.query, r.k, r.mode, r.candidates, r.pages_read, r.elapsed_us, or, r.shortfall
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_json_report(path: &Path, report: &BenchReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InvalidArgument(format!("report serialization failed: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

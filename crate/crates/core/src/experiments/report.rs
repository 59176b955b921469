//! Per-repetition records, their aggregation into curve points, and the
//! active-versus-random comparison.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::stats::{mean, median, sem, welch_t};
use crate::error::{Error, Result};
use crate::learners::ModelKind;
use crate::selection::Strategy;

/// |t| at or above which a difference counts as real.
pub const T_THRESHOLD: f64 = 2.0;
/// Cells with fewer surviving repetitions get no verdict.
pub const MIN_REPS: usize = 20;

/// Grid cell: a fixed sample size, or an IWAL `c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    N(usize),
    C0(f64),
}

impl Cell {
    fn rank(&self) -> u8 {
        match self {
            Cell::N(_) => 0,
            Cell::C0(_) => 1,
        }
    }

    pub fn parse(strategy: Strategy, text: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad cell value {text:?} for {strategy}"));
        if strategy.is_iwal() {
            text.parse().map(Cell::C0).map_err(|_| bad())
        } else {
            text.parse().map(Cell::N).map_err(|_| bad())
        }
    }
}

impl Eq for Cell {}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cell::N(a), Cell::N(b)) => a.cmp(b),
            (Cell::C0(a), Cell::C0(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::N(n) => write!(f, "{n}"),
            Cell::C0(c) => write!(f, "{c}"),
        }
    }
}

/// Outcome of training one consumer on one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub strategy: Strategy,
    pub consumer: ModelKind,
    pub cell: Cell,
    pub rep: usize,
    pub selected: usize,
    /// Test error, or `None` when the repetition was dropped.
    pub error: Option<f64>,
    /// Short reason for a drop.
    pub dropped: Option<String>,
}

type Key = (Strategy, ModelKind, Cell);

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub strategy: Strategy,
    pub consumer: ModelKind,
    pub cell: Cell,
    /// Median selected-sample count over all repetitions.
    pub x_median: f64,
    pub mean_err: Option<f64>,
    pub sem: Option<f64>,
    pub reps_used: usize,
    pub reps_dropped: usize,
    /// Surviving errors in repetition order.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reusable,
    NotReusable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Reusable => "reusable",
            Verdict::NotReusable => "not-reusable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Active cell against the random cell of nearest size.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub consumer: ModelKind,
    pub cell: Cell,
    pub x_median: f64,
    pub random_n: usize,
    pub mean_err_al: Option<f64>,
    pub sem_al: Option<f64>,
    pub mean_err_rd: Option<f64>,
    pub sem_rd: Option<f64>,
    pub delta: Option<f64>,
    pub welch_t: Option<f64>,
    pub verdict: Verdict,
    pub note: &'static str,
}

/// Groups records by cell. Duplicate `(cell, rep)` pairs are an error.
pub fn aggregate(records: &[RepRecord]) -> Result<Vec<CurvePoint>> {
    let mut groups: BTreeMap<Key, BTreeMap<usize, &RepRecord>> = BTreeMap::new();
    for r in records {
        let reps = groups.entry((r.strategy, r.consumer, r.cell)).or_default();
        if reps.insert(r.rep, r).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate record for {} / {} / {} rep {}",
                r.strategy, r.consumer, r.cell, r.rep
            )));
        }
    }
    Ok(groups
        .into_iter()
        .map(|((strategy, consumer, cell), reps)| {
            let counts: Vec<f64> = reps.values().map(|r| r.selected as f64).collect();
            let errors: Vec<f64> = reps.values().filter_map(|r| r.error).collect();
            CurvePoint {
                strategy,
                consumer,
                cell,
                x_median: median(&counts).unwrap_or(0.0),
                mean_err: mean(&errors),
                sem: sem(&errors),
                reps_used: errors.len(),
                reps_dropped: reps.len() - errors.len(),
                errors,
            }
        })
        .collect())
}

fn compare(al: &CurvePoint, rd: &CurvePoint) -> (Option<f64>, Option<f64>, Verdict, &'static str) {
    let (Some(ma), Some(mr)) = (al.mean_err, rd.mean_err) else {
        return (None, None, Verdict::Inconclusive, "empty-cell");
    };
    let delta = ma - mr;
    let t = welch_t(ma, al.sem.unwrap_or(0.0), al.reps_used, mr, rd.sem.unwrap_or(0.0), rd.reps_used).ok();
    if al.reps_used < MIN_REPS || rd.reps_used < MIN_REPS {
        return (Some(delta), t, Verdict::Inconclusive, "few-reps");
    }
    match t {
        None => (Some(delta), None, Verdict::Inconclusive, "zero-variance"),
        Some(t) if t.abs() >= T_THRESHOLD => {
            (Some(delta), Some(t), if delta < 0.0 { Verdict::Reusable } else { Verdict::NotReusable }, "")
        }
        Some(t) => (Some(delta), Some(t), Verdict::Inconclusive, ""),
    }
}

/// Compares every non-random cell with the random cell (same consumer) whose
/// `n` is nearest its median selected count; ties go to the smaller `n`.
pub fn reusability_report(curve: &[CurvePoint]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for al in curve.iter().filter(|p| p.strategy != Strategy::Random) {
        let nearest = curve
            .iter()
            .filter(|p| p.strategy == Strategy::Random && p.consumer == al.consumer)
            .filter_map(|p| match p.cell {
                Cell::N(n) => Some((n, p)),
                Cell::C0(_) => None,
            })
            .min_by(|(a, _), (b, _)| {
                let (da, db) = ((*a as f64 - al.x_median).abs(), (*b as f64 - al.x_median).abs());
                da.total_cmp(&db).then(a.cmp(b))
            });
        let Some((random_n, rd)) = nearest else { continue };
        let (delta, t, verdict, note) = compare(al, rd);
        rows.push(ReportRow {
            strategy: al.strategy,
            consumer: al.consumer,
            cell: al.cell,
            x_median: al.x_median,
            random_n,
            mean_err_al: al.mean_err,
            sem_al: al.sem,
            mean_err_rd: rd.mean_err,
            sem_rd: rd.sem,
            delta,
            welch_t: t,
            verdict,
            note,
        });
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const CURVE_COLUMNS: [&str; 8] =
    ["strategy", "consumer", "cell", "x_median", "mean_err", "sem", "reps_used", "reps_dropped"];
pub const REPORT_COLUMNS: [&str; 13] = [
    "strategy", "consumer", "cell", "x_median", "random_n", "mean_err_al", "sem_al", "mean_err_rd", "sem_rd", "delta",
    "welch_t", "verdict", "note",
];
pub const REPS_COLUMNS: [&str; 7] = ["strategy", "consumer", "cell", "rep", "selected", "error", "dropped"];

pub fn curve_rows(curve: &[CurvePoint]) -> Vec<Vec<String>> {
    curve
        .iter()
        .map(|p| {
            vec![
                p.strategy.to_string(),
                p.consumer.to_string(),
                p.cell.to_string(),
                p.x_median.to_string(),
                opt(p.mean_err),
                opt(p.sem),
                p.reps_used.to_string(),
                p.reps_dropped.to_string(),
            ]
        })
        .collect()
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    write_rows(path, &CURVE_COLUMNS, curve_rows(curve))
}

pub fn write_report_csv(path: &Path, report: &[ReportRow]) -> Result<()> {
    write_rows(
        path,
        &REPORT_COLUMNS,
        report.iter().map(|r| {
            vec![
                r.strategy.to_string(),
                r.consumer.to_string(),
                r.cell.to_string(),
                r.x_median.to_string(),
                r.random_n.to_string(),
                opt(r.mean_err_al),
                opt(r.sem_al),
                opt(r.mean_err_rd),
                opt(r.sem_rd),
                opt(r.delta),
                opt(r.welch_t),
                r.verdict.as_str().to_string(),
                r.note.to_string(),
            ]
        }),
    )
}

pub fn write_reps_csv(path: &Path, records: &[RepRecord]) -> Result<()> {
    write_rows(
        path,
        &REPS_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.strategy.to_string(),
                r.consumer.to_string(),
                r.cell.to_string(),
                r.rep.to_string(),
                r.selected.to_string(),
                opt(r.error),
                r.dropped.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_reps_csv(path: &Path) -> Result<Vec<RepRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::MissingFile { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(file);
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let header = reader.headers()?.clone();
    if header.iter().ne(REPS_COLUMNS) {
        return Err(parse_err(1, format!("expected columns {}", REPS_COLUMNS.join(","))));
    }
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let wrap = |e: Error| parse_err(line, e.to_string());
        let strategy: Strategy = rec[0].parse().map_err(wrap)?;
        let consumer: ModelKind = rec[1].parse().map_err(wrap)?;
        let cell = Cell::parse(strategy, &rec[2]).map_err(wrap)?;
        let rep = rec[3].parse().map_err(|_| parse_err(line, format!("bad rep {:?}", &rec[3])))?;
        let selected = rec[4].parse().map_err(|_| parse_err(line, format!("bad count {:?}", &rec[4])))?;
        let error = match &rec[5] {
            "" => None,
            v => Some(v.parse().map_err(|_| parse_err(line, format!("bad error {v:?}")))?),
        };
        let dropped = (!rec[6].is_empty()).then(|| rec[6].to_string());
        if error.is_none() == dropped.is_none() {
            return Err(parse_err(line, "exactly one of error and dropped must be set".into()));
        }
        records.push(RepRecord { strategy, consumer, cell, rep, selected, error, dropped });
    }
    Ok(records)
}

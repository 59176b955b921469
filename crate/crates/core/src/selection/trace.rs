//! Trace files: a `# `-prefixed JSON header line followed by CSV rows
//! `index,g,probability,coin,selected,weight`.
//!
//! Floats are written in shortest round-trip form so that a reread trace
//! compares exactly against a recomputed one.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IwalConfig, SelectionResult, Strategy, TraceRow};
use crate::error::{Error, Result};
use crate::learners::LearningRate;

pub const TRACE_COLUMNS: [&str; 6] = ["index", "g", "probability", "coin", "selected", "weight"];
const FORMAT: u32 = 1;

fn format_version() -> u32 {
    FORMAT
}

/// Everything needed to rerun a selection pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    #[serde(default = "format_version")]
    pub format: u32,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iwal: Option<IwalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_rate: Option<LearningRate>,
    /// How to rebuild the training stream; filled in by the experiment runner.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub source: serde_json::Value,
}

impl TraceHeader {
    pub fn for_random(n: usize) -> Self {
        Self { format: FORMAT, strategy: Strategy::Random, n: Some(n), iwal: None, ranking_rate: None, source: Default::default() }
    }

    pub fn for_uncertainty(n: usize, rate: LearningRate) -> Self {
        Self { ranking_rate: Some(rate), strategy: Strategy::Uncertainty, ..Self::for_random(n) }
    }

    pub fn for_iwal(config: &IwalConfig, use_weights: bool) -> Self {
        Self {
            format: FORMAT,
            strategy: if use_weights { Strategy::Iwal } else { Strategy::IwalNoWeights },
            n: None,
            iwal: Some(config.clone()),
            ranking_rate: None,
            source: Default::default(),
        }
    }
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

pub fn write_trace(path: &Path, header: &TraceHeader, result: &SelectionResult) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "# {}", serde_json::to_string(header).map_err(|e| Error::Config(e.to_string()))?)?;
    writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
    for r in &result.trace {
        writeln!(out, "{},{},{},{},{},{}", r.index, r.g, r.probability, bit(r.coin), bit(r.selected), r.weight)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<TraceRow>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::MissingFile { path: path.to_path_buf(), source })?;
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines();
    let header_line = lines.next().ok_or_else(|| parse_err(1, "empty trace".into()))?;
    let json = header_line
        .strip_prefix("# ")
        .ok_or_else(|| parse_err(1, "missing '# ' header line".into()))?;
    let header: TraceHeader = serde_json::from_str(json).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format != FORMAT {
        return Err(parse_err(1, format!("unsupported trace format {}", header.format)));
    }

    let body = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let columns = reader.headers().map_err(|e| parse_err(2, e.to_string()))?.clone();
    if columns.iter().ne(TRACE_COLUMNS) {
        return Err(parse_err(2, format!("expected columns {}", TRACE_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 3;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != TRACE_COLUMNS.len() {
            return Err(parse_err(line, format!("expected {} fields", TRACE_COLUMNS.len())));
        }
        let float = |j: usize| {
            record[j].parse::<f64>().map_err(|_| parse_err(line, format!("bad {} value {:?}", TRACE_COLUMNS[j], &record[j])))
        };
        let flag = |j: usize| match &record[j] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(line, format!("bad {} value {other:?}", TRACE_COLUMNS[j]))),
        };
        rows.push(TraceRow {
            index: record[0].parse().map_err(|_| parse_err(line, format!("bad index {:?}", &record[0])))?,
            g: float(1)?,
            probability: float(2)?,
            coin: flag(3)?,
            selected: flag(4)?,
            weight: float(5)?,
        });
    }
    Ok((header, rows))
}

/// First disagreement between a stored trace and a recomputed one.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Row position (equal to the `index` column for well-formed traces).
    pub row: usize,
    pub field: &'static str,
    pub expected: String,
    pub actual: String,
}

pub fn compare_traces(stored: &[TraceRow], recomputed: &[TraceRow]) -> Option<Divergence> {
    for (row, (s, r)) in stored.iter().zip(recomputed).enumerate() {
        let fields: [(&'static str, String, String); 6] = [
            ("index", s.index.to_string(), r.index.to_string()),
            ("g", s.g.to_string(), r.g.to_string()),
            ("probability", s.probability.to_string(), r.probability.to_string()),
            ("coin", bit(s.coin).to_string(), bit(r.coin).to_string()),
            ("selected", bit(s.selected).to_string(), bit(r.selected).to_string()),
            ("weight", s.weight.to_string(), r.weight.to_string()),
        ];
        if let Some((field, expected, actual)) = fields.into_iter().find(|(_, a, b)| a != b) {
            return Some(Divergence { row, field, expected, actual });
        }
    }
    (stored.len() != recomputed.len()).then(|| Divergence {
        row: stored.len().min(recomputed.len()),
        field: "length",
        expected: stored.len().to_string(),
        actual: recomputed.len().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{select_iwal, select_random};
    use super::*;
    use crate::datasets::gen_uniform_line;

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let ds = gen_uniform_line(300, 1).unwrap();
        let cfg = IwalConfig::new(0.3, 12);
        let sel = select_iwal(&ds, &cfg, true).unwrap();
        let mut header = TraceHeader::for_iwal(&cfg, true);
        header.source = serde_json::json!({ "rep": 3 });
        write_trace(&path, &header, &sel).unwrap();
        let (h, rows) = read_trace(&path).unwrap();
        assert_eq!(h, header);
        assert_eq!(rows, sel.trace);
        assert_eq!(compare_traces(&rows, &sel.trace), None);
    }

    #[test]
    fn flipped_coin_is_located() {
        let ds = gen_uniform_line(100, 1).unwrap();
        let sel = select_iwal(&ds, &IwalConfig::new(0.3, 12), true).unwrap();
        let mut tampered = sel.trace.clone();
        tampered[41].coin = !tampered[41].coin;
        let d = compare_traces(&tampered, &sel.trace).unwrap();
        assert_eq!((d.row, d.field), (41, "coin"));
        let d = compare_traces(&sel.trace[..50], &sel.trace).unwrap();
        assert_eq!((d.row, d.field), (50, "length"));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let sel = select_random(&gen_uniform_line(10, 1).unwrap(), 4).unwrap();
        write_trace(&path, &TraceHeader::for_random(4), &sel).unwrap();
        let good = fs::read_to_string(&path).unwrap();

        fs::write(&path, good.replacen("# ", "", 1)).unwrap();
        assert!(matches!(read_trace(&path), Err(Error::Parse { line: 1, .. })));
        fs::write(&path, good.replace("\n3,0,1,1,1,1\n", "\n3,0,1,2,1,1\n")).unwrap();
        assert!(matches!(read_trace(&path), Err(Error::Parse { line: 6, .. })));
        fs::write(&path, good.replace("\"n\":4", "\"n\":4,\"extra\":1")).unwrap();
        assert!(read_trace(&path).is_err());
        assert!(matches!(read_trace(&dir.path().join("none.csv")), Err(Error::MissingFile { .. })));
    }
}

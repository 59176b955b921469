use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureKind, Instance, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    /// Column is read but not turned into features.
    Ignore,
}

/// Selects the label column by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

/// Column typing for [`load_csv`]. Columns are addressed by header name, or
/// by their zero-based position written as a decimal string when the file
/// has no header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_kind")]
    pub default_kind: ColumnKind,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnKind>,
    /// Allowed levels per categorical column. A value outside the declared
    /// list is an error; undeclared columns accept every value.
    #[serde(default)]
    pub levels: BTreeMap<String, Vec<String>>,
}

fn default_true() -> bool {
    true
}

fn default_kind() -> ColumnKind {
    ColumnKind::Categorical
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            has_header: true,
            default_kind: ColumnKind::Categorical,
            columns: BTreeMap::new(),
            levels: BTreeMap::new(),
        }
    }
}

enum Column {
    Numeric,
    Categorical { levels: Vec<String> },
    Ignore,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads a labelled CSV. Categorical columns are expanded one-hot (levels in
/// sorted order, or declared order when listed in the schema); numeric
/// columns pass through unchanged. Rows whose label is in `positive` become
/// `+1`, everything else `-1`. Row order is preserved.
pub fn load_csv(
    path: &Path,
    label_column: &LabelColumn,
    positive: &[String],
    schema: &CsvSchema,
) -> Result<Dataset> {
    let file = File::open(path)
        .map_err(|source| Error::MissingFile { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut records: Vec<(usize, csv::StringRecord)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push((i + 1, rec));
    }
    let header: Vec<String> = if schema.has_header {
        if records.is_empty() {
            return Err(parse_error(path, 1, "missing header"));
        }
        records.remove(0).1.iter().map(str::to_owned).collect()
    } else {
        let width = records.first().map(|(_, r)| r.len()).unwrap_or(0);
        (0..width).map(|j| j.to_string()).collect()
    };
    if records.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    let width = header.len();
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(parse_error(
                path,
                *line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
    }

    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::InvalidArgument(format!("label column {i} out of range ({width})")))
        }
        LabelColumn::Name(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidArgument(format!("label column {name:?} not in header"))
        })?,
    };
    for name in schema.columns.keys().chain(schema.levels.keys()) {
        if !header.contains(name) {
            return Err(Error::Config(format!("schema names unknown column {name:?}")));
        }
    }

    let mut columns = Vec::with_capacity(width);
    for (j, name) in header.iter().enumerate() {
        if j == label_idx {
            columns.push(Column::Ignore);
            continue;
        }
        let kind = schema.columns.get(name).copied().unwrap_or(schema.default_kind);
        let column = match kind {
            ColumnKind::Ignore => Column::Ignore,
            ColumnKind::Numeric => Column::Numeric,
            ColumnKind::Categorical => {
                let levels = if let Some(declared) = schema.levels.get(name) {
                    for (line, rec) in &records {
                        if !declared.iter().any(|l| l == &rec[j]) {
                            return Err(Error::UnknownCategory {
                                path: path.to_path_buf(),
                                line: *line,
                                column: name.clone(),
                                value: rec[j].to_owned(),
                            });
                        }
                    }
                    declared.clone()
                } else {
                    let set: BTreeSet<&str> = records.iter().map(|(_, r)| &r[j]).collect();
                    set.into_iter().map(str::to_owned).collect()
                };
                Column::Categorical { levels }
            }
        };
        columns.push(column);
    }

    let mut kinds = Vec::new();
    let mut names = Vec::new();
    let mut block = 0;
    for (j, column) in columns.iter().enumerate() {
        match column {
            Column::Ignore => {}
            Column::Numeric => {
                kinds.push(FeatureKind::Numeric);
                names.push(header[j].clone());
            }
            Column::Categorical { levels } => {
                for level in levels {
                    kinds.push(FeatureKind::OneHot { block });
                    names.push(format!("{}={}", header[j], level));
                }
                block += 1;
            }
        }
    }

    let mut label_values = BTreeSet::new();
    let mut instances = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let mut features = Vec::with_capacity(kinds.len());
        for (j, column) in columns.iter().enumerate() {
            match column {
                Column::Ignore => {}
                Column::Numeric => {
                    let v: f64 = rec[j].parse().map_err(|_| {
                        parse_error(path, *line, format!("column {:?}: not a number: {:?}", header[j], &rec[j]))
                    })?;
                    if !v.is_finite() {
                        return Err(parse_error(path, *line, format!("column {:?}: non-finite value", header[j])));
                    }
                    features.push(v);
                }
                Column::Categorical { levels } => {
                    features.extend(levels.iter().map(|l| if l == &rec[j] { 1.0 } else { 0.0 }));
                }
            }
        }
        let raw_label = &rec[label_idx];
        label_values.insert(raw_label.to_owned());
        let label = if positive.iter().any(|p| p == raw_label) { Label::Positive } else { Label::Negative };
        instances.push(Instance::new(features, label));
    }

    if label_values.len() < 2 {
        return Err(Error::SingleClass {
            path: path.to_path_buf(),
            value: label_values.into_iter().next().unwrap_or_default(),
        });
    }
    if !instances.iter().any(|i| i.label == Label::Positive)
        || !instances.iter().any(|i| i.label == Label::Negative)
    {
        return Err(Error::SingleClass {
            path: path.to_path_buf(),
            value: format!("all rows map to one class with positive = {positive:?}"),
        });
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::with_kinds(name, instances, kinds, Some(names))
}

/// Writes `f0..f{d-1},label` with labels as `-1`/`1`.
pub fn write_csv(dataset: &Dataset, path: impl Into<PathBuf>) -> Result<()> {
    let path = path.into();
    let mut out = std::io::BufWriter::new(File::create(&path)?);
    let header: Vec<String> = (0..dataset.dim()).map(|j| format!("f{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for inst in dataset.instances() {
        for v in &inst.features {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", inst.label.as_i8())?;
    }
    out.flush()?;
    Ok(())
}

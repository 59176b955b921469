//! Labelled pools: synthetic generators, CSV ingestion and train/test splits.

mod csv_io;
mod generators;
mod split;

pub use csv_io::{load_csv, write_csv, ColumnKind, CsvSchema, LabelColumn};
pub use generators::{gen_circle, gen_four_cluster_line, gen_uniform_line, CIRCLE_INNER_RADIUS, CIRCLE_OUTER_RADIUS};
pub use split::{split, SplitPair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label. Scores at or above zero map to `Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            _ => Err(Error::InvalidArgument(format!("label must be -1 or +1, got {v}"))),
        }
    }

    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Instance {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Self { features, label }
    }
}

/// Column provenance; one-hot columns carry the index of their source block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    OneHot { block: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    instances: Vec<Instance>,
    dim: usize,
    feature_kinds: Vec<FeatureKind>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset whose columns are all numeric.
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Result<Self> {
        let dim = instances.first().map(|i| i.features.len()).unwrap_or(0);
        Self::with_kinds(name, instances, vec![FeatureKind::Numeric; dim], None)
    }

    pub fn with_kinds(
        name: impl Into<String>,
        instances: Vec<Instance>,
        feature_kinds: Vec<FeatureKind>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::InvalidArgument("dataset must not be empty".into()));
        }
        let dim = feature_kinds.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("dataset must have at least one feature".into()));
        }
        if let Some(bad) = instances.iter().find(|i| i.features.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.features.len() });
        }
        let feature_names = match feature_names {
            Some(names) if names.len() == dim => names,
            Some(names) => {
                return Err(Error::DimensionMismatch { expected: dim, actual: names.len() })
            }
            None => (0..dim).map(|j| format!("f{j}")).collect(),
        };
        Ok(Self { name: name.into(), instances, dim, feature_kinds, feature_names })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn positive_fraction(&self) -> f64 {
        let pos = self.instances.iter().filter(|i| i.label == Label::Positive).count();
        pos as f64 / self.len() as f64
    }

    pub fn has_one_hot(&self) -> bool {
        self.feature_kinds.iter().any(|k| matches!(k, FeatureKind::OneHot { .. }))
    }

    /// Same metadata, different rows.
    pub(crate) fn with_instances(&self, instances: Vec<Instance>) -> Result<Self> {
        Self::with_kinds(
            self.name.clone(),
            instances,
            self.feature_kinds.clone(),
            Some(self.feature_names.clone()),
        )
    }

    /// Per-column `(min, max)` over the numeric columns; one-hot columns get `None`.
    pub fn numeric_ranges(&self) -> Vec<Option<(f64, f64)>> {
        self.feature_kinds
            .iter()
            .enumerate()
            .map(|(j, kind)| match kind {
                FeatureKind::OneHot { .. } => None,
                FeatureKind::Numeric => {
                    let (lo, hi) = self.instances.iter().fold(
                        (f64::INFINITY, f64::NEG_INFINITY),
                        |(lo, hi), inst| (lo.min(inst.features[j]), hi.max(inst.features[j])),
                    );
                    Some((lo, hi))
                }
            })
            .collect()
    }

    /// Min-max scales numeric columns with externally supplied ranges.
    /// Constant columns map to zero; values outside the range are not clipped.
    pub fn scaled(&self, ranges: &[Option<(f64, f64)>]) -> Result<Self> {
        if ranges.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: ranges.len() });
        }
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                let features = inst
                    .features
                    .iter()
                    .zip(ranges)
                    .map(|(&v, range)| match range {
                        Some((lo, hi)) if hi > lo => (v - lo) / (hi - lo),
                        Some(_) => 0.0,
                        None => v,
                    })
                    .collect();
                Instance::new(features, inst.label)
            })
            .collect();
        self.with_instances(instances)
    }

    /// Drops the first column of every one-hot block (treatment coding), which
    /// removes the exact collinearity between a full block and an intercept.
    pub fn reference_coded(&self) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let keep: Vec<usize> = self
            .feature_kinds
            .iter()
            .enumerate()
            .filter(|(_, kind)| match kind {
                FeatureKind::Numeric => true,
                FeatureKind::OneHot { block } => !seen.insert(*block),
            })
            .map(|(j, _)| j)
            .collect();
        if keep.is_empty() {
            return Err(Error::InvalidArgument(
                "reference coding leaves no columns (all blocks have one level)".into(),
            ));
        }
        let instances = self
            .instances
            .iter()
            .map(|inst| Instance::new(keep.iter().map(|&j| inst.features[j]).collect(), inst.label))
            .collect();
        Dataset::with_kinds(
            self.name.clone(),
            instances,
            keep.iter().map(|&j| self.feature_kinds[j]).collect(),
            Some(keep.iter().map(|&j| self.feature_names[j].clone()).collect()),
        )
    }

    /// Keeps the listed rows, in the listed order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let instances = indices
            .iter()
            .map(|&i| {
                self.instances.get(i).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!("row {i} out of range ({})", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_instances(instances)
    }
}

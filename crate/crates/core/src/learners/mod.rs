//! Importance-weighted learners and error measures.
//!
//! Every batch learner treats a sample of weight `k` exactly like `k`
//! unit-weight copies of it, and is invariant to a global rescaling of the
//! weights.

mod discriminant;
mod least_squares;
mod online;
mod serialize;
mod svm;

pub use discriminant::{fit_lda, fit_qda, Discriminant, GaussianClass};
pub use least_squares::fit_least_squares;
pub use online::{LearningRate, OnlineLinear};
pub use svm::{fit_svm, fit_svm_detailed, Kernel, KernelKind, SvmModel, SvmOptions, SvmSolution};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, Instance, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedInstance {
    pub instance: Instance,
    pub weight: f64,
}

impl WeightedInstance {
    pub fn new(instance: Instance, weight: f64) -> Self {
        Self { instance, weight }
    }

    pub fn unit(instance: Instance) -> Self {
        Self { instance, weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    OnlineLinear,
    LeastSquares,
    Lda,
    Qda,
    SvmLinear,
    SvmPoly3,
    SvmRbf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::OnlineLinear,
        ModelKind::LeastSquares,
        ModelKind::Lda,
        ModelKind::Qda,
        ModelKind::SvmLinear,
        ModelKind::SvmPoly3,
        ModelKind::SvmRbf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::OnlineLinear => "online-linear",
            ModelKind::LeastSquares => "least-squares",
            ModelKind::Lda => "lda",
            ModelKind::Qda => "qda",
            ModelKind::SvmLinear => "svm-linear",
            ModelKind::SvmPoly3 => "svm-poly3",
            ModelKind::SvmRbf => "svm-rbf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

/// Affine scorer `<weights, x> + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearParams {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Params {
    Linear(LinearParams),
    Gaussian(Discriminant),
    Svm(SvmModel),
}

/// A trained hypothesis. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: ModelKind,
    params: Params,
}

impl Model {
    pub(crate) fn new(kind: ModelKind, params: Params) -> Self {
        Self { kind, params }
    }

    /// A fixed affine model, mostly useful for tests and probes.
    pub fn linear(kind: ModelKind, weights: Vec<f64>, bias: f64) -> Self {
        Self::new(kind, Params::Linear(LinearParams { weights, bias }))
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.params {
            Params::Linear(p) => p.weights.len(),
            Params::Gaussian(d) => d.dim(),
            Params::Svm(s) => s.dim(),
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        match &self.params {
            Params::Linear(p) => p.score(x),
            Params::Gaussian(d) => d.score(x),
            Params::Svm(s) => s.decision(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        Label::from_score(self.score(x))
    }

    pub fn linear_params(&self) -> Option<&LinearParams> {
        match &self.params {
            Params::Linear(p) => Some(p),
            _ => None,
        }
    }

    pub fn discriminant(&self) -> Option<&Discriminant> {
        match &self.params {
            Params::Gaussian(d) => Some(d),
            _ => None,
        }
    }

    pub fn svm(&self) -> Option<&SvmModel> {
        match &self.params {
            Params::Svm(s) => Some(s),
            _ => None,
        }
    }
}

/// Fraction of `dataset` the model misclassifies.
pub fn zero_one_error(model: &Model, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("zero_one_error on an empty dataset".into()));
    }
    check_dim(model.dim(), dataset.dim())?;
    let wrong = dataset
        .instances()
        .iter()
        .filter(|inst| model.predict(&inst.features) != inst.label)
        .count();
    Ok(wrong as f64 / dataset.len() as f64)
}

/// Normalised weight of the misclassified samples.
pub fn weighted_error(model: &Model, samples: &[WeightedInstance]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("weighted_error on an empty sample".into()));
    }
    validate_samples(samples)?;
    check_dim(model.dim(), samples[0].instance.features.len())?;
    let (wrong, total) = samples.iter().fold((0.0, 0.0), |(wrong, total), s| {
        let miss = model.predict(&s.instance.features) != s.instance.label;
        (if miss { wrong + s.weight } else { wrong }, total + s.weight)
    });
    if total <= 0.0 {
        return Err(Error::InvalidArgument("total weight must be positive".into()));
    }
    Ok(wrong / total)
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Common checks for batch fitting: non-empty, consistent width, finite
/// non-negative weights.
pub(crate) fn validate_samples(samples: &[WeightedInstance]) -> Result<usize> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no training samples".into()))?;
    let dim = first.instance.features.len();
    for s in samples {
        check_dim(dim, s.instance.features.len())?;
        if !(s.weight.is_finite() && s.weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid sample weight {}", s.weight)));
        }
    }
    Ok(dim)
}

/// Errors with `MissingClass` unless both labels carry positive weight.
pub(crate) fn require_both_classes(samples: &[WeightedInstance]) -> Result<()> {
    for label in [Label::Negative, Label::Positive] {
        if !samples.iter().any(|s| s.instance.label == label && s.weight > 0.0) {
            return Err(Error::MissingClass { missing: label.as_i8() });
        }
    }
    Ok(())
}

/// Hyperparameters for the consumer learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsumerParams {
    pub ridge: f64,
    pub svm_cost: f64,
    /// RBF/poly scale; `None` means `1 / dim`.
    pub svm_gamma: Option<f64>,
    pub svm_tolerance: f64,
    pub svm_max_passes: usize,
    pub online_rate: LearningRate,
    pub online_passes: usize,
}

impl Default for ConsumerParams {
    fn default() -> Self {
        Self {
            ridge: 0.0,
            svm_cost: 1.0,
            svm_gamma: None,
            svm_tolerance: 1e-3,
            svm_max_passes: 10_000,
            online_rate: LearningRate::default(),
            online_passes: 1,
        }
    }
}

/// Trains a consumer of the given kind on an importance-weighted sample.
pub fn fit_consumer(kind: ModelKind, samples: &[WeightedInstance], params: &ConsumerParams) -> Result<Model> {
    let dim = validate_samples(samples)?;
    let gamma = params.svm_gamma.unwrap_or(1.0 / dim as f64);
    let svm = |kernel_kind| {
        let opts = SvmOptions {
            tolerance: params.svm_tolerance,
            max_passes: params.svm_max_passes,
            ..SvmOptions::default()
        };
        fit_svm(samples, Kernel::new(kernel_kind, gamma)?, params.svm_cost, &opts)
    };
    match kind {
        ModelKind::OnlineLinear => {
            require_both_classes(samples)?;
            let mut learner = OnlineLinear::new(dim, params.online_rate);
            for _ in 0..params.online_passes.max(1) {
                for s in samples {
                    learner.update(&s.instance.features, s.instance.label, s.weight)?;
                }
            }
            Ok(learner.to_model())
        }
        ModelKind::LeastSquares => fit_least_squares(samples, params.ridge),
        ModelKind::Lda => fit_lda(samples),
        ModelKind::Qda => fit_qda(samples),
        ModelKind::SvmLinear => svm(KernelKind::Linear),
        ModelKind::SvmPoly3 => svm(KernelKind::Poly3),
        ModelKind::SvmRbf => svm(KernelKind::Rbf),
    }
}

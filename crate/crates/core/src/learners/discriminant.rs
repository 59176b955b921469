//! Weighted Gaussian discriminant analysis (linear and quadratic).
//!
//! Moments are maximum-likelihood weighted estimates (normalised by the
//! class weight, not by `weight - 1`), so replicating a sample is the same
//! as scaling its weight.

use nalgebra::{DMatrix, DVector};

use super::{require_both_classes, validate_samples, Model, ModelKind, Params, WeightedInstance};
use crate::datasets::Label;
use crate::error::{Error, Result};

const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClass {
    pub label: Label,
    pub prior: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
}

impl GaussianClass {
    fn new(label: Label, prior: f64, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let (precision, log_det) = invert_spd(&covariance)?;
        Ok(Self { label, prior, mean, covariance, precision, log_det })
    }

    /// Log joint density up to the shared `-d/2 log(2 pi)` term.
    fn log_joint(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let quad = diff.dot(&(&self.precision * &diff));
        self.prior.ln() - 0.5 * self.log_det - 0.5 * quad
    }
}

fn invert_spd(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let d = cov.nrows();
    let scale = (0..d).map(|j| cov[(j, j)]).fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(Error::SingularData("covariance is zero".into()));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularData("covariance is not positive definite".into()))?;
    let l = chol.l_dirty();
    if (0..d).any(|j| l[(j, j)] * l[(j, j)] <= PIVOT_TOLERANCE * scale) {
        return Err(Error::SingularData("covariance is rank deficient".into()));
    }
    let log_det = 2.0 * (0..d).map(|j| l[(j, j)].ln()).sum::<f64>();
    Ok((chol.inverse(), log_det))
}

/// Fitted class-conditional Gaussians. `classes[0]` is the negative class.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminant {
    pub shared_covariance: bool,
    pub classes: [GaussianClass; 2],
}

impl Discriminant {
    pub fn dim(&self) -> usize {
        self.classes[0].mean.len()
    }

    /// Log-posterior difference, positive minus negative.
    pub fn score(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        self.classes[1].log_joint(&x) - self.classes[0].log_joint(&x)
    }

    pub(crate) fn from_parts(
        shared_covariance: bool,
        parts: [(Label, f64, DVector<f64>, DMatrix<f64>); 2],
    ) -> Result<Self> {
        let [neg, pos] = parts;
        Ok(Self {
            shared_covariance,
            classes: [
                GaussianClass::new(neg.0, neg.1, neg.2, neg.3)?,
                GaussianClass::new(pos.0, pos.1, pos.2, pos.3)?,
            ],
        })
    }
}

/// Weighted class moments: `(total weight, mean, ML scatter / total weight)`.
pub(crate) struct ClassMoments {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

pub(crate) fn class_moments(samples: &[WeightedInstance], label: Label, dim: usize) -> ClassMoments {
    let members = samples.iter().filter(|s| s.instance.label == label);
    let mut weight = 0.0;
    let mut mean = DVector::<f64>::zeros(dim);
    for s in members.clone() {
        weight += s.weight;
        mean.axpy(s.weight, &DVector::from_column_slice(&s.instance.features), 1.0);
    }
    mean /= weight;
    let mut covariance = DMatrix::<f64>::zeros(dim, dim);
    for s in members {
        let diff = DVector::from_column_slice(&s.instance.features) - &mean;
        covariance.ger(s.weight, &diff, &diff, 1.0);
    }
    covariance /= weight;
    ClassMoments { weight, mean, covariance }
}

fn fit(samples: &[WeightedInstance], shared: bool) -> Result<Model> {
    let dim = validate_samples(samples)?;
    require_both_classes(samples)?;
    let neg = class_moments(samples, Label::Negative, dim);
    let pos = class_moments(samples, Label::Positive, dim);
    let total = neg.weight + pos.weight;
    let (cov_neg, cov_pos) = if shared {
        let pooled = (&neg.covariance * neg.weight + &pos.covariance * pos.weight) / total;
        (pooled.clone(), pooled)
    } else {
        (neg.covariance, pos.covariance)
    };
    let disc = Discriminant::from_parts(
        shared,
        [
            (Label::Negative, neg.weight / total, neg.mean, cov_neg),
            (Label::Positive, pos.weight / total, pos.mean, cov_pos),
        ],
    )?;
    let kind = if shared { ModelKind::Lda } else { ModelKind::Qda };
    Ok(Model::new(kind, Params::Gaussian(disc)))
}

/// Linear discriminant analysis with a pooled weighted covariance.
pub fn fit_lda(samples: &[WeightedInstance]) -> Result<Model> {
    fit(samples, true)
}

/// Quadratic discriminant analysis with per-class weighted covariances.
pub fn fit_qda(samples: &[WeightedInstance]) -> Result<Model> {
    fit(samples, false)
}

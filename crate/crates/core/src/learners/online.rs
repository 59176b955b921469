//! Online linear classifier trained by importance-aware SGD on the squared
//! hinge loss `max(0, 1 - y (<w, x> + b))^2`.
//!
//! Steps are normalised by `|x|^2 + 1` (the bias feature included), so a unit
//! step at rate `eta` closes a fraction `2 eta` of the margin deficit. An
//! importance of `h` is applied as the closed form of `h` such steps at a
//! frozen rate: the deficit shrinks by `(1 - 2 eta)^h`.

use serde::{Deserialize, Serialize};

use super::{check_dim, LinearParams, Model, ModelKind, Params};
use crate::datasets::Label;
use crate::error::{Error, Result};

/// `eta_t = initial / t^power`, where `t` counts update calls (from 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningRate {
    pub initial: f64,
    pub power: f64,
}

impl Default for LearningRate {
    fn default() -> Self {
        Self { initial: 0.5, power: 0.5 }
    }
}

impl LearningRate {
    pub fn at(&self, t: u64) -> f64 {
        self.initial / (t.max(1) as f64).powf(self.power)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineLinear {
    weights: Vec<f64>,
    bias: f64,
    updates: u64,
    rate: LearningRate,
}

impl OnlineLinear {
    pub fn new(dim: usize, rate: LearningRate) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0, updates: 0, rate }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// One importance-weighted step at the scheduled rate; advances the
    /// schedule even when the step is a no-op.
    pub fn update(&mut self, x: &[f64], label: Label, importance: f64) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        self.updates += 1;
        let eta = self.rate.at(self.updates);
        self.update_with_rate(x, label, importance, eta)
    }

    /// Importance-weighted step at an explicit rate, leaving the schedule alone.
    pub fn update_with_rate(&mut self, x: &[f64], label: Label, importance: f64, eta: f64) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if !(importance.is_finite() && importance >= 0.0) {
            return Err(Error::InvalidArgument(format!("importance must be >= 0, got {importance}")));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {eta}")));
        }
        let y = label.sign();
        let margin = y * self.score(x);
        if importance == 0.0 || margin >= 1.0 {
            return Ok(());
        }
        let deficit = 1.0 - margin;
        let contraction = 1.0 - 2.0 * eta;
        let new_margin = if contraction >= 0.0 {
            1.0 - deficit * contraction.powf(importance)
        } else {
            // The first unit step already overshoots into the flat region.
            margin + 2.0 * eta * deficit * importance.min(1.0)
        };
        let norm2 = x.iter().map(|v| v * v).sum::<f64>() + 1.0;
        let step = (new_margin - margin) / norm2 * y;
        for (w, v) in self.weights.iter_mut().zip(x) {
            *w += step * v;
        }
        self.bias += step;
        Ok(())
    }

    pub fn to_model(&self) -> Model {
        Model::new(
            ModelKind::OnlineLinear,
            Params::Linear(LinearParams { weights: self.weights.clone(), bias: self.bias }),
        )
    }
}

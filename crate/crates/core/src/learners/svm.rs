//! Soft-margin kernel SVM with per-sample box constraints.
//!
//! Solves the dual
//!
//! ```text
//! min_a  1/2 a' Q a - 1' a   s.t.  y' a = 0,  0 <= a_i <= cost * w_i
//! ```
//!
//! with `Q_ij = y_i y_j K(x_i, x_j)`, by sequential minimal optimisation
//! using second-order working-set selection. The importance weight of a
//! sample scales its box, which makes a weight-`k` sample equivalent to `k`
//! copies.

use std::collections::HashMap;
use std::sync::Arc;

use super::{require_both_classes, validate_samples, Model, ModelKind, Params, WeightedInstance};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    /// `(gamma <a, b> + 1)^3`
    Poly3,
    /// `exp(-gamma |a - b|^2)`
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub gamma: f64,
}

impl Kernel {
    pub fn new(kind: KernelKind, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("kernel gamma must be > 0, got {gamma}")));
        }
        Ok(Self { kind, gamma })
    }

    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, gamma: 1.0 }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(a, b),
            KernelKind::Poly3 => (self.gamma * dot(a, b) + 1.0).powi(3),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }

    pub(crate) fn model_kind(&self) -> ModelKind {
        match self.kind {
            KernelKind::Linear => ModelKind::SvmLinear,
            KernelKind::Poly3 => ModelKind::SvmPoly3,
            KernelKind::Rbf => ModelKind::SvmRbf,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Decision function `sum_i coef_i K(sv_i, x) - rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
    dim: usize,
    primal: Option<Vec<f64>>,
}

impl SvmModel {
    pub(crate) fn new(kernel: Kernel, dim: usize, support: Vec<Vec<f64>>, coef: Vec<f64>, rho: f64) -> Self {
        let primal = (kernel.kind == KernelKind::Linear).then(|| {
            let mut w = vec![0.0; dim];
            for (sv, c) in support.iter().zip(&coef) {
                for (wj, xj) in w.iter_mut().zip(sv) {
                    *wj += c * xj;
                }
            }
            w
        });
        Self { kernel, support, coef, rho, dim, primal }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        match &self.primal {
            Some(w) => dot(w, x) - self.rho,
            None => {
                self.support
                    .iter()
                    .zip(&self.coef)
                    .map(|(sv, c)| c * self.kernel.eval(sv, x))
                    .sum::<f64>()
                    - self.rho
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    /// Maximal KKT violation `m(a) - M(a)` at termination.
    pub tolerance: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_passes: usize,
    /// Kernel row cache budget in MiB.
    pub cache_mib: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self { tolerance: 1e-3, max_passes: 10_000, cache_mib: 256 }
    }
}

/// Full solver output, for callers that need the dual variables.
#[derive(Debug, Clone)]
pub struct SvmSolution {
    pub model: Model,
    pub alpha: Vec<f64>,
    pub upper: Vec<f64>,
    /// Dual objective `sum a - 1/2 a' Q a` (maximisation form).
    pub dual_objective: f64,
    pub iterations: usize,
}

struct RowCache<'a> {
    xs: Vec<&'a [f64]>,
    kernel: Kernel,
    rows: HashMap<usize, (Arc<Vec<f64>>, u64)>,
    capacity: usize,
    clock: u64,
}

impl<'a> RowCache<'a> {
    fn new(xs: Vec<&'a [f64]>, kernel: Kernel, cache_mib: usize) -> Self {
        let n = xs.len().max(1);
        let capacity = ((cache_mib << 20) / (8 * n)).max(2);
        Self { xs, kernel, rows: HashMap::new(), capacity, clock: 0 }
    }

    fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.1 = self.clock;
            return Arc::clone(&entry.0);
        }
        if self.rows.len() >= self.capacity {
            if let Some(&oldest) = self.rows.iter().min_by_key(|(_, (_, t))| *t).map(|(k, _)| k) {
                self.rows.remove(&oldest);
            }
        }
        let xi = self.xs[i];
        let row = Arc::new(self.xs.iter().map(|xj| self.kernel.eval(xi, xj)).collect::<Vec<_>>());
        self.rows.insert(i, (Arc::clone(&row), self.clock));
        row
    }
}

pub fn fit_svm(samples: &[WeightedInstance], kernel: Kernel, cost: f64, opts: &SvmOptions) -> Result<Model> {
    fit_svm_detailed(samples, kernel, cost, opts).map(|s| s.model)
}

pub fn fit_svm_detailed(
    samples: &[WeightedInstance],
    kernel: Kernel,
    cost: f64,
    opts: &SvmOptions,
) -> Result<SvmSolution> {
    let dim = validate_samples(samples)?;
    if !(cost.is_finite() && cost > 0.0) {
        return Err(Error::InvalidArgument(format!("svm cost must be > 0, got {cost}")));
    }
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 {
        return Err(Error::InvalidArgument("svm tolerance must be > 0".into()));
    }
    require_both_classes(samples)?;

    let n = samples.len();
    let y: Vec<f64> = samples.iter().map(|s| s.instance.label.sign()).collect();
    let upper: Vec<f64> = samples.iter().map(|s| cost * s.weight).collect();
    let xs: Vec<&[f64]> = samples.iter().map(|s| s.instance.features.as_slice()).collect();
    let diag: Vec<f64> = xs.iter().map(|x| kernel.eval(x, x)).collect();
    let mut cache = RowCache::new(xs.clone(), kernel, opts.cache_mib);

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = opts.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;
    let in_up = |t: usize, a: &[f64]| if y[t] > 0.0 { a[t] < upper[t] } else { a[t] > 0.0 };
    let in_low = |t: usize, a: &[f64]| if y[t] > 0.0 { a[t] > 0.0 } else { a[t] < upper[t] };

    loop {
        // Working set: i maximises -y G over I_up, j minimises the
        // second-order decrease over I_low.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(t, &alpha) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        if i != usize::MAX {
            let ki = cache.row(i);
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !in_low(t, &alpha) {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = diag[i] + diag[t] - 2.0 * ki[t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < opts.tolerance {
            break;
        }
        if iterations >= max_iter {
            let rho = compute_rho(&alpha, &grad, &y, &upper);
            return Err(Error::Convergence {
                iterations,
                gap: duality_gap(&alpha, &grad, &y, &upper, rho),
            });
        }
        iterations += 1;

        let ki = cache.row(i);
        let kj = cache.row(j);
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let rho = compute_rho(&alpha, &grad, &y, &upper);
    let dual_objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>();
    let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(t, &a)| (xs[t].to_vec(), a * y[t]))
        .unzip();
    let svm = SvmModel::new(kernel, dim, support, coef, rho);
    Ok(SvmSolution {
        model: Model::new(kernel.model_kind(), Params::Svm(svm)),
        alpha,
        upper,
        dual_objective,
        iterations,
    })
}

/// Offset from the free variables, or the midpoint of the feasible interval
/// when every variable sits at a bound.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

fn duality_gap(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64], rho: f64) -> f64 {
    let quad: f64 = alpha.iter().zip(grad).map(|(a, g)| a * (g + 1.0)).sum();
    let dual = alpha.iter().sum::<f64>() - 0.5 * quad;
    let hinge: f64 = (0..alpha.len())
        .map(|t| {
            let f = y[t] * (grad[t] + 1.0) - rho;
            upper[t] * (1.0 - y[t] * f).max(0.0)
        })
        .sum();
    0.5 * quad + hinge - dual
}

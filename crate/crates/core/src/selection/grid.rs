//! Error difference `G_k` over a finite grid of linear hypotheses.

use std::f64::consts::PI;

use crate::datasets::{Dataset, Instance, Label};
use crate::error::{Error, Result};
use crate::learners::WeightedInstance;

/// Finite set of affine threshold hypotheses `x -> sign(<u, x> - t)` in one
/// or two dimensions, with `u` a unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisGrid {
    dim: usize,
    directions: Vec<[f64; 2]>,
    offsets: Vec<f64>,
}

impl HypothesisGrid {
    /// `angles` evenly spaced directions (forced to `{+1, -1}` in 1-D) times
    /// the given offsets.
    pub fn new(dim: usize, angles: usize, offsets: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || offsets.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("grid offsets must be finite and non-empty".into()));
        }
        let directions = match dim {
            1 => vec![[1.0, 0.0], [-1.0, 0.0]],
            2 if angles >= 2 => (0..angles)
                .map(|a| {
                    let theta = 2.0 * PI * a as f64 / angles as f64;
                    [theta.cos(), theta.sin()]
                })
                .collect(),
            2 => return Err(Error::InvalidArgument("a 2-D grid needs at least 2 angles".into())),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "exact error difference supports 1-D and 2-D data, got {dim}-D"
                )))
            }
        };
        Ok(Self { dim, directions, offsets })
    }

    /// Grid with `resolution` offsets spanning slightly beyond the data (so
    /// both constant classifiers are included) and, in 2-D, `resolution`
    /// angles.
    pub fn for_dataset(dataset: &Dataset, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument("grid resolution must be >= 2".into()));
        }
        let radius = dataset
            .instances()
            .iter()
            .map(|i| i.features.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let reach = radius * 1.05 + 1e-9;
        let offsets = (0..resolution)
            .map(|j| -reach + 2.0 * reach * j as f64 / (resolution - 1) as f64)
            .collect();
        Self::new(dataset.dim(), resolution, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len() * self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn predict(&self, h: usize, x: &[f64]) -> Label {
        let u = self.directions[h / self.offsets.len()];
        let t = self.offsets[h % self.offsets.len()];
        let proj = u[0] * x[0] + if self.dim == 2 { u[1] * x[1] } else { 0.0 };
        Label::from_score(proj - t)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(())
    }
}

/// Running weighted error of every grid hypothesis over a growing labelled
/// set.
#[derive(Debug, Clone)]
pub struct GridErrors {
    grid: HypothesisGrid,
    errors: Vec<f64>,
    total_weight: f64,
}

impl GridErrors {
    pub fn new(grid: HypothesisGrid) -> Self {
        let errors = vec![0.0; grid.len()];
        Self { grid, errors, total_weight: 0.0 }
    }

    pub fn add(&mut self, sample: &WeightedInstance) -> Result<()> {
        self.grid.check(&sample.instance.features)?;
        for (h, err) in self.errors.iter_mut().enumerate() {
            if self.grid.predict(h, &sample.instance.features) != sample.instance.label {
                *err += sample.weight;
            }
        }
        self.total_weight += sample.weight;
        Ok(())
    }

    /// `err(h', S) - err(h, S)` with errors normalised by the labelled weight;
    /// the first minimiser in grid order breaks ties.
    pub fn difference(&self, candidate: &[f64]) -> Result<f64> {
        self.grid.check(candidate)?;
        if self.total_weight <= 0.0 {
            return Ok(0.0);
        }
        let mut best = 0;
        for h in 1..self.errors.len() {
            if self.errors[h] < self.errors[best] {
                best = h;
            }
        }
        let label = self.grid.predict(best, candidate);
        let alternative = (0..self.errors.len())
            .filter(|&h| self.grid.predict(h, candidate) != label)
            .map(|h| self.errors[h])
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.min(e))))
            .ok_or(Error::DegenerateGrid)?;
        Ok(((alternative - self.errors[best]) / self.total_weight).max(0.0))
    }
}

/// Error difference `G` for `candidate` given the labelled set, computed by
/// exhaustive search over the grid.
pub fn error_difference_exact(
    labeled: &[WeightedInstance],
    candidate: &Instance,
    grid: &HypothesisGrid,
) -> Result<f64> {
    let mut errors = GridErrors::new(grid.clone());
    for s in labeled {
        errors.add(s)?;
    }
    errors.difference(&candidate.features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(x: Vec<f64>, y: i8, weight: f64) -> WeightedInstance {
        WeightedInstance::new(Instance::new(x, Label::from_i8(y).unwrap()), weight)
    }

    fn line_grid() -> HypothesisGrid {
        HypothesisGrid::new(1, 0, (-10..=10).map(|t| t as f64 / 10.0).collect()).unwrap()
    }

    #[test]
    fn empty_history_gives_zero() {
        let g = error_difference_exact(&[], &Instance::new(vec![0.3], Label::Positive), &line_grid()).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn deep_candidate_has_positive_gap() {
        let labeled = vec![w(vec![-0.8], -1, 1.0), w(vec![-0.6], -1, 1.0), w(vec![0.6], 1, 1.0), w(vec![0.8], 1, 1.0)];
        // Flipping the candidate at 0.9 forces a threshold above 0.9 (two
        // positives wrong) or a reversed direction (at best two wrong).
        let g = error_difference_exact(&labeled, &Instance::new(vec![0.9], Label::Positive), &line_grid()).unwrap();
        assert!((g - 0.5).abs() < 1e-12, "{g}");
    }

    #[test]
    fn boundary_candidate_has_zero_gap() {
        let labeled = vec![w(vec![-0.5], -1, 1.0), w(vec![0.5], 1, 1.0)];
        let g = error_difference_exact(&labeled, &Instance::new(vec![0.0], Label::Positive), &line_grid()).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn matches_brute_force_enumeration() {
        // Single labelled point: every hypothesis either errs on it or not,
        // so G is 1 when all disagreeing hypotheses err and 0 otherwise.
        let labeled = vec![w(vec![0.25], 1, 3.0)];
        let grid = line_grid();
        for c in [-0.95, -0.3, 0.0, 0.2, 0.3, 0.95] {
            let cand = Instance::new(vec![c], Label::Positive);
            let mut best = f64::INFINITY;
            let mut preds = Vec::new();
            for h in 0..grid.len() {
                let e = if grid.predict(h, &[0.25]) == Label::Positive { 0.0 } else { 1.0 };
                best = best.min(e);
                preds.push((grid.predict(h, &[c]), e));
            }
            let first = (0..grid.len()).find(|&h| preds[h].1 == best).unwrap();
            let alt = preds.iter().filter(|p| p.0 != preds[first].0).map(|p| p.1).fold(f64::INFINITY, f64::min);
            let g = error_difference_exact(&labeled, &cand, &grid).unwrap();
            assert_eq!(g, alt - best, "candidate {c}");
        }
    }

    #[test]
    fn degenerate_grid() {
        let grid = HypothesisGrid::new(1, 0, vec![0.5]).unwrap();
        let labeled = vec![w(vec![0.7], 1, 1.0)];
        assert!(error_difference_exact(&labeled, &Instance::new(vec![0.9], Label::Positive), &grid).is_ok());
        let flat = HypothesisGrid { dim: 1, directions: vec![[1.0, 0.0]], offsets: vec![0.5] };
        assert!(matches!(
            error_difference_exact(&labeled, &Instance::new(vec![0.9], Label::Positive), &flat),
            Err(Error::DegenerateGrid)
        ));
    }

    #[test]
    fn grid_rejects_high_dimensions() {
        assert!(HypothesisGrid::new(3, 8, vec![0.0]).is_err());
    }

    #[test]
    fn two_dimensional_grid_separates() {
        let ds = Dataset::new(
            "sq",
            vec![Instance::new(vec![-1.0, 0.0], Label::Negative), Instance::new(vec![1.0, 0.0], Label::Positive)],
        )
        .unwrap();
        let grid = HypothesisGrid::for_dataset(&ds, 16).unwrap();
        assert_eq!(grid.len(), 256);
        let labeled: Vec<_> = ds.instances().iter().cloned().map(WeightedInstance::unit).collect();
        // Any half-plane holding (1, 0) but not (2, 0) also holds (-1, 0).
        let g = error_difference_exact(&labeled, &Instance::new(vec![2.0, 0.0], Label::Positive), &grid).unwrap();
        assert!(g > 0.0);
    }
}

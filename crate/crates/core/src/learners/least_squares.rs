use nalgebra::{DMatrix, DVector};

use super::{validate_samples, LinearParams, Model, ModelKind, Params, WeightedInstance};
use crate::error::{Error, Result};

/// Relative pivot size below which the normal equations count as singular.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// Weighted ridge regression onto the `±1` labels. The intercept is not
/// penalised.
pub fn fit_least_squares(samples: &[WeightedInstance], ridge: f64) -> Result<Model> {
    let dim = validate_samples(samples)?;
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {ridge}")));
    }
    let p = dim + 1;
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut row = vec![1.0; p];
    for s in samples {
        row[..dim].copy_from_slice(&s.instance.features);
        let y = s.instance.label.sign();
        for a in 0..p {
            let wa = s.weight * row[a];
            rhs[a] += wa * y;
            for b in a..p {
                gram[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    for j in 0..dim {
        gram[(j, j)] += ridge;
    }

    let scale = (0..p).map(|j| gram[(j, j)]).fold(0.0, f64::max);
    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::SingularData("normal equations are not positive definite".into())
    })?;
    let l = chol.l_dirty();
    if (0..p).any(|j| l[(j, j)] * l[(j, j)] <= PIVOT_TOLERANCE * scale) {
        return Err(Error::SingularData("normal equations are rank deficient".into()));
    }
    let theta = chol.solve(&rhs);
    Ok(Model::new(
        ModelKind::LeastSquares,
        Params::Linear(LinearParams {
            weights: theta.iter().take(dim).copied().collect(),
            bias: theta[dim],
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{Instance, Label};
    use rand::{Rng, SeedableRng};

    fn s(x: Vec<f64>, y: i8, w: f64) -> WeightedInstance {
        WeightedInstance::new(Instance::new(x, Label::from_i8(y).unwrap()), w)
    }

    #[test]
    fn interpolates_two_points() {
        let m = fit_least_squares(&[s(vec![-1.0], -1, 1.0), s(vec![1.0], 1, 1.0)], 0.0).unwrap();
        let p = m.linear_params().unwrap();
        assert!((p.weights[0] - 1.0).abs() < 1e-12);
        assert!(p.bias.abs() < 1e-12);
    }

    #[test]
    fn duplicate_equals_double_weight() {
        let base = vec![s(vec![0.2, 1.0], 1, 1.0), s(vec![-0.7, 0.4], -1, 1.5), s(vec![0.1, -0.3], -1, 0.5), s(vec![0.9, 0.2], 1, 2.0)];
        let mut dup = base.clone();
        dup.push(base[1].clone());
        let mut doubled = base.clone();
        doubled[1].weight *= 2.0;
        let a = fit_least_squares(&dup, 0.0).unwrap();
        let b = fit_least_squares(&doubled, 0.0).unwrap();
        let (pa, pb) = (a.linear_params().unwrap(), b.linear_params().unwrap());
        for (x, y) in pa.weights.iter().zip(&pb.weights) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((pa.bias - pb.bias).abs() < 1e-10);
    }

    #[test]
    fn singular_without_ridge() {
        // Identical feature vectors: the design has rank 1.
        let samples = vec![s(vec![1.0, 1.0], 1, 1.0), s(vec![1.0, 1.0], -1, 1.0), s(vec![2.0, 2.0], 1, 1.0)];
        assert!(matches!(fit_least_squares(&samples, 0.0), Err(Error::SingularData(_))));
        assert!(fit_least_squares(&samples, 0.1).is_ok());
    }

    /// Solves `min |sqrt(W) (X t - y)|^2 + ridge |t_w|^2` by QR of the
    /// stacked, row-scaled design rather than by the normal equations.
    fn qr_oracle(samples: &[WeightedInstance], ridge: f64) -> Vec<f64> {
        let dim = samples[0].instance.features.len();
        let p = dim + 1;
        let rows = samples.len() + dim;
        let mut a = DMatrix::<f64>::zeros(rows, p);
        let mut y = DVector::<f64>::zeros(rows);
        for (i, s) in samples.iter().enumerate() {
            let r = s.weight.sqrt();
            for j in 0..dim {
                a[(i, j)] = r * s.instance.features[j];
            }
            a[(i, dim)] = r;
            y[i] = r * s.instance.label.sign();
        }
        for j in 0..dim {
            a[(samples.len() + j, j)] = ridge.sqrt();
        }
        let qr = a.qr();
        let qty = qr.q().transpose() * y;
        let sol = qr.r().solve_upper_triangular(&qty).unwrap();
        sol.iter().copied().collect()
    }

    #[test]
    fn matches_qr_oracle_on_random_problems() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..20 {
            let dim = 1 + trial % 3;
            let samples: Vec<WeightedInstance> = (0..5)
                .map(|_| {
                    let x = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                    s(x, if rng.random::<bool>() { 1 } else { -1 }, rng.random_range(1.0..10.0))
                })
                .collect();
            let ridge = if trial % 2 == 0 { 0.0 } else { 0.3 };
            let m = fit_least_squares(&samples, ridge).unwrap();
            let p = m.linear_params().unwrap();
            let oracle = qr_oracle(&samples, ridge);
            for j in 0..dim {
                assert!((p.weights[j] - oracle[j]).abs() < 1e-8, "trial {trial}");
            }
            assert!((p.bias - oracle[dim]).abs() < 1e-8);
        }
    }
}

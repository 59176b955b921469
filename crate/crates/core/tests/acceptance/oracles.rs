//! Independent reference computations for the learner checks. Nothing here
//! calls into the library's numerics.

/// Gaussian elimination with partial pivoting. `None` when singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Weighted ridge regression through the normal equations on `[x, 1]`; the
/// offset is not penalised. Returns `(weights, bias)`.
pub fn least_squares(xs: &[Vec<f64>], ys: &[f64], ws: &[f64], ridge: f64) -> (Vec<f64>, f64) {
    let d = xs[0].len() + 1;
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for ((x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let z: Vec<f64> = x.iter().copied().chain([1.0]).collect();
        for i in 0..d {
            b[i] += w * z[i] * y;
            for j in 0..d {
                a[i][j] += w * z[i] * z[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate().take(d - 1) {
        row[i] += ridge;
    }
    let theta = solve(a, b).expect("oracle system is regular");
    (theta[..d - 1].to_vec(), theta[d - 1])
}

pub struct Moments {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major, normalised by the class weight.
    pub covariance: Vec<Vec<f64>>,
}

pub fn class_moments(xs: &[Vec<f64>], ws: &[f64]) -> Moments {
    let d = xs[0].len();
    let weight: f64 = ws.iter().sum();
    let mut mean = vec![0.0; d];
    for (x, w) in xs.iter().zip(ws) {
        for k in 0..d {
            mean[k] += w * x[k] / weight;
        }
    }
    let mut covariance = vec![vec![0.0; d]; d];
    for (x, w) in xs.iter().zip(ws) {
        for i in 0..d {
            for j in 0..d {
                covariance[i][j] += w * (x[i] - mean[i]) * (x[j] - mean[j]) / weight;
            }
        }
    }
    Moments { weight, mean, covariance }
}

/// Exact maximum of the box- and equality-constrained SVM dual
/// `sum a - 1/2 a'Qa`, found by enumerating which variables sit at 0, at
/// their upper bound, or strictly between. On each face the maximiser of
/// the concave objective restricted to the face's affine hull is a linear
/// solve; the global maximum is the best face maximiser inside the box.
pub fn svm_dual_max(kernel: &[Vec<f64>], y: &[f64], upper: &[f64]) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i][j];
    let objective = |a: &[f64]| {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * a[j] * q(i, j)).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        // 0: at zero, 1: at upper bound, 2: free.
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let mut alpha: Vec<f64> = (0..n).map(|i| if state[i] == 1 { upper[i] } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if free.is_empty() {
            if alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-12 {
                best = best.max(objective(&alpha));
            }
            continue;
        }
        // Stationarity on the free set with multiplier b for the equality:
        // sum_j Q_ij a_j + y_i b = 1 for free i, and sum_i y_i a_i = 0.
        let m = free.len() + 1;
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                a[r][c] = q(i, j);
            }
            a[r][m - 1] = y[i];
            rhs[r] = 1.0 - (0..n).filter(|&j| state[j] == 1).map(|j| q(i, j) * upper[j]).sum::<f64>();
        }
        for (c, &j) in free.iter().enumerate() {
            a[m - 1][c] = y[j];
        }
        rhs[m - 1] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * upper[j]).sum::<f64>();
        let Some(sol) = solve(a, rhs) else { continue };
        if free.iter().enumerate().any(|(r, &i)| sol[r] < -1e-12 || sol[r] > upper[i] + 1e-12) {
            continue;
        }
        for (r, &i) in free.iter().enumerate() {
            alpha[i] = sol[r].clamp(0.0, upper[i]);
        }
        best = best.max(objective(&alpha));
    }
    best
}

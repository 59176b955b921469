use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Standard error of the mean with the `n - 1` sample variance; zero for a
/// single value.
pub fn sem(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let n = values.len();
    if n < 2 {
        return Some(0.0);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    Some((var / n as f64).sqrt())
}

/// Midpoint median.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 })
}

/// Welch statistic `(mean_a - mean_b) / sqrt(sem_a^2 + sem_b^2)` from
/// summary statistics. The group sizes are only validated.
pub fn welch_t(mean_a: f64, sem_a: f64, n_a: usize, mean_b: f64, sem_b: f64, n_b: usize) -> Result<f64> {
    if !(sem_a > 0.0 && sem_b > 0.0) {
        return Err(Error::InvalidArgument(format!("standard errors must be > 0, got {sem_a} and {sem_b}")));
    }
    if n_a < 2 || n_b < 2 {
        return Err(Error::InvalidArgument("each group needs at least two observations".into()));
    }
    Ok((mean_a - mean_b) / (sem_a * sem_a + sem_b * sem_b).sqrt())
}

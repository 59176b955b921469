//! Synthetic distributions used by the reusability demonstrations.

use rand::Rng;

use super::{Dataset, Instance, Label};
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const CIRCLE_INNER_RADIUS: f64 = 9.9;
pub const CIRCLE_OUTER_RADIUS: f64 = 10.2;

fn check_count(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("{what} needs n >= {min}, got {n}")));
    }
    Ok(())
}

/// Uniform on `[-1, 1]`, negative left of zero and positive from zero on.
pub fn gen_uniform_line(n: usize, seed: u64) -> Result<Dataset> {
    check_count(n, 2, "uniform line")?;
    let mut rng = seeded(seed);
    let instances = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..=1.0);
            Instance::new(vec![x], Label::from_score(x))
        })
        .collect();
    Dataset::new("uniform-line", instances)
}

/// `(lo, hi, probability, label)` for the four clusters of the `+ - + -` line.
const FOUR_CLUSTERS: [(f64, f64, f64, Label); 4] = [
    (-7.5, -7.0, 0.01, Label::Positive),
    (-7.0, 0.0, 0.49, Label::Negative),
    (0.0, 7.0, 0.49, Label::Positive),
    (7.0, 7.5, 0.01, Label::Negative),
];

/// Label of the four-cluster line at position `x` (boundaries belong to the
/// cluster on their right, the last cluster is closed).
pub(crate) fn four_cluster_label(x: f64) -> Label {
    if x < -7.0 {
        Label::Positive
    } else if x < 0.0 {
        Label::Negative
    } else if x < 7.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn gen_four_cluster_line(n: usize, seed: u64) -> Result<Dataset> {
    check_count(n, 4, "four-cluster line")?;
    let mut rng = seeded(seed);
    let instances = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = FOUR_CLUSTERS[3];
            for cluster in FOUR_CLUSTERS {
                acc += cluster.2;
                if u < acc {
                    chosen = cluster;
                    break;
                }
            }
            let (lo, hi, _, _) = chosen;
            let mut x: f64 = rng.random_range(lo..hi);
            if x >= hi {
                x = lo;
            }
            Instance::new(vec![x], four_cluster_label(x))
        })
        .collect();
    Dataset::new("four-cluster-line", instances)
}

/// Label of a circle-dataset point: clusters split at `x = 0`, annulus points
/// take the opposite label of the cluster on their side.
pub(crate) fn circle_label(point: [f64; 2]) -> Label {
    let cluster = Label::from_score(point[0]);
    if point[0].hypot(point[1]) >= CIRCLE_INNER_RADIUS {
        cluster.flipped()
    } else {
        cluster
    }
}

/// Two dense unit squares either side of `x = 0` inside a sparse annulus of
/// the opposite class. `circle_prob` is the annulus mass on each side.
pub fn gen_circle(n: usize, circle_prob: f64, seed: u64) -> Result<Dataset> {
    check_count(n, 2, "circle")?;
    if !(circle_prob > 0.0 && circle_prob < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "circle_prob must lie in (0, 0.5), got {circle_prob}"
        )));
    }
    let mut rng = seeded(seed);
    let (r_in2, r_out2) = (CIRCLE_INNER_RADIUS.powi(2), CIRCLE_OUTER_RADIUS.powi(2));
    let instances = (0..n)
        .map(|_| {
            let point = if rng.random::<f64>() < 2.0 * circle_prob {
                let r = rng.random_range(r_in2..r_out2).sqrt();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                [r * theta.cos(), r * theta.sin()]
            } else {
                [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]
            };
            Instance::new(point.to_vec(), circle_label(point))
        })
        .collect();
    Dataset::new("circle", instances)
}

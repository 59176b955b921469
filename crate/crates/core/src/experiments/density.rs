use rayon::prelude::*;

use super::config::{DatasetSpec, SelectorSettings};
use super::{COIN_TAG, DATA_TAG};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::selection::select_iwal;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub c0: f64,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    /// Share of selected examples falling in the bin.
    pub unweighted_mass: f64,
    /// Share of importance weight falling in the bin.
    pub weighted_mass: f64,
}

/// Histogram of IWAL selections over a 1-D generator, pooled over `runs`
/// fresh pools. Run `r` draws its pool and coins from `base_seed + r`, so
/// every `c0` sees the same pools and coins.
pub fn density_histogram(
    spec: &DatasetSpec,
    c0_grid: &[f64],
    runs: usize,
    bins: usize,
    base_seed: u64,
    selector: &SelectorSettings,
) -> Result<Vec<DensityRow>> {
    let (lo, hi) = spec.line_support()?;
    if runs == 0 || bins == 0 {
        return Err(Error::InvalidArgument("density needs runs >= 1 and bins >= 1".into()));
    }
    let width = (hi - lo) / bins as f64;
    let bin_of = |x: f64| (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);

    let mut rows = Vec::with_capacity(c0_grid.len() * bins);
    for &c0 in c0_grid {
        let per_run: Vec<(Vec<f64>, Vec<f64>)> = (0..runs)
            .into_par_iter()
            .map(|r| {
                let seed = base_seed.wrapping_add(r as u64);
                let pool = spec.build(derive_seed(seed, DATA_TAG))?;
                let sel = select_iwal(&pool, &selector.iwal(c0, derive_seed(seed, COIN_TAG)), true)?;
                let mut counts = vec![0.0; bins];
                let mut weights = vec![0.0; bins];
                for s in &sel.selected {
                    let b = bin_of(s.instance.features[0]);
                    counts[b] += 1.0;
                    weights[b] += s.weight;
                }
                Ok((counts, weights))
            })
            .collect::<Result<_>>()?;
        let mut counts = vec![0.0; bins];
        let mut weights = vec![0.0; bins];
        for (c, w) in &per_run {
            for b in 0..bins {
                counts[b] += c[b];
                weights[b] += w[b];
            }
        }
        let (tc, tw): (f64, f64) = (counts.iter().sum(), weights.iter().sum());
        for b in 0..bins {
            rows.push(DensityRow {
                c0,
                bin: b,
                lo: lo + width * b as f64,
                hi: lo + width * (b + 1) as f64,
                unweighted_mass: counts[b] / tc,
                weighted_mass: weights[b] / tw,
            });
        }
    }
    Ok(rows)
}

pub const DENSITY_COLUMNS: [&str; 6] = ["c0", "bin", "lo", "hi", "unweighted_mass", "weighted_mass"];

pub fn write_density_csv(path: &std::path::Path, rows: &[DensityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DENSITY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.c0.to_string(),
            r.bin.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.unweighted_mass.to_string(),
            r.weighted_mass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

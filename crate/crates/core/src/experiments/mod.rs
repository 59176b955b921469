//! Repetition engine: splits, selections, consumer training and the
//! statistics that turn them into learning curves and reusability verdicts.

mod config;
mod density;
mod report;
mod stats;

pub use config::{log_grid, DatasetSpec, DensityConfig, ExperimentConfig, SelectorSettings};
pub use density::{density_histogram, write_density_csv, DensityRow, DENSITY_COLUMNS};
pub use report::{
    aggregate, curve_rows, read_reps_csv, reusability_report, write_curve_csv, write_report_csv, write_reps_csv,
    Cell, CurvePoint, RepRecord, ReportRow, Verdict, CURVE_COLUMNS, MIN_REPS, REPORT_COLUMNS, REPS_COLUMNS,
    T_THRESHOLD,
};
pub use stats::{mean, median, sem, welch_t};

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{split, Dataset};
use crate::error::{Error, Result};
use crate::learners::{fit_consumer, zero_one_error};
use crate::rng::derive_seed;
use crate::selection::{
    fit_ranking_model, select_iwal, select_random, select_uncertainty, write_trace, SelectionResult, Strategy,
    TraceHeader,
};

pub(crate) const DATA_TAG: u64 = 1;
pub(crate) const COIN_TAG: u64 = 2;

/// How to rebuild the training stream of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSource {
    pub dataset: DatasetSpec,
    pub test_prop: f64,
    pub rep: usize,
    pub split_seed: u64,
    /// Generator seed; absent for CSV pools.
    pub data_seed: Option<u64>,
    pub scale: bool,
}

impl TraceSource {
    pub fn new(config: &ExperimentConfig, rep: usize) -> Self {
        let split_seed = config.base_seed.wrapping_add(rep as u64);
        Self {
            dataset: config.dataset.clone(),
            test_prop: config.test_prop,
            rep,
            split_seed,
            data_seed: config.dataset.is_generated().then(|| derive_seed(split_seed, DATA_TAG)),
            scale: config.scale(),
        }
    }

    /// The selector's view of the training split.
    pub fn training_pool(&self) -> Result<Dataset> {
        Ok(self.views(None)?.selector_train)
    }

    fn views(&self, pool: Option<&Dataset>) -> Result<RepViews> {
        let owned;
        let pool = match (pool, self.data_seed) {
            (Some(p), _) => p,
            (None, seed) => {
                owned = self.dataset.build(seed.unwrap_or(0))?;
                &owned
            }
        };
        let mut pair = split(pool, self.test_prop, self.split_seed)?;
        if self.scale {
            pair = pair.scaled()?;
        }
        let (consumer_train, consumer_test) = if pair.train.has_one_hot() {
            (pair.train.reference_coded()?, pair.test.reference_coded()?)
        } else {
            (pair.train.clone(), pair.test.clone())
        };
        Ok(RepViews { selector_train: pair.train, consumer_train, consumer_test })
    }
}

/// The selector sees full one-hot blocks; consumers see reference coding.
struct RepViews {
    selector_train: Dataset,
    consumer_train: Dataset,
    consumer_test: Dataset,
}

pub struct RunOptions<'a> {
    pub jobs: usize,
    /// Directory for per-repetition trace files, when traces are enabled.
    pub trace_dir: Option<PathBuf>,
    /// Called with `(finished, total)` after each repetition.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self { jobs: 1, trace_dir: None, progress: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub n_train: usize,
    pub n_grid: Vec<usize>,
    pub records: Vec<RepRecord>,
    pub curve: Vec<CurvePoint>,
    pub report: Vec<ReportRow>,
    pub density: Vec<DensityRow>,
    /// Trace files relative to the trace directory.
    pub traces: Vec<String>,
}

fn drop_reason(e: &Error) -> &'static str {
    match e {
        Error::MissingClass { .. } => "missing-class",
        Error::SingularData(_) => "singular-data",
        Error::Convergence { .. } => "convergence",
        _ => "error",
    }
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

struct RepOutput {
    records: Vec<RepRecord>,
    traces: Vec<String>,
}

fn run_rep(
    config: &ExperimentConfig,
    pool: Option<&Dataset>,
    n_grid: &[usize],
    rep: usize,
    trace_dir: Option<&Path>,
) -> Result<RepOutput> {
    let source = TraceSource::new(config, rep);
    let views = source.views(pool)?;
    let train = &views.selector_train;
    let coin_seed = derive_seed(source.split_seed, COIN_TAG);

    let mut selections: Vec<(Strategy, Cell, SelectionResult, TraceHeader)> = Vec::new();
    for &strategy in &config.strategies {
        match strategy {
            Strategy::Random => {
                for &n in n_grid {
                    selections.push((strategy, Cell::N(n), select_random(train, n)?, TraceHeader::for_random(n)));
                }
            }
            Strategy::Uncertainty => {
                let rate = config.selector.rate;
                let ranking = fit_ranking_model(train, rate)?;
                for &n in n_grid {
                    let sel = select_uncertainty(train, n, &ranking)?;
                    selections.push((strategy, Cell::N(n), sel, TraceHeader::for_uncertainty(n, rate)));
                }
            }
            Strategy::Iwal | Strategy::IwalNoWeights => {
                let use_weights = strategy == Strategy::Iwal;
                for &c0 in &config.c0_grid {
                    let iwal = config.selector.iwal(c0, coin_seed);
                    let sel = select_iwal(train, &iwal, use_weights)?;
                    selections.push((strategy, Cell::C0(c0), sel, TraceHeader::for_iwal(&iwal, use_weights)));
                }
            }
        }
    }

    let mut records = Vec::new();
    let mut traces = Vec::new();
    for (strategy, cell, sel, mut header) in selections {
        if let Some(dir) = trace_dir {
            header.source = serde_json::to_value(&source).map_err(|e| Error::Config(e.to_string()))?;
            let name = format!("rep{rep:04}-{strategy}-{cell}.csv");
            write_trace(&dir.join(&name), &header, &sel)?;
            traces.push(name);
        }
        // Consumers get the labelled set in pool order, so a selection's
        // order never reaches an order-sensitive learner.
        let mut samples: Vec<_> = sel.selected_indices.iter().copied().zip(sel.reindexed(&views.consumer_train)?).collect();
        samples.sort_by_key(|(i, _)| *i);
        let samples: Vec<_> = samples.into_iter().map(|(_, s)| s).collect();
        for &consumer in &config.consumers {
            let outcome = if samples.is_empty() {
                Err("empty-selection")
            } else {
                match fit_consumer(consumer, &samples, &config.learners) {
                    Ok(model) => Ok(zero_one_error(&model, &views.consumer_test)?),
                    Err(e) if e.is_droppable() => Err(drop_reason(&e)),
                    Err(e) => return Err(e),
                }
            };
            records.push(RepRecord {
                strategy,
                consumer,
                cell,
                rep,
                selected: sel.len(),
                error: outcome.ok(),
                dropped: outcome.err().map(str::to_string),
            });
        }
    }
    Ok(RepOutput { records, traces })
}

/// Runs every repetition and aggregates. Output is identical for any number
/// of jobs.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions<'_>) -> Result<ExperimentResult> {
    config.validate()?;
    let fixed_pool = if config.dataset.is_generated() { None } else { Some(config.dataset.build(0)?) };
    let probe = TraceSource::new(config, 0).views(fixed_pool.as_ref())?;
    let n_train = probe.selector_train.len();
    let n_grid = if config.strategies.iter().any(|s| !s.is_iwal()) {
        config.resolved_n_grid(n_train)?
    } else {
        Vec::new()
    };
    drop(probe);

    let trace_dir = if config.traces { options.trace_dir.as_deref() } else { None };
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let done = AtomicUsize::new(0);
    let pool = thread_pool(options.jobs)?;
    let outputs: Vec<RepOutput> = pool.install(|| {
        (0..config.repetitions)
            .into_par_iter()
            .map(|rep| {
                let out = run_rep(config, fixed_pool.as_ref(), &n_grid, rep, trace_dir);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(progress) = options.progress {
                    progress(finished, config.repetitions);
                }
                out
            })
            .collect::<Result<_>>()
    })?;

    let mut records = Vec::new();
    let mut traces = Vec::new();
    for out in outputs {
        records.extend(out.records);
        traces.extend(out.traces);
    }
    let curve = aggregate(&records)?;
    let report = reusability_report(&curve);
    let density = match &config.density {
        Some(d) => pool.install(|| {
            density_histogram(&config.dataset, &config.c0_grid, d.runs, d.bins, config.base_seed, &config.selector)
        })?,
        None => Vec::new(),
    };
    Ok(ExperimentResult { n_train, n_grid, records, curve, report, density, traces })
}

/// Median IWAL selection count over `reps` repetitions of the config's
/// protocol at one `c0`.
pub fn median_selected(config: &ExperimentConfig, c0: f64, reps: usize, jobs: usize) -> Result<f64> {
    let fixed_pool = if config.dataset.is_generated() { None } else { Some(config.dataset.build(0)?) };
    let counts: Vec<f64> = thread_pool(jobs)?.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let source = TraceSource::new(config, rep);
                let views = source.views(fixed_pool.as_ref())?;
                let iwal = config.selector.iwal(c0, derive_seed(source.split_seed, COIN_TAG));
                Ok(select_iwal(&views.selector_train, &iwal, true)?.len() as f64)
            })
            .collect::<Result<_>>()
    })?;
    Ok(median(&counts).unwrap_or(0.0))
}

/// Bisects `log c0` in `[lo, hi]` until the median selection count is within
/// `rel_tol` of `target`. Returns the last `c0` tried and its median.
pub fn calibrate_c0(
    config: &ExperimentConfig,
    target: f64,
    rel_tol: f64,
    (lo, hi): (f64, f64),
    reps: usize,
    jobs: usize,
) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument("calibration bracket must satisfy 0 < lo < hi".into()));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut best = (f64::NAN, f64::NAN);
    for _ in 0..60 {
        let c0 = ((a + b) / 2.0).exp();
        let m = median_selected(config, c0, reps, jobs)?;
        best = (c0, m);
        if (m - target).abs() <= rel_tol * target {
            break;
        }
        if m < target {
            a = c0.ln();
        } else {
            b = c0.ln();
        }
    }
    Ok(best)
}

/// Snapshot written next to the outputs of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub base_seed: u64,
    pub config: ExperimentConfig,
    /// Original config text, when the run started from a TOML file.
    pub config_toml: Option<String>,
    pub n_train: usize,
    pub n_grid: Vec<usize>,
    /// Output name to path relative to the output directory.
    pub outputs: std::collections::BTreeMap<String, String>,
    pub traces: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub const CURVE_FILE: &str = "curve.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const REPS_FILE: &str = "reps.csv";
pub const DENSITY_FILE: &str = "density.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_DIR: &str = "traces";

/// Runs `config` and writes curve, report, per-repetition records, optional
/// density and traces, and the manifest into `out_dir`.
pub fn run_to_dir(
    config: &ExperimentConfig,
    config_toml: Option<String>,
    out_dir: &Path,
    jobs: usize,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<(ExperimentResult, RunManifest)> {
    let started_unix = unix_now();
    std::fs::create_dir_all(out_dir)?;
    let options = RunOptions { jobs, trace_dir: Some(out_dir.join(TRACE_DIR)), progress };
    let result = run_experiment(config, &options)?;
    let mut outputs = std::collections::BTreeMap::new();
    write_curve_csv(&out_dir.join(CURVE_FILE), &result.curve)?;
    outputs.insert("curve".to_string(), CURVE_FILE.to_string());
    write_report_csv(&out_dir.join(REPORT_FILE), &result.report)?;
    outputs.insert("report".to_string(), REPORT_FILE.to_string());
    write_reps_csv(&out_dir.join(REPS_FILE), &result.records)?;
    outputs.insert("reps".to_string(), REPS_FILE.to_string());
    if !result.density.is_empty() {
        write_density_csv(&out_dir.join(DENSITY_FILE), &result.density)?;
        outputs.insert("density".to_string(), DENSITY_FILE.to_string());
    }
    let manifest = RunManifest {
        tool: "reuselab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        base_seed: config.base_seed,
        config: config.clone(),
        config_toml,
        n_train: result.n_train,
        n_grid: result.n_grid.clone(),
        outputs,
        traces: result.traces.iter().map(|t| format!("{TRACE_DIR}/{t}")).collect(),
        started_unix,
        finished_unix: unix_now(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out_dir.join(MANIFEST_FILE), json + "\n")?;
    Ok((result, manifest))
}

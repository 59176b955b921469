use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{gen_circle, gen_four_cluster_line, gen_uniform_line, load_csv, CsvSchema, Dataset, LabelColumn};
use crate::error::{Error, Result};
use crate::learners::{ConsumerParams, LearningRate, ModelKind};
use crate::selection::{GkMode, IwalConfig, LogBase, Strategy};

fn default_circle_prob() -> f64 {
    0.001
}

/// Where a pool comes from. Generated pools are redrawn for every
/// repetition; CSV pools are read once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    UniformLine {
        n: usize,
    },
    FourClusterLine {
        n: usize,
    },
    Circle {
        n: usize,
        #[serde(default = "default_circle_prob")]
        circle_prob: f64,
    },
    Csv {
        path: PathBuf,
        label_column: LabelColumn,
        positive: Vec<String>,
        #[serde(default)]
        schema: CsvSchema,
    },
}

impl DatasetSpec {
    pub fn is_generated(&self) -> bool {
        !matches!(self, DatasetSpec::Csv { .. })
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSpec::UniformLine { .. } => "uniform-line".into(),
            DatasetSpec::FourClusterLine { .. } => "four-cluster-line".into(),
            DatasetSpec::Circle { .. } => "circle".into(),
            DatasetSpec::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
        }
    }

    /// Materialises the pool. `seed` drives generators and is ignored for CSV.
    pub fn build(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::UniformLine { n } => gen_uniform_line(*n, seed),
            DatasetSpec::FourClusterLine { n } => gen_four_cluster_line(*n, seed),
            DatasetSpec::Circle { n, circle_prob } => gen_circle(*n, *circle_prob, seed),
            DatasetSpec::Csv { path, label_column, positive, schema } => load_csv(path, label_column, positive, schema),
        }
    }

    /// Support of a 1-D generator, for histogramming.
    pub fn line_support(&self) -> Result<(f64, f64)> {
        match self {
            DatasetSpec::UniformLine { .. } => Ok((-1.0, 1.0)),
            DatasetSpec::FourClusterLine { .. } => Ok((-7.5, 7.5)),
            _ => Err(Error::InvalidArgument(format!("{} is not a 1-D generator", self.name()))),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let DatasetSpec::Csv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Selector settings shared by every IWAL cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectorSettings {
    pub gk_mode: GkMode,
    pub grid_resolution: usize,
    pub log_base: LogBase,
    pub rate: LearningRate,
}

impl Default for SelectorSettings {
    fn default() -> Self {
        let defaults = IwalConfig::new(1.0, 0);
        Self {
            gk_mode: defaults.gk_mode,
            grid_resolution: defaults.grid_resolution,
            log_base: defaults.log_base,
            rate: defaults.rate,
        }
    }
}

impl SelectorSettings {
    pub fn iwal(&self, c0: f64, seed: u64) -> IwalConfig {
        IwalConfig {
            c0,
            gk_mode: self.gk_mode,
            grid_resolution: self.grid_resolution,
            log_base: self.log_base,
            rate: self.rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub runs: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    10
}

fn default_repetitions() -> usize {
    100
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dataset: DatasetSpec,
    pub test_prop: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub strategies: Vec<Strategy>,
    pub consumers: Vec<ModelKind>,
    /// Sample sizes for random and uncertainty; defaults to ten log-spaced
    /// sizes from 10 to the training-set size.
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub c0_grid: Vec<f64>,
    #[serde(default)]
    pub base_seed: u64,
    /// Min-max scale numeric columns; defaults to on for CSV and off for
    /// generated pools.
    #[serde(default)]
    pub scale: Option<bool>,
    #[serde(default)]
    pub selector: SelectorSettings,
    #[serde(default)]
    pub learners: ConsumerParams,
    /// Write one trace file per repetition and selection cell.
    #[serde(default)]
    pub traces: bool,
    #[serde(default)]
    pub density: Option<DensityConfig>,
}

impl ExperimentConfig {
    /// Parses TOML; relative CSV paths are taken relative to `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.dataset.resolve(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::MissingFile { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Ok((Self::from_toml(&text, base)?, text))
    }

    pub fn scale(&self) -> bool {
        self.scale.unwrap_or(!self.dataset.is_generated())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.repetitions == 0 {
            return fail("repetitions must be >= 1".into());
        }
        if !(self.test_prop > 0.0 && self.test_prop < 1.0) {
            return fail(format!("test_prop must lie in (0, 1), got {}", self.test_prop));
        }
        if self.strategies.is_empty() {
            return fail("strategies must not be empty".into());
        }
        if self.consumers.is_empty() {
            return fail("consumers must not be empty".into());
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return fail(format!("strategy {s} listed twice"));
            }
        }
        for (i, c) in self.consumers.iter().enumerate() {
            if self.consumers[..i].contains(c) {
                return fail(format!("consumer {c} listed twice"));
            }
        }
        let uses_iwal = self.strategies.iter().any(|s| s.is_iwal());
        if uses_iwal && self.c0_grid.is_empty() {
            return fail("c0_grid must not be empty when an IWAL strategy is present".into());
        }
        if let Some(c0) = self.c0_grid.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return fail(format!("c0 values must be > 0, got {c0}"));
        }
        if let Some(grid) = &self.n_grid {
            if grid.is_empty() && self.strategies.iter().any(|s| !s.is_iwal()) {
                return fail("n_grid must not be empty".into());
            }
        }
        if let Some(d) = &self.density {
            if d.runs == 0 || d.bins == 0 {
                return fail("density runs and bins must be >= 1".into());
            }
            if self.c0_grid.is_empty() {
                return fail("density needs a c0_grid".into());
            }
            self.dataset.line_support().map_err(|e| Error::Config(e.to_string()))?;
        }
        match &self.dataset {
            DatasetSpec::UniformLine { n } | DatasetSpec::FourClusterLine { n } | DatasetSpec::Circle { n, .. } if *n < 2 => {
                fail("dataset n must be >= 2".into())
            }
            DatasetSpec::Circle { circle_prob, .. } if !(*circle_prob > 0.0 && *circle_prob < 0.5) => {
                fail(format!("circle_prob must lie in (0, 0.5), got {circle_prob}"))
            }
            _ => Ok(()),
        }
    }

    /// Sample-size grid for a training set of `n_train` examples.
    pub fn resolved_n_grid(&self, n_train: usize) -> Result<Vec<usize>> {
        match &self.n_grid {
            Some(grid) => {
                if let Some(n) = grid.iter().find(|&&n| n > n_train) {
                    return Err(Error::Config(format!("n_grid value {n} exceeds the {n_train} training examples")));
                }
                let mut grid = grid.clone();
                grid.sort_unstable();
                grid.dedup();
                Ok(grid)
            }
            None => Ok(log_grid(10.min(n_train), n_train, 10)),
        }
    }
}

/// `points` log-spaced integers from `lo` to `hi` inclusive, deduplicated.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    if points <= 1 || hi <= lo || lo == 0 {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as usize)
        .collect();
    grid[points - 1] = hi;
    grid.dedup();
    grid
}

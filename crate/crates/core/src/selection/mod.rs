//! Sample-selection strategies: random prefix, uncertainty ranking and
//! importance-weighted active learning (IWAL), with or without importance
//! weights on the output.

mod grid;
mod trace;

pub use grid::{error_difference_exact, GridErrors, HypothesisGrid};
pub use trace::{compare_traces, read_trace, write_trace, Divergence, TraceHeader};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::learners::{LearningRate, Model, OnlineLinear, WeightedInstance};
use crate::rng::uniform_at;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Uncertainty,
    Iwal,
    IwalNoWeights,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Random, Strategy::Uncertainty, Strategy::Iwal, Strategy::IwalNoWeights];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Uncertainty => "uncertainty",
            Strategy::Iwal => "iwal",
            Strategy::IwalNoWeights => "iwal-no-weights",
        }
    }

    pub fn is_iwal(self) -> bool {
        matches!(self, Strategy::Iwal | Strategy::IwalNoWeights)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

/// How the error difference `G_k` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GkMode {
    /// Exhaustive search over a finite grid of linear hypotheses (1-D and 2-D).
    ExactErm,
    /// Margin of the online selector relative to its running mean margin.
    #[default]
    Surrogate,
}

/// Logarithm used in the selection probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    Natural,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

fn default_grid_resolution() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IwalConfig {
    pub c0: f64,
    #[serde(default)]
    pub gk_mode: GkMode,
    /// Offsets (and, in 2-D, angles) of the exact-mode hypothesis grid.
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default)]
    pub rate: LearningRate,
    /// Key of the per-example coin flips.
    pub seed: u64,
}

impl IwalConfig {
    pub fn new(c0: f64, seed: u64) -> Self {
        Self {
            c0,
            gk_mode: GkMode::default(),
            grid_resolution: default_grid_resolution(),
            log_base: LogBase::default(),
            rate: LearningRate::default(),
            seed,
        }
    }
}

/// One stream example's fate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    pub g: f64,
    pub probability: f64,
    pub coin: bool,
    pub selected: bool,
    /// Stored importance weight; 0 for examples that were not selected.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub strategy: Strategy,
    pub c0: Option<f64>,
    pub seed: u64,
    pub selected: Vec<WeightedInstance>,
    /// Positions in the training order of the selected examples.
    pub selected_indices: Vec<usize>,
    pub trace: Vec<TraceRow>,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// The selection re-expressed over another encoding of the same pool.
    pub fn reindexed(&self, pool: &Dataset) -> Result<Vec<WeightedInstance>> {
        self.selected_indices
            .iter()
            .zip(&self.selected)
            .map(|(&i, s)| {
                pool.instances()
                    .get(i)
                    .map(|inst| WeightedInstance::new(inst.clone(), s.weight))
                    .ok_or_else(|| Error::InvalidArgument(format!("index {i} outside the pool")))
            })
            .collect()
    }
}

fn check_count(train: &Dataset, n: usize) -> Result<()> {
    if n > train.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {n} of {} training examples",
            train.len()
        )));
    }
    Ok(())
}

fn prefix_result(strategy: Strategy, train: &Dataset, chosen: &[usize], g: impl Fn(usize) -> f64) -> SelectionResult {
    let mut flags = vec![false; train.len()];
    for &i in chosen {
        flags[i] = true;
    }
    let trace = (0..train.len())
        .map(|i| TraceRow {
            index: i,
            g: g(i),
            probability: 1.0,
            coin: flags[i],
            selected: flags[i],
            weight: if flags[i] { 1.0 } else { 0.0 },
        })
        .collect();
    SelectionResult {
        strategy,
        c0: None,
        seed: 0,
        selected: chosen.iter().map(|&i| WeightedInstance::unit(train.instances()[i].clone())).collect(),
        selected_indices: chosen.to_vec(),
        trace,
    }
}

/// The first `n` examples of the (already shuffled) training order.
pub fn select_random(train: &Dataset, n: usize) -> Result<SelectionResult> {
    check_count(train, n)?;
    let chosen: Vec<usize> = (0..n).collect();
    Ok(prefix_result(Strategy::Random, train, &chosen, |_| 0.0))
}

/// One unit-importance pass of the online selector over the pool.
pub fn fit_ranking_model(train: &Dataset, rate: LearningRate) -> Result<Model> {
    let mut learner = OnlineLinear::new(train.dim(), rate);
    for inst in train.instances() {
        learner.update(&inst.features, inst.label, 1.0)?;
    }
    Ok(learner.to_model())
}

/// The `n` examples closest to the ranking model's boundary, by ascending
/// `|score|` with ties going to the lower index. The trace records `|score|`
/// in the `g` column.
pub fn select_uncertainty(train: &Dataset, n: usize, ranking_model: &Model) -> Result<SelectionResult> {
    check_count(train, n)?;
    if ranking_model.dim() != train.dim() {
        return Err(Error::DimensionMismatch { expected: train.dim(), actual: ranking_model.dim() });
    }
    let margins: Vec<f64> = train.instances().iter().map(|i| ranking_model.score(&i.features).abs()).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&a, &b| margins[a].total_cmp(&margins[b]).then(a.cmp(&b)));
    order.truncate(n);
    Ok(prefix_result(Strategy::Uncertainty, train, &order, |i| margins[i]))
}

/// `min{1, (1/g^2 + 1/g) c0 log(k) / (k - 1)}`, with `g = 0` and `k = 1`
/// both saturating to 1.
pub fn selection_probability(g: f64, k: usize, c0: f64) -> f64 {
    selection_probability_with_base(g, k, c0, LogBase::Natural)
}

pub fn selection_probability_with_base(g: f64, k: usize, c0: f64, base: LogBase) -> f64 {
    if k <= 1 || g <= 0.0 {
        return 1.0;
    }
    let kf = k as f64;
    let bracket = (1.0 / (g * g) + 1.0 / g) * c0 * base.log(kf) / (kf - 1.0);
    bracket.min(1.0)
}

/// Surrogate error difference: `|score|` over the mean `|score|` of the
/// previous stream examples, each taken when it was seen. Zero without
/// history.
#[derive(Debug, Clone, Default)]
pub struct SurrogateGap {
    sum_abs: f64,
    seen: usize,
}

impl SurrogateGap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `G` for this score and then adds it to the history.
    pub fn observe(&mut self, score: f64) -> f64 {
        let s = score.abs();
        let g = if self.seen == 0 || self.sum_abs <= 0.0 {
            0.0
        } else {
            s / (self.sum_abs / self.seen as f64)
        };
        self.sum_abs += s;
        self.seen += 1;
        g
    }
}

/// Surrogate `G` for a single candidate against a fixed history of absolute
/// scores.
pub fn error_difference_surrogate(model: &Model, candidate: &Instance, history: &[f64]) -> f64 {
    let mut gap = SurrogateGap::new();
    for &s in history {
        gap.observe(s);
    }
    gap.observe(model.score(&candidate.features))
}

/// One sequential IWAL pass over the training order.
///
/// Example `k` (1-based) is labelled with probability `P_k`; the coin is the
/// uniform keyed by `(config.seed, k - 1)`. Labelled examples feed the
/// selector (or the grid errors) with importance `1/P_k`; the stored weight
/// is `1/P_k`, or 1 when `use_weights` is off.
pub fn select_iwal(train: &Dataset, config: &IwalConfig, use_weights: bool) -> Result<SelectionResult> {
    if !(config.c0.is_finite() && config.c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("c0 must be > 0, got {}", config.c0)));
    }
    let mut selector = OnlineLinear::new(train.dim(), config.rate);
    let mut surrogate = SurrogateGap::new();
    let mut grid = match config.gk_mode {
        GkMode::ExactErm => Some(GridErrors::new(HypothesisGrid::for_dataset(train, config.grid_resolution)?)),
        GkMode::Surrogate => None,
    };

    let mut selected = Vec::new();
    let mut selected_indices = Vec::new();
    let mut trace = Vec::with_capacity(train.len());
    for (i, inst) in train.instances().iter().enumerate() {
        let k = i + 1;
        let g = match &grid {
            Some(errors) => errors.difference(&inst.features)?,
            None => surrogate.observe(selector.score(&inst.features)),
        };
        let probability = selection_probability_with_base(g, k, config.c0, config.log_base);
        let coin = uniform_at(config.seed, i as u64) < probability;
        let mut weight = 0.0;
        if coin {
            let importance = 1.0 / probability;
            weight = if use_weights { importance } else { 1.0 };
            match &mut grid {
                Some(errors) => errors.add(&WeightedInstance::new(inst.clone(), importance))?,
                None => selector.update(&inst.features, inst.label, importance)?,
            }
            selected.push(WeightedInstance::new(inst.clone(), weight));
            selected_indices.push(i);
        }
        trace.push(TraceRow { index: i, g, probability, coin, selected: coin, weight });
    }
    Ok(SelectionResult {
        strategy: if use_weights { Strategy::Iwal } else { Strategy::IwalNoWeights },
        c0: Some(config.c0),
        seed: config.seed,
        selected,
        selected_indices,
        trace,
    })
}

/// Reruns the selection a trace header describes.
pub fn replay_selection(train: &Dataset, header: &TraceHeader) -> Result<SelectionResult> {
    let missing = |what: &str| Error::InvalidArgument(format!("trace header lacks {what}"));
    match header.strategy {
        Strategy::Random => select_random(train, header.n.ok_or_else(|| missing("n"))?),
        Strategy::Uncertainty => {
            let model = fit_ranking_model(train, header.ranking_rate.unwrap_or_default())?;
            select_uncertainty(train, header.n.ok_or_else(|| missing("n"))?, &model)
        }
        Strategy::Iwal | Strategy::IwalNoWeights => {
            let config = header.iwal.as_ref().ok_or_else(|| missing("iwal settings"))?;
            select_iwal(train, config, header.strategy == Strategy::Iwal)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_circle, gen_uniform_line, Label};
    use proptest::prelude::*;

    #[test]
    fn probability_hand_values() {
        assert_eq!(selection_probability(0.0, 50, 1e-6), 1.0);
        assert_eq!(selection_probability(0.7, 1, 1e-6), 1.0);
        let expected = 2.0 * 0.01 * 101f64.ln() / 100.0;
        assert!((selection_probability(1.0, 101, 0.01) - expected).abs() < 1e-15);
        assert!((expected - 9.23e-4).abs() < 1e-6);
        assert_eq!(selection_probability(0.5, 10, 1e3), 1.0);
        let two = selection_probability_with_base(1.0, 8, 0.01, LogBase::Two);
        assert!((two - 2.0 * 0.01 * 3.0 / 7.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn probability_monotonicity(g in 0.01f64..50.0, dg in 0.0f64..10.0, k in 3usize..100_000, c0 in 1e-9f64..10.0) {
            let p = selection_probability(g, k, c0);
            prop_assert!(p > 0.0 && p <= 1.0);
            prop_assert!(selection_probability(g + dg, k, c0) <= p);
            prop_assert!(selection_probability(g, k + 1, c0) <= p);
            prop_assert!(selection_probability(g, k, c0 * 2.0) >= p);
        }
    }

    fn pool(n: usize, seed: u64) -> Dataset {
        gen_uniform_line(n, seed).unwrap()
    }

    #[test]
    fn random_takes_prefix() {
        let ds = pool(20, 1);
        let all = select_random(&ds, 20).unwrap();
        assert_eq!(all.selected.iter().map(|s| s.instance.clone()).collect::<Vec<_>>(), ds.instances());
        assert!(select_random(&ds, 0).unwrap().is_empty());
        assert!(select_random(&ds, 21).is_err());
        assert_eq!(select_random(&ds, 7).unwrap(), select_random(&ds, 7).unwrap());
    }

    #[test]
    fn uncertainty_concentrates_near_boundary() {
        let ds = pool(1000, 4);
        let model = fit_ranking_model(&ds, LearningRate::default()).unwrap();
        let sel = select_uncertainty(&ds, 10, &model).unwrap();
        let mut abs: Vec<f64> = ds.instances().iter().map(|i| i.features[0].abs()).collect();
        abs.sort_by(f64::total_cmp);
        let p5 = abs[50];
        let max_sel = sel.selected.iter().map(|s| s.instance.features[0].abs()).fold(0.0, f64::max);
        assert!(max_sel < p5, "{max_sel} vs {p5}");
        assert_eq!(select_uncertainty(&ds, 1000, &model).unwrap().len(), 1000);
    }

    #[test]
    fn uncertainty_ties_go_to_lower_index() {
        let ds = Dataset::new(
            "t",
            vec![
                Instance::new(vec![1.0], Label::Positive),
                Instance::new(vec![-1.0], Label::Negative),
                Instance::new(vec![0.5], Label::Positive),
            ],
        )
        .unwrap();
        let model = Model::linear(crate::learners::ModelKind::OnlineLinear, vec![1.0], 0.0);
        let sel = select_uncertainty(&ds, 2, &model).unwrap();
        assert_eq!(sel.selected_indices, vec![2, 0]);
    }

    #[test]
    fn huge_c0_selects_everything_with_unit_weights() {
        let ds = pool(200, 9);
        let sel = select_iwal(&ds, &IwalConfig::new(1e12, 3), true).unwrap();
        assert_eq!(sel.len(), 200);
        assert!(sel.selected.iter().all(|s| s.weight == 1.0));
        let random = select_random(&ds, 200).unwrap();
        assert_eq!(sel.selected, random.selected);
    }

    #[test]
    fn trace_invariants() {
        let ds = pool(500, 2);
        for use_weights in [true, false] {
            let sel = select_iwal(&ds, &IwalConfig::new(0.1, 5), use_weights).unwrap();
            assert!(sel.len() < 500);
            for row in &sel.trace {
                assert!(row.probability > 0.0 && row.probability <= 1.0);
                if row.selected {
                    if use_weights {
                        assert!((row.weight * row.probability - 1.0).abs() <= 2.0 * f64::EPSILON);
                    } else {
                        assert_eq!(row.weight, 1.0);
                    }
                } else {
                    assert_eq!(row.weight, 0.0);
                }
            }
        }
    }

    #[test]
    fn weights_flag_only_changes_stored_weights() {
        let ds = pool(300, 8);
        let cfg = IwalConfig::new(0.05, 1);
        let a = select_iwal(&ds, &cfg, true).unwrap();
        let b = select_iwal(&ds, &cfg, false).unwrap();
        assert_eq!(a.selected_indices, b.selected_indices);
        for (ra, rb) in a.trace.iter().zip(&b.trace) {
            assert_eq!(ra.probability, rb.probability);
        }
    }

    #[test]
    fn exact_mode_runs_on_two_dimensions() {
        let ds = gen_circle(300, 0.01, 4).unwrap();
        let mut cfg = IwalConfig::new(0.01, 2);
        cfg.gk_mode = GkMode::ExactErm;
        cfg.grid_resolution = 24;
        let sel = select_iwal(&ds, &cfg, true).unwrap();
        assert!(!sel.is_empty() && sel.len() < 300);
        assert_eq!(sel.trace[0].probability, 1.0);
    }

    #[test]
    fn surrogate_gap_properties() {
        let model = Model::linear(crate::learners::ModelKind::OnlineLinear, vec![2.0], 0.0);
        let history = [0.5, 1.5];
        let at = |x: f64| error_difference_surrogate(&model, &Instance::new(vec![x], Label::Positive), &history);
        assert_eq!(at(0.0), 0.0);
        assert!(at(0.8) > at(0.3));
        assert!((at(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(error_difference_surrogate(&model, &Instance::new(vec![1.0], Label::Positive), &[]), 0.0);
    }

    #[test]
    fn replay_reproduces_selection() {
        let ds = pool(200, 6);
        let cfg = IwalConfig::new(0.2, 77);
        let header = TraceHeader::for_iwal(&cfg, true);
        assert_eq!(replay_selection(&ds, &header).unwrap(), select_iwal(&ds, &cfg, true).unwrap());
    }
}

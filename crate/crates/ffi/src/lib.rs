//! C ABI for reuselab.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`ReuselabStatus`]; the message of the most recent failure on the calling
//! thread is available from [`reuselab_last_error`]. Panics are caught and
//! reported as [`ReuselabStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use reuselab::datasets::{load_csv, CsvSchema, Dataset, Instance, Label, LabelColumn};
use reuselab::experiments::{run_to_dir, DatasetSpec, ExperimentConfig};
use reuselab::learners::{fit_consumer, zero_one_error, ConsumerParams, Model, ModelKind, WeightedInstance};
use reuselab::selection::{select_iwal, selection_probability, IwalConfig, SelectionResult};
use reuselab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReuselabStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    DimensionMismatch = 3,
    MissingClass = 4,
    SingularData = 5,
    Convergence = 6,
    DegenerateGrid = 7,
    EmptyCell = 8,
    Config = 9,
    Parse = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<&Error> for ReuselabStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Self::InvalidArgument,
            Error::DimensionMismatch { .. } => Self::DimensionMismatch,
            Error::MissingClass { .. } | Error::SingleClass { .. } => Self::MissingClass,
            Error::SingularData(_) => Self::SingularData,
            Error::Convergence { .. } => Self::Convergence,
            Error::DegenerateGrid => Self::DegenerateGrid,
            Error::EmptyCell(_) => Self::EmptyCell,
            Error::Config(_) => Self::Config,
            Error::Parse { .. } | Error::UnknownCategory { .. } => Self::Parse,
            Error::MissingFile { .. } | Error::Io(_) | Error::Csv(_) => Self::Io,
        }
    }
}

/// Opaque labelled dataset.
pub struct ReuselabDataset(Dataset);

/// Opaque trained model.
pub struct ReuselabModel(Model);

/// Opaque IWAL selection over a dataset.
pub struct ReuselabSelection(SelectionResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

struct Failure(ReuselabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn fail(status: ReuselabStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `body`, recording any failure or panic for [`reuselab_last_error`].
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> ReuselabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            ReuselabStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside reuselab".into());
            ReuselabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(ReuselabStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ReuselabStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(ReuselabStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(ReuselabStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ReuselabStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next reuselab call on the same thread.
#[no_mangle]
pub extern "C" fn reuselab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn reuselab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a synthetic dataset. `kind` is `uniform-line`,
/// `four-cluster-line` or `circle`; `circle_prob` is ignored for the line
/// generators.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_generate(
    kind: *const c_char,
    n: usize,
    circle_prob: f64,
    seed: u64,
    out: *mut *mut ReuselabDataset,
) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = match str_arg(kind, "kind")? {
            "uniform-line" => DatasetSpec::UniformLine { n },
            "four-cluster-line" => DatasetSpec::FourClusterLine { n },
            "circle" => DatasetSpec::Circle { n, circle_prob },
            other => return Err(fail(ReuselabStatus::InvalidArgument, format!("unknown generator {other:?}"))),
        };
        *out = Box::into_raw(Box::new(ReuselabDataset(spec.build(seed)?)));
        Ok(())
    })
}

/// Builds a dataset from a row-major `n x dim` feature matrix and labels in
/// {-1, +1}.
///
/// # Safety
/// `features` must hold `n * dim` values, `labels` `n` values.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_from_arrays(
    features: *const f64,
    labels: *const i8,
    n: usize,
    dim: usize,
    out: *mut *mut ReuselabDataset,
) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let total = n.checked_mul(dim).ok_or_else(|| fail(ReuselabStatus::InvalidArgument, "n * dim overflows"))?;
        let features = slice_arg(features, total, "features")?;
        let labels = slice_arg(labels, n, "labels")?;
        let instances = (0..n)
            .map(|i| Ok(Instance::new(features[i * dim..(i + 1) * dim].to_vec(), Label::from_i8(labels[i])?)))
            .collect::<Result<Vec<_>, Error>>()?;
        *out = Box::into_raw(Box::new(ReuselabDataset(Dataset::new("arrays", instances)?)));
        Ok(())
    })
}

/// Loads a CSV with a header row; every non-label column is categorical
/// unless listed in `numeric_columns` (comma-separated, may be null).
/// `positive` is a comma-separated list of label values mapped to +1.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    positive: *const c_char,
    numeric_columns: *const c_char,
    out: *mut *mut ReuselabDataset,
) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let label = LabelColumn::Name(str_arg(label_column, "label_column")?.to_string());
        let positive: Vec<String> = str_arg(positive, "positive")?.split(',').map(str::to_string).collect();
        let mut schema = CsvSchema::default();
        if !numeric_columns.is_null() {
            for column in str_arg(numeric_columns, "numeric_columns")?.split(',').filter(|c| !c.is_empty()) {
                schema.columns.insert(column.to_string(), reuselab::datasets::ColumnKind::Numeric);
            }
        }
        *out = Box::into_raw(Box::new(ReuselabDataset(load_csv(Path::new(path), &label, &positive, &schema)?)));
        Ok(())
    })
}

/// Number of instances; 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_len(dataset: *const ReuselabDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// Feature dimension; 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_dim(dataset: *const ReuselabDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.dim())
}

/// Copies features (row-major) and labels into caller buffers of at least
/// `len * dim` and `len` elements.
///
/// # Safety
/// Buffers must be writable for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_copy(
    dataset: *const ReuselabDataset,
    features: *mut f64,
    features_len: usize,
    labels: *mut i8,
    labels_len: usize,
) -> ReuselabStatus {
    guard(|| {
        let d = &ref_arg(dataset, "dataset")?.0;
        if features_len < d.len() * d.dim() || labels_len < d.len() {
            return Err(fail(ReuselabStatus::BufferTooSmall, "output buffers are too small"));
        }
        if features.is_null() || labels.is_null() {
            return Err(fail(ReuselabStatus::NullPointer, "output buffer is null"));
        }
        for (i, inst) in d.instances().iter().enumerate() {
            ptr::copy_nonoverlapping(inst.features.as_ptr(), features.add(i * d.dim()), d.dim());
            *labels.add(i) = inst.label.as_i8();
        }
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reuselab_dataset_free(dataset: *mut ReuselabDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// IWAL selection probability with the natural logarithm.
#[no_mangle]
pub extern "C" fn reuselab_selection_probability(g: f64, k: usize, c0: f64) -> f64 {
    selection_probability(g, k, c0)
}

/// One IWAL pass over `dataset` in stored order with default selector
/// settings. `use_weights` = 0 gives the no-weights variant.
///
/// # Safety
/// `dataset` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn reuselab_select_iwal(
    dataset: *const ReuselabDataset,
    c0: f64,
    seed: u64,
    use_weights: i32,
    out: *mut *mut ReuselabSelection,
) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = &ref_arg(dataset, "dataset")?.0;
        let sel = select_iwal(d, &IwalConfig::new(c0, seed), use_weights != 0)?;
        *out = Box::into_raw(Box::new(ReuselabSelection(sel)));
        Ok(())
    })
}

/// Number of selected examples; 0 for a null handle.
///
/// # Safety
/// `selection` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn reuselab_selection_len(selection: *const ReuselabSelection) -> usize {
    selection.as_ref().map_or(0, |s| s.0.len())
}

/// Copies selected dataset indices and their weights into caller buffers of
/// at least `reuselab_selection_len` elements.
///
/// # Safety
/// Buffers must be writable for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn reuselab_selection_copy(
    selection: *const ReuselabSelection,
    indices: *mut usize,
    weights: *mut f64,
    capacity: usize,
) -> ReuselabStatus {
    guard(|| {
        let s = &ref_arg(selection, "selection")?.0;
        if capacity < s.len() {
            return Err(fail(ReuselabStatus::BufferTooSmall, format!("need {} elements", s.len())));
        }
        if indices.is_null() || weights.is_null() {
            return Err(fail(ReuselabStatus::NullPointer, "output buffer is null"));
        }
        for (i, (&index, w)) in s.selected_indices.iter().zip(&s.selected).enumerate() {
            *indices.add(i) = index;
            *weights.add(i) = w.weight;
        }
        Ok(())
    })
}

/// # Safety
/// `selection` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reuselab_selection_free(selection: *mut ReuselabSelection) {
    if !selection.is_null() {
        drop(Box::from_raw(selection));
    }
}

/// Trains a consumer (`online-linear`, `least-squares`, `lda`, `qda`,
/// `svm-linear`, `svm-poly3`, `svm-rbf`) with default hyperparameters. With
/// a selection, trains on the selected examples of `dataset` at their
/// weights; with a null selection, on all of `dataset` at weight 1.
///
/// # Safety
/// `kind` must be NUL-terminated, handles live or null as documented.
#[no_mangle]
pub unsafe extern "C" fn reuselab_model_fit(
    kind: *const c_char,
    dataset: *const ReuselabDataset,
    selection: *const ReuselabSelection,
    out: *mut *mut ReuselabModel,
) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind: ModelKind = str_arg(kind, "kind")?.parse()?;
        let d = &ref_arg(dataset, "dataset")?.0;
        let samples: Vec<WeightedInstance> = match selection.as_ref() {
            Some(s) => s.0.reindexed(d)?,
            None => d.instances().iter().cloned().map(WeightedInstance::unit).collect(),
        };
        *out = Box::into_raw(Box::new(ReuselabModel(fit_consumer(kind, &samples, &ConsumerParams::default())?)));
        Ok(())
    })
}

/// Real-valued score of one feature vector; the prediction is its sign
/// with ties to +1.
///
/// # Safety
/// `x` must hold `dim` values and `score` be writable.
#[no_mangle]
pub unsafe extern "C" fn reuselab_model_score(
    model: *const ReuselabModel,
    x: *const f64,
    dim: usize,
    score: *mut f64,
) -> ReuselabStatus {
    guard(|| {
        let m = &ref_arg(model, "model")?.0;
        let score = out_arg(score, "score")?;
        if dim != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), actual: dim }.into());
        }
        *score = m.score(slice_arg(x, dim, "x")?);
        Ok(())
    })
}

/// Zero-one error of `model` on `dataset`.
///
/// # Safety
/// Handles must be live and `error` writable.
#[no_mangle]
pub unsafe extern "C" fn reuselab_model_error(
    model: *const ReuselabModel,
    dataset: *const ReuselabDataset,
    error: *mut f64,
) -> ReuselabStatus {
    guard(|| {
        let e = out_arg(error, "error")?;
        *e = zero_one_error(&ref_arg(model, "model")?.0, &ref_arg(dataset, "dataset")?.0)?;
        Ok(())
    })
}

/// Serialises a model to text. Release the string with
/// [`reuselab_string_free`].
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn reuselab_model_to_text(model: *const ReuselabModel, out: *mut *mut c_char) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = ref_arg(model, "model")?.0.to_text();
        *out = CString::new(text).map_err(|e| fail(ReuselabStatus::InvalidArgument, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Parses text produced by [`reuselab_model_to_text`].
///
/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn reuselab_model_from_text(text: *const c_char, out: *mut *mut ReuselabModel) -> ReuselabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(ReuselabModel(Model::from_text(str_arg(text, "text")?)?)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reuselab_model_free(model: *mut ReuselabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reuselab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs an experiment config (TOML) and writes its outputs to `out_dir`,
/// as `reuselab run` does.
///
/// # Safety
/// Paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn reuselab_run_config(config_path: *const c_char, out_dir: *const c_char, jobs: usize) -> ReuselabStatus {
    guard(|| {
        let (config, text) = ExperimentConfig::load(Path::new(str_arg(config_path, "config_path")?))?;
        run_to_dir(&config, Some(text), Path::new(str_arg(out_dir, "out_dir")?), jobs.max(1), None)?;
        Ok(())
    })
}

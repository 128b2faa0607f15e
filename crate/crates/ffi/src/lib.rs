//! C ABI over `miqa-pns`.
//!
//! Datasets and models are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PnsStatus`]; on failure the
//! message is available from [`pns_last_error`] on the same thread until the
//! next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use miqa_pns::nn::checkpoint::{self, CheckpointError, LoadMode};
use miqa_pns::nn::{ModelTriple, NnError};
use miqa_pns::objective::{self, Mode};
use miqa_pns::synthetic::{make_split, Dataset, GeneratorConfig, Scenario, SyntheticError};
use miqa_pns::train::{self, LabeledSet, TrainConfig, TrainError};

pub const PNS_MODE_BASELINE: u32 = 0;
pub const PNS_MODE_MIQA_PNS: u32 = 1;

pub const PNS_SCENARIO_IID: u32 = 0;
pub const PNS_SCENARIO_LIMITED_HOLDOUT: u32 = 1;
pub const PNS_SCENARIO_POOR_HOLDOUT: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// A file is not a valid dataset or checkpoint.
    Format = 4,
    /// Training produced a non-finite loss.
    Numerical = 5,
    Panic = 6,
}

/// Opaque dataset handle.
pub struct PnsDataset(Dataset);

/// Opaque model handle.
pub struct PnsModel(ModelTriple);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnsMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub deficient_accuracy: f64,
    /// Meaningful only when `has_pns` is nonzero.
    pub pns_proxy: f64,
    pub mono_violation: f64,
    pub has_pns: u8,
    pub n_samples: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnsTrainOptions {
    /// `PNS_MODE_BASELINE` or `PNS_MODE_MIQA_PNS`.
    pub mode: u32,
    /// One of the `PNS_SCENARIO_*` values; selects the train/val split.
    pub scenario: u32,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PnsStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(PnsStatus::InvalidArgument, msg.into())
    }
}

impl From<SyntheticError> for Failure {
    fn from(e: SyntheticError) -> Self {
        let status = match e {
            SyntheticError::Io(_) => PnsStatus::Io,
            SyntheticError::BadMagic
            | SyntheticError::UnsupportedVersion(_)
            | SyntheticError::Truncated
            | SyntheticError::Corrupt(_) => PnsStatus::Format,
            _ => PnsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        let status = match e {
            CheckpointError::Io(_) => PnsStatus::Io,
            _ => PnsStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        let status = match e {
            TrainError::NonFinite { .. } => PnsStatus::Numerical,
            _ => PnsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<NnError> for Failure {
    fn from(e: NnError) -> Self {
        Failure::invalid(e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PnsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            PnsStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a pointer obtained from this
    // library (or a valid C object) that outlives the call.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(PnsStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: as for `non_null`; the caller owns the pointed-to storage.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(PnsStatus::NullPointer, format!("{what} is null")))
}

fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure(PnsStatus::NullPointer, "path is null".into()));
    }
    // SAFETY: non-null and NUL-terminated per the C contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::invalid("path is not valid UTF-8"))
}

fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(PnsStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn mode(code: u32) -> Result<Mode, Failure> {
    match code {
        PNS_MODE_BASELINE => Ok(Mode::Baseline),
        PNS_MODE_MIQA_PNS => Ok(Mode::MiqaPns),
        other => Err(Failure::invalid(format!("unknown mode {other}"))),
    }
}

fn scenario_from(code: u32) -> Result<Scenario, Failure> {
    Scenario::ALL
        .get(code as usize)
        .copied()
        .ok_or_else(|| Failure::invalid(format!("unknown scenario {code}")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pns_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library defaults: miqa-pns mode, iid split, lambda 1, lr 1e-4, batch 32,
/// at most 200 epochs, patience 15, seed 0.
#[no_mangle]
pub extern "C" fn pns_train_options_default() -> PnsTrainOptions {
    let d = TrainConfig::default();
    PnsTrainOptions {
        mode: PNS_MODE_MIQA_PNS,
        scenario: PNS_SCENARIO_IID,
        lambda: d.lambda,
        lr: d.lr,
        batch_size: d.batch_size,
        max_epochs: d.max_epochs,
        patience: d.patience,
        seed: d.seed,
    }
}

/// Generates `n` synthetic images of `height` x `width` with the default
/// grade mix.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn pns_dataset_generate(
    n: usize,
    height: usize,
    width: usize,
    seed: u64,
    out: *mut *mut PnsDataset,
) -> PnsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = Dataset::generate(&GeneratorConfig {
            n,
            height,
            width,
            seed,
            ..GeneratorConfig::default()
        })?;
        *out = Box::into_raw(Box::new(PnsDataset(ds)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` as for [`pns_dataset_generate`].
#[no_mangle]
pub unsafe extern "C" fn pns_dataset_load(path: *const c_char, out: *mut *mut PnsDataset) -> PnsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = Dataset::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(PnsDataset(ds)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pns_dataset_save(dataset: *const PnsDataset, path: *const c_char) -> PnsStatus {
    guard(|| {
        non_null(dataset, "dataset")?.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Number of images, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pns_dataset_len(dataset: *const PnsDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.0.len())
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pns_dataset_free(dataset: *mut PnsDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

fn split_sets(ds: &Dataset, scenario: Scenario, seed: u64) -> Result<[LabeledSet; 3], Failure> {
    let split = make_split(&ds.grades(), scenario, seed)?;
    Ok([&split.train, &split.val, &split.test].map(|idx| LabeledSet::from_dataset(ds, idx)))
}

/// Trains on the dataset's train/validation split with the default network
/// sizes and returns the best-epoch model (with `E^c`).
///
/// # Safety
/// `dataset` must be a live handle, `options` null (defaults) or valid, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pns_train(
    dataset: *const PnsDataset,
    options: *const PnsTrainOptions,
    out: *mut *mut PnsModel,
) -> PnsStatus {
    guard(|| {
        let ds = &non_null(dataset, "dataset")?.0;
        let out = out_ptr(out, "out")?;
        let o = unsafe { options.as_ref() }.copied().unwrap_or_else(|| pns_train_options_default());
        let config = TrainConfig {
            mode: mode(o.mode)?,
            lambda: o.lambda,
            lr: o.lr,
            batch_size: o.batch_size,
            max_epochs: o.max_epochs,
            patience: o.patience,
            seed: o.seed,
            ..TrainConfig::default()
        };
        let [train_set, val_set, _] = split_sets(ds, scenario_from(o.scenario)?, o.seed)?;
        let outcome = train::train(&config, &train_set, &val_set)?;
        *out = Box::into_raw(Box::new(PnsModel(outcome.model)));
        Ok(())
    })
}

/// Loads a checkpoint, keeping `E^c` when the file has it.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pns_model_load(path: *const c_char, out: *mut *mut PnsModel) -> PnsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let model = checkpoint::load(path_arg(path)?, LoadMode::Full)?;
        *out = Box::into_raw(Box::new(PnsModel(model)));
        Ok(())
    })
}

/// Writes a checkpoint; a nonzero `inference_only` omits `E^c`.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pns_model_save(model: *const PnsModel, path: *const c_char, inference_only: u8) -> PnsStatus {
    guard(|| {
        let m = &non_null(model, "model")?.0;
        let path = path_arg(path)?;
        if inference_only != 0 {
            checkpoint::save(&m.clone().into_inference(), path)?;
        } else {
            checkpoint::save(m, path)?;
        }
        Ok(())
    })
}

/// 1 if the model still carries `E^c`, 0 otherwise (or for null).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pns_model_has_complement(model: *const PnsModel) -> u8 {
    unsafe { model.as_ref() }.map_or(0, |m| u8::from(m.0.complement.is_some()))
}

/// Input width (pixels per image) the model expects, or 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pns_model_input_dim(model: *const PnsModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.input_dim())
}

/// Writes `batch * 2` logits (Good, Deficient per row) of `F(E(x))` for
/// `batch` row-major images of `input_dim` pixels.
///
/// # Safety
/// `inputs` must hold `batch * input_dim` doubles and `logits` room for
/// `batch * 2`.
#[no_mangle]
pub unsafe extern "C" fn pns_model_predict(
    model: *const PnsModel,
    inputs: *const f64,
    batch: usize,
    input_dim: usize,
    logits: *mut f64,
) -> PnsStatus {
    guard(|| {
        let m = &non_null(model, "model")?.0;
        if input_dim != m.input_dim() {
            return Err(Failure::invalid(format!(
                "input_dim {input_dim} does not match model input {}",
                m.input_dim()
            )));
        }
        let n = batch
            .checked_mul(input_dim)
            .ok_or_else(|| Failure::invalid("batch * input_dim overflows"))?;
        let x = slice(inputs, n, "inputs")?;
        if batch == 0 {
            return Ok(());
        }
        if logits.is_null() {
            return Err(Failure(PnsStatus::NullPointer, "logits is null".into()));
        }
        let z = m.predict(x, batch)?;
        // SAFETY: the caller provides room for `batch * 2` doubles.
        unsafe { std::slice::from_raw_parts_mut(logits, batch * 2) }.copy_from_slice(&z);
        Ok(())
    })
}

/// Evaluates on the test split of `scenario` under `seed`. PNS fields are
/// filled only when the model has `E^c`.
///
/// # Safety
/// `model` and `dataset` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pns_evaluate(
    model: *const PnsModel,
    dataset: *const PnsDataset,
    scenario: u32,
    seed: u64,
    out: *mut PnsMetrics,
) -> PnsStatus {
    guard(|| {
        let m = &non_null(model, "model")?.0;
        let ds = &non_null(dataset, "dataset")?.0;
        let out = out_ptr(out, "out")?;
        let [_, _, test_set] = split_sets(ds, scenario_from(scenario)?, seed)?;
        let e = train::evaluate(m, &test_set)?;
        *out = PnsMetrics {
            precision: e.precision,
            recall: e.recall,
            f1: e.f1,
            deficient_accuracy: e.deficient_accuracy,
            pns_proxy: e.pns_proxy.unwrap_or(f64::NAN),
            mono_violation: e.mono_violation.unwrap_or(f64::NAN),
            has_pns: u8::from(e.pns_proxy.is_some()),
            n_samples: e.n_samples,
        };
        Ok(())
    })
}

/// `mean(p_good_h) - mean(p_good_hbar)` over `n` probabilities.
///
/// # Safety
/// Both arrays must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pns_pns_estimate(
    p_good_h: *const f64,
    p_good_hbar: *const f64,
    n: usize,
    out: *mut f64,
) -> PnsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (p, q) = (slice(p_good_h, n, "p_good_h")?, slice(p_good_hbar, n, "p_good_hbar")?);
        *out = objective::pns_estimate(p, q).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

/// `mean((1 - p_good_h) * p_good_hbar)` over `n` probabilities.
///
/// # Safety
/// As for [`pns_pns_estimate`].
#[no_mangle]
pub unsafe extern "C" fn pns_monotonicity_violation(
    p_good_h: *const f64,
    p_good_hbar: *const f64,
    n: usize,
    out: *mut f64,
) -> PnsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (p, q) = (slice(p_good_h, n, "p_good_h")?, slice(p_good_hbar, n, "p_good_hbar")?);
        *out = objective::monotonicity_violation(p, q).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pns_model_free(model: *mut PnsModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

//! C ABI over the `fedcgau` core.
//!
//! Every fallible function returns an [`FcStatus`]; on failure a message is
//! available from [`fc_last_error`] on the same thread. Datasets and models
//! are opaque handles created by `*_read`/`*_load`/constructor functions and
//! released with the matching `*_free`. Panics never cross the boundary;
//! they surface as [`FcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fedcgau::data::{synth_blobs, BlobSpec, EmbeddingDataset};
use fedcgau::experiment::{read_dataset, write_dataset};
use fedcgau::hetero::{frechet_distance_sq, gamma_from_assignment, summarize};
use fedcgau::linalg::Matrix;
use fedcgau::nn::{load_checkpoint, save_checkpoint, ClassifierModel, ClientOneHot};
use fedcgau::simclients::{shuffle_assignment, simulate_clients};
use fedcgau::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Numerical = 4,
    InsufficientData = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque labelled embedding dataset.
pub struct FcDataset {
    inner: EmbeddingDataset,
}

/// Opaque trained classifier.
pub struct FcModel {
    inner: ClassifierModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: FcStatus,
    message: String,
}

impl Failure {
    fn new(status: FcStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension(_) => FcStatus::Dimension,
            Error::NotSymmetric { .. } | Error::NotPsd { .. } => FcStatus::Numerical,
            Error::Infeasible(_)
            | Error::InsufficientData(_)
            | Error::UndefinedMetric(_)
            | Error::Stratification { .. } => FcStatus::InsufficientData,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => FcStatus::Parse,
            Error::Io(_) | Error::File { .. } => FcStatus::Io,
            _ => FcStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FcStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(FcStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => FcStatus::Ok,
        Err(failure) => {
            set_last_error(&failure.message);
            failure.status
        }
    }
}

fn null(name: &str) -> Failure {
    Failure::new(FcStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null(name))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::new(FcStatus::InvalidArgument, format!("`{name}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn check_capacity(have: usize, need: usize, name: &str) -> Result<(), Failure> {
    if have < need {
        return Err(Failure::new(
            FcStatus::BufferTooSmall,
            format!("`{name}` holds {have} values, {need} needed"),
        ));
    }
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn row_major(data: &[f64], rows: usize, cols: usize) -> Result<Matrix, Failure> {
    Ok(Matrix::from_vec(rows, cols, data.to_vec())?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `fc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads a `.emb1` or `.csv` dataset.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_read(path: *const c_char, out: *mut *mut FcDataset) -> FcStatus {
    guard(|| {
        let path = unsafe { path_arg(path, "path") }?;
        let inner = read_dataset(&path)?;
        unsafe { store(out, FcDataset { inner }) }
    })
}

/// Writes a dataset; the format follows the extension (`.emb1` or `.csv`).
///
/// # Safety
/// `dataset` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_write(dataset: *const FcDataset, path: *const c_char) -> FcStatus {
    guard(|| {
        let ds = unsafe { deref(dataset, "dataset") }?;
        let path = unsafe { path_arg(path, "path") }?;
        Ok(write_dataset(&ds.inner, &path)?)
    })
}

/// Builds a dataset from row-major `n × dim` features and `n` labels.
///
/// # Safety
/// `features` must hold `n · dim` values and `labels` `n` values.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_from_arrays(
    features: *const f64,
    labels: *const u32,
    n: usize,
    dim: usize,
    num_classes: usize,
    out: *mut *mut FcDataset,
) -> FcStatus {
    guard(|| {
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(FcStatus::InvalidArgument, "n · dim overflows"))?;
        let x = unsafe { slice_arg(features, len, "features") }?;
        let y = unsafe { slice_arg(labels, n, "labels") }?;
        let inner = EmbeddingDataset::new(
            row_major(x, n, dim)?,
            y.iter().map(|&l| l as usize).collect(),
            num_classes,
        )?;
        unsafe { store(out, FcDataset { inner }) }
    })
}

/// Generates lattice blobs (see the core `synth_blobs`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_synth_blobs(
    num_classes: usize,
    blobs_per_class: usize,
    samples_per_blob: usize,
    dim: usize,
    separation: f64,
    spread: f64,
    seed: u64,
    out: *mut *mut FcDataset,
) -> FcStatus {
    guard(|| {
        let blobs = synth_blobs(&BlobSpec {
            num_classes,
            blobs_per_class,
            samples_per_blob,
            dim,
            separation,
            spread,
            seed,
        })?;
        unsafe {
            store(
                out,
                FcDataset {
                    inner: blobs.dataset,
                },
            )
        }
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_free(dataset: *mut FcDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Sample count, or 0 for null.
///
/// # Safety
/// `dataset` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_len(dataset: *const FcDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.inner.len())
}

/// Feature dimension, or 0 for null.
///
/// # Safety
/// `dataset` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_dim(dataset: *const FcDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.inner.dim())
}

/// Class count, or 0 for null.
///
/// # Safety
/// `dataset` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_num_classes(dataset: *const FcDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.inner.num_classes())
}

/// Copies row-major features into `out` (`capacity ≥ len · dim`).
///
/// # Safety
/// `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_features(
    dataset: *const FcDataset,
    out: *mut f64,
    capacity: usize,
) -> FcStatus {
    guard(|| {
        let ds = unsafe { deref(dataset, "dataset") }?;
        let src = ds.inner.features().as_slice();
        check_capacity(capacity, src.len(), "out")?;
        unsafe { slice_out(out, src.len(), "out") }?.copy_from_slice(src);
        Ok(())
    })
}

/// Copies labels into `out` (`capacity ≥ len`).
///
/// # Safety
/// `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_labels(
    dataset: *const FcDataset,
    out: *mut u32,
    capacity: usize,
) -> FcStatus {
    guard(|| {
        let ds = unsafe { deref(dataset, "dataset") }?;
        let labels = ds.inner.labels();
        check_capacity(capacity, labels.len(), "out")?;
        let dst = unsafe { slice_out(out, labels.len(), "out") }?;
        for (d, &l) in dst.iter_mut().zip(labels) {
            *d = l as u32;
        }
        Ok(())
    })
}

/// Squared Fréchet distance between the Gaussian summaries (mean, unbiased
/// covariance) of two row-major sample sets with `dim` columns.
///
/// # Safety
/// `x1` must hold `n1 · dim` values and `x2` `n2 · dim` values.
#[no_mangle]
pub unsafe extern "C" fn fc_frechet_distance_sq(
    x1: *const f64,
    n1: usize,
    x2: *const f64,
    n2: usize,
    dim: usize,
    out: *mut f64,
) -> FcStatus {
    guard(|| {
        let overflow = || Failure::new(FcStatus::InvalidArgument, "sample block size overflows");
        let a = unsafe { slice_arg(x1, n1.checked_mul(dim).ok_or_else(overflow)?, "x1") }?;
        let b = unsafe { slice_arg(x2, n2.checked_mul(dim).ok_or_else(overflow)?, "x2") }?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let sa = summarize(&row_major(a, n1, dim)?)?;
        let sb = summarize(&row_major(b, n2, dim)?)?;
        *out = frechet_distance_sq(&sa, &sb)?;
        Ok(())
    })
}

/// Γ of `dataset` in its full feature space under `assignment` (one client
/// id below `num_clients` per sample). `per_client` may be null; otherwise
/// it receives `num_clients` distances.
///
/// # Safety
/// `assignment` must hold `fc_dataset_len(dataset)` values and `per_client`,
/// when not null, `num_clients` values.
#[no_mangle]
pub unsafe extern "C" fn fc_gamma(
    dataset: *const FcDataset,
    assignment: *const u32,
    num_clients: usize,
    gamma: *mut f64,
    per_client: *mut f64,
) -> FcStatus {
    guard(|| {
        let ds = unsafe { deref(dataset, "dataset") }?;
        let a = unsafe { slice_arg(assignment, ds.inner.len(), "assignment") }?;
        let a: Vec<usize> = a.iter().map(|&c| c as usize).collect();
        let gamma = unsafe { gamma.as_mut() }.ok_or_else(|| null("gamma"))?;
        let report = gamma_from_assignment(ds.inner.features(), &a, num_clients)?;
        *gamma = report.gamma;
        if !per_client.is_null() {
            unsafe { slice_out(per_client, num_clients, "per_client") }?
                .copy_from_slice(&report.per_client);
        }
        Ok(())
    })
}

/// Simulated non-IID assignment of `dataset` to `num_clients` clients with a
/// `proportion` of samples reassigned uniformly at random.
///
/// # Safety
/// `assignment` must hold `capacity ≥ fc_dataset_len(dataset)` values.
#[no_mangle]
pub unsafe extern "C" fn fc_simulate_clients(
    dataset: *const FcDataset,
    num_clients: usize,
    proportion: f64,
    seed: u64,
    assignment: *mut u32,
    capacity: usize,
) -> FcStatus {
    guard(|| {
        let ds = unsafe { deref(dataset, "dataset") }?;
        check_capacity(capacity, ds.inner.len(), "assignment")?;
        let empty = ds.inner.subset(&[]);
        let sim = simulate_clients(&ds.inner, &empty, num_clients, seed)?;
        let shuffled = shuffle_assignment(&sim.train, proportion, seed)?;
        let dst = unsafe { slice_out(assignment, ds.inner.len(), "assignment") }?;
        for (d, &c) in dst.iter_mut().zip(&shuffled.assignment) {
            *d = c as u32;
        }
        Ok(())
    })
}

/// Loads a model checkpoint.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_model_load(path: *const c_char, out: *mut *mut FcModel) -> FcStatus {
    guard(|| {
        let path = unsafe { path_arg(path, "path") }?;
        let inner = load_checkpoint(&path)?;
        unsafe { store(out, FcModel { inner }) }
    })
}

/// Saves a model checkpoint.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fc_model_save(model: *const FcModel, path: *const c_char) -> FcStatus {
    guard(|| {
        let model = unsafe { deref(model, "model") }?;
        let path = unsafe { path_arg(path, "path") }?;
        Ok(save_checkpoint(&model.inner, &path)?)
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_model_free(model: *mut FcModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Expected input width, or 0 for null.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fc_model_input_dim(model: *const FcModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.input_dim())
}

/// Logits per sample (1 for binary tasks, C otherwise), or 0 for null.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fc_model_output_dim(model: *const FcModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.task().output_dim())
}

/// Client count of a conditioned model; 0 for unconditioned models or null.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fc_model_num_clients(model: *const FcModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.num_clients().unwrap_or(0))
}

/// Evaluation-mode logits for `n` row-major inputs, all from `client`.
/// Unconditioned models ignore `client`.
///
/// # Safety
/// `x` must hold `n · dim` values and `logits` `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fc_model_predict(
    model: *const FcModel,
    x: *const f64,
    n: usize,
    dim: usize,
    client: usize,
    logits: *mut f64,
    capacity: usize,
) -> FcStatus {
    guard(|| {
        let model = unsafe { deref(model, "model") }?;
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(FcStatus::InvalidArgument, "n · dim overflows"))?;
        let input = row_major(unsafe { slice_arg(x, len, "x") }?, n, dim)?;
        let h = match model.inner.num_clients() {
            Some(k) => ClientOneHot::new(client, k)?,
            None => ClientOneHot::new(0, 1)?,
        };
        let out = model.inner.predict(&input, h)?;
        let src = out.as_slice();
        check_capacity(capacity, src.len(), "logits")?;
        unsafe { slice_out(logits, src.len(), "logits") }?.copy_from_slice(src);
        Ok(())
    })
}

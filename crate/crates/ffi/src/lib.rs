//! C ABI over the `cospace` library.
//!
//! Handles are opaque heap objects released with their `_free` function.
//! Every fallible call returns a [`CospaceStatus`]; on failure the reason is
//! available from [`cospace_last_error`] on the same thread until the next
//! failing call. Matrices are passed feature-major per sample: sample `j` of a
//! `d × n` matrix occupies `x[j*d .. (j+1)*d]` (column-major).

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cospace::data::{onehot_encode, ModalityMatrix, PairedDataset};
use cospace::eval::{fit_model, FittedModel, Method, MethodParams, PipelineOptions};
use cospace::io::{load_dataset, load_model, save_model};
use cospace::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CospaceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numeric = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CospaceMethod {
    Raw = 0,
    CospaceL2 = 1,
    CospaceL1 = 2,
    Pjdr = 3,
    Lusma = 4,
    Lsma = 5,
}

impl From<CospaceMethod> for Method {
    fn from(m: CospaceMethod) -> Self {
        match m {
            CospaceMethod::Raw => Method::Raw,
            CospaceMethod::CospaceL2 => Method::CospaceL2,
            CospaceMethod::CospaceL1 => Method::CospaceL1,
            CospaceMethod::Pjdr => Method::Pjdr,
            CospaceMethod::Lusma => Method::Lusma,
            CospaceMethod::Lsma => Method::Lsma,
        }
    }
}

/// Method and hyperparameters; start from `cospace_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CospaceParams {
    pub method: CospaceMethod,
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub sigma: f64,
    pub max_iter: usize,
    pub zeta: f64,
    /// Non-zero: standardise each modality with training statistics.
    pub standardize: i32,
}

/// Opaque paired dataset.
pub struct CospaceDataset {
    inner: PairedDataset,
}

/// Opaque fitted model.
pub struct CospaceModel {
    inner: FittedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CospaceStatus {
    match e {
        Error::InvalidParameter { .. } | Error::LabelOutOfRange { .. } | Error::EmptyClass { .. } => {
            CospaceStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } | Error::SampleCountMismatch { .. } => CospaceStatus::DimensionMismatch,
        Error::NonFinite { .. }
        | Error::NonFiniteTerm(_)
        | Error::NotSymmetric(_)
        | Error::Singular(_)
        | Error::Degenerate(_) => CospaceStatus::Numeric,
        Error::Io(_) => CospaceStatus::Io,
        Error::Format(_) => CospaceStatus::Format,
    }
}

struct Failure(CospaceStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CospaceStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CospaceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CospaceStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            CospaceStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CospaceStatus::InvalidArgument, format!("{what} is not valid UTF-8")))?;
    Ok(Path::new(s))
}

fn checked_len(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure(CospaceStatus::InvalidArgument, "matrix size overflows".into()))
}

unsafe fn matrix(ptr: *const f64, rows: usize, cols: usize, id: u8, what: &str) -> Result<ModalityMatrix, Failure> {
    let data = slice(ptr, checked_len(rows, cols)?, what)?;
    Ok(ModalityMatrix::new(DMatrix::from_column_slice(rows, cols, data), id)?)
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cospace_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cospace_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn cospace_params_default(method: CospaceMethod) -> CospaceParams {
    let d = MethodParams::default();
    CospaceParams {
        method,
        dim: d.dim,
        alpha: d.alpha,
        beta: d.beta,
        k: d.k,
        sigma: d.sigma,
        max_iter: d.max_iter,
        zeta: d.zeta,
        standardize: 1,
    }
}

/// Copies paired data into a new dataset. `x1` is `d1 × n`, `x2` is `d2 × n`,
/// `labels` holds `n` class indices below `num_classes`.
#[no_mangle]
pub unsafe extern "C" fn cospace_dataset_new(
    x1: *const f64,
    d1: usize,
    x2: *const f64,
    d2: usize,
    labels: *const u32,
    n: usize,
    num_classes: usize,
    out: *mut *mut CospaceDataset,
) -> CospaceStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m1 = matrix(x1, d1, n, 1, "x1")?;
        let m2 = matrix(x2, d2, n, 2, "x2")?;
        let labels: Vec<usize> = slice(labels, n, "labels")?.iter().map(|&l| l as usize).collect();
        let enc = onehot_encode(&labels, num_classes)?;
        write_out(out, CospaceDataset {
            inner: PairedDataset::new(m1, m2, enc)?,
        });
        Ok(())
    })
}

/// Loads a dataset through a JSON manifest.
#[no_mangle]
pub unsafe extern "C" fn cospace_dataset_load(manifest: *const c_char, out: *mut *mut CospaceDataset) -> CospaceStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (_, data) = load_dataset(path_arg(manifest, "manifest")?)?;
        write_out(out, CospaceDataset { inner: data });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cospace_dataset_num_samples(data: *const CospaceDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.num_samples())
}

#[no_mangle]
pub unsafe extern "C" fn cospace_dataset_free(data: *mut CospaceDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Fits a model on both modalities of `data`.
#[no_mangle]
pub unsafe extern "C" fn cospace_fit(
    data: *const CospaceDataset,
    params: *const CospaceParams,
    out: *mut *mut CospaceModel,
) -> CospaceStatus {
    guard(|| {
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let method: Method = p.method.into();
        let mp = MethodParams {
            dim: p.dim,
            alpha: p.alpha,
            beta: p.beta,
            k: p.k,
            sigma: p.sigma,
            max_iter: p.max_iter,
            zeta: p.zeta,
            ..MethodParams::default()
        };
        let options = PipelineOptions {
            standardize: p.standardize != 0,
            ..PipelineOptions::default()
        };
        let model = fit_model(&data.inner, method, &mp, &options)?;
        write_out(out, CospaceModel { inner: model });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cospace_model_load(path: *const c_char, out: *mut *mut CospaceModel) -> CospaceStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = load_model(path_arg(path, "path")?)?;
        write_out(out, CospaceModel { inner: model });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cospace_model_save(model: *const CospaceModel, path: *const c_char) -> CospaceStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        save_model(path_arg(path, "path")?, &model.inner)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cospace_model_free(model: *mut CospaceModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn modality_dims(model: &FittedModel, modality: u8) -> Result<(usize, usize), Failure> {
    let input = match modality {
        1 => model.d1,
        2 => model.d2,
        _ => {
            return Err(Failure(
                CospaceStatus::InvalidArgument,
                format!("modality must be 1 or 2, got {modality}"),
            ))
        }
    };
    let output = model.projection.theta_block(modality).map_or(input, |t| t.nrows());
    Ok((input, output))
}

/// Input and feature dimensions for `modality`, plus the class count. Any
/// output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn cospace_model_dims(
    model: *const CospaceModel,
    modality: u8,
    input_dim: *mut usize,
    feature_dim: *mut usize,
    num_classes: *mut usize,
) -> CospaceStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        let (i, f) = modality_dims(model, modality)?;
        if let Some(p) = input_dim.as_mut() {
            *p = i;
        }
        if let Some(p) = feature_dim.as_mut() {
            *p = f;
        }
        if let Some(p) = num_classes.as_mut() {
            *p = model.num_classes;
        }
        Ok(())
    })
}

/// Maps `n` samples of one modality into the shared space. `out` must hold
/// `feature_dim * n` values; it is filled column-major.
#[no_mangle]
pub unsafe extern "C" fn cospace_project(
    model: *const CospaceModel,
    modality: u8,
    x: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> CospaceStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        let (input, feat) = modality_dims(model, modality)?;
        let needed = checked_len(feat, n)?;
        if out_len < needed {
            return Err(Failure(
                CospaceStatus::DimensionMismatch,
                format!("output buffer holds {out_len} values, {needed} needed"),
            ));
        }
        let xm = matrix(x, input, n, modality, "x")?;
        let z = model.features(modality, &xm)?;
        if needed > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            std::slice::from_raw_parts_mut(out, needed).copy_from_slice(z.as_slice());
        }
        Ok(())
    })
}

/// Predicts class indices for `n` samples of one modality into `out[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn cospace_predict(
    model: *const CospaceModel,
    modality: u8,
    x: *const f64,
    n: usize,
    out: *mut u32,
) -> CospaceStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        let (input, _) = modality_dims(model, modality)?;
        let xm = matrix(x, input, n, modality, "x")?;
        let pred = model.predict(modality, &xm)?;
        if n > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            let dst = std::slice::from_raw_parts_mut(out, n);
            for (d, p) in dst.iter_mut().zip(pred) {
                *d = p as u32;
            }
        }
        Ok(())
    })
}

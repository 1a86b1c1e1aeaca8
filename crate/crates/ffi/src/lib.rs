//! C interface to the `ordnorm` estimation engine.
//!
//! Objects are returned as opaque handles that the caller releases with the matching
//! `*_free` function. Fallible calls return an [`OrdnormStatus`]; the message for the
//! most recent failure on the calling thread is available from [`ordnorm_last_error`].
//! Strings returned as `char *` are owned by the caller and released with
//! [`ordnorm_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ordnorm::data::{load_csv, write_csv_file, Dataset, NaPolicy, ResponseType};
use ordnorm::estimation::{fit, FitConfig, FitResult, Solver};
use ordnorm::formula::parse_formula;
use ordnorm::kernels::{bvn_cdf, std_normal_cdf, BivariateArgs};
use ordnorm::model::ModelSpec;
use ordnorm::report::render_summary;
use ordnorm::simulate::{toy_generator, toy_spec};
use ordnorm::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrdnormStatus {
    Ok = 0,
    InvalidArgument = 1,
    IoError = 2,
    ParseError = 3,
    ModelError = 4,
    /// The fit handle is still produced; estimates come from the last iterate.
    NotConverged = 5,
    Singular = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrdnormSolver {
    Bfgs = 0,
    ConjugateGradient = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrdnormFitConfig {
    pub solver: OrdnormSolver,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub compute_se: bool,
    pub standardize: bool,
    pub seed: u64,
}

/// A loaded or simulated dataset together with its model specification.
pub struct OrdnormDataset {
    data: Dataset,
    spec: ModelSpec,
}

pub struct OrdnormFit {
    result: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Core(Error),
    Argument(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> OrdnormStatus {
    match e {
        Error::Io { .. } => OrdnormStatus::IoError,
        Error::Formula(_) | Error::Json(_) | Error::Data { .. } => OrdnormStatus::ParseError,
        Error::InvalidData(_) | Error::InvalidConfig(_) => OrdnormStatus::InvalidArgument,
        Error::Singular { .. } => OrdnormStatus::Singular,
        Error::InvalidSpec(_)
        | Error::InvalidParameters(_)
        | Error::DimensionMismatch { .. }
        | Error::NotPositiveDefinite { .. } => OrdnormStatus::ModelError,
    }
}

fn guarded(f: impl FnOnce() -> Result<OrdnormStatus, Failure>) -> OrdnormStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_error(msg);
            OrdnormStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic");
            OrdnormStatus::Panic
        }
    }
}

fn guarded_value<T>(fallback: T, f: impl FnOnce() -> T) -> T {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(fallback)
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Argument(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Argument(format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::Argument(format!("{what} is null")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ordnorm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ordnorm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ordnorm_std_normal_cdf(x: f64) -> f64 {
    guarded_value(f64::NAN, || std_normal_cdf(x))
}

/// `P(X ≤ x, Y ≤ y)` for a standard bivariate normal with correlation `rho`.
#[no_mangle]
pub extern "C" fn ordnorm_bvn_cdf(x: f64, y: f64, rho: f64) -> f64 {
    if x.is_nan() || y.is_nan() || rho.is_nan() {
        return f64::NAN;
    }
    guarded_value(f64::NAN, || bvn_cdf(BivariateArgs::new(x, y, rho)))
}

/// Loads a CSV file. `types` is a comma-separated list of `ordinal`/`gaussian`, one per
/// response in `formula`. With `na_pass` false, missing responses are an error.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_dataset_load_csv(
    path: *const c_char,
    formula: *const c_char,
    types: *const c_char,
    na_pass: bool,
    out: *mut *mut OrdnormDataset,
) -> OrdnormStatus {
    guarded(|| {
        if out.is_null() {
            return Err(Failure::Argument("output pointer is null".into()));
        }
        let path = text(path, "path")?;
        let formula = parse_formula(text(formula, "formula")?).map_err(Error::from)?;
        let types = text(types, "types")?
            .split(',')
            .map(|t| t.trim().parse::<ResponseType>().map_err(Failure::Argument))
            .collect::<Result<Vec<_>, _>>()?;
        let na = if na_pass {
            NaPolicy::Pass
        } else {
            NaPolicy::Fail
        };
        let loaded = load_csv(path, &formula, &types, na)?;
        *out = Box::into_raw(Box::new(OrdnormDataset {
            data: loaded.data,
            spec: loaded.spec,
        }));
        Ok(OrdnormStatus::Ok)
    })
}

/// Simulates the built-in toy design (1000 units, y1, y2, z1, z2, X1, X2, X3).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_dataset_simulate_toy(
    seed: u64,
    out: *mut *mut OrdnormDataset,
) -> OrdnormStatus {
    guarded(|| {
        if out.is_null() {
            return Err(Failure::Argument("output pointer is null".into()));
        }
        *out = Box::into_raw(Box::new(OrdnormDataset {
            data: toy_generator(seed),
            spec: toy_spec(),
        }));
        Ok(OrdnormStatus::Ok)
    })
}

/// Number of units, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_dataset_n_units(dataset: *const OrdnormDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.n)
}

/// Number of responses, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_dataset_n_responses(dataset: *const OrdnormDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.q)
}

/// # Safety
/// `dataset` must be null or a live handle; `path` must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_dataset_write_csv(
    dataset: *const OrdnormDataset,
    path: *const c_char,
) -> OrdnormStatus {
    guarded(|| {
        let d = handle(dataset, "dataset")?;
        write_csv_file(&d.data, &d.spec, text(path, "path")?)?;
        Ok(OrdnormStatus::Ok)
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_dataset_free(dataset: *mut OrdnormDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub extern "C" fn ordnorm_fit_config_default() -> OrdnormFitConfig {
    let d = FitConfig::default();
    OrdnormFitConfig {
        solver: OrdnormSolver::Bfgs,
        max_iterations: d.max_iterations,
        gradient_tolerance: d.gradient_tolerance,
        compute_se: d.compute_se,
        standardize: false,
        seed: d.seed,
    }
}

/// Fits the model. On `ORDNORM_STATUS_OK` or `ORDNORM_STATUS_NOT_CONVERGED`, `*out`
/// receives a fit handle. A null `config` selects the defaults.
///
/// # Safety
/// `dataset` must be null or a live handle; `config` null or readable; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit(
    dataset: *const OrdnormDataset,
    config: *const OrdnormFitConfig,
    out: *mut *mut OrdnormFit,
) -> OrdnormStatus {
    guarded(|| {
        if out.is_null() {
            return Err(Failure::Argument("output pointer is null".into()));
        }
        let d = handle(dataset, "dataset")?;
        let c = config
            .as_ref()
            .copied()
            .unwrap_or_else(|| ordnorm_fit_config_default());
        let cfg = FitConfig {
            solver: match c.solver {
                OrdnormSolver::Bfgs => Solver::QuasiNewtonBfgs,
                OrdnormSolver::ConjugateGradient => Solver::ConjugateGradient,
            },
            max_iterations: c.max_iterations,
            gradient_tolerance: c.gradient_tolerance,
            compute_se: c.compute_se,
            seed: c.seed,
        };
        let mut spec = d.spec.clone();
        spec.standardize = c.standardize && spec.p() > 0;
        let result = fit(&spec, &d.data, &cfg)?;
        let converged = result.converged;
        *out = Box::into_raw(Box::new(OrdnormFit { result }));
        if converged {
            Ok(OrdnormStatus::Ok)
        } else {
            set_error("the optimizer did not converge");
            Ok(OrdnormStatus::NotConverged)
        }
    })
}

/// Restores a fit from the JSON produced by [`ordnorm_fit_to_json`].
///
/// # Safety
/// `json` must be null or NUL-terminated; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_from_json(
    json: *const c_char,
    out: *mut *mut OrdnormFit,
) -> OrdnormStatus {
    guarded(|| {
        if out.is_null() {
            return Err(Failure::Argument("output pointer is null".into()));
        }
        let result: FitResult = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(OrdnormFit { result }));
        Ok(OrdnormStatus::Ok)
    })
}

/// Number of parameters, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_num_params(fit: *const OrdnormFit) -> usize {
    fit.as_ref().map_or(0, |f| f.result.dim())
}

unsafe fn copy_out(
    fit: *const OrdnormFit,
    out: *mut f64,
    len: usize,
    values: impl Fn(&FitResult) -> Vec<f64>,
) -> OrdnormStatus {
    guarded(|| {
        let f = handle(fit, "fit")?;
        if out.is_null() {
            return Err(Failure::Argument("output buffer is null".into()));
        }
        let v = values(&f.result);
        if len < v.len() {
            return Err(Failure::Argument(format!(
                "buffer holds {len} values, {} needed",
                v.len()
            )));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(OrdnormStatus::Ok)
    })
}

/// Copies the estimates (natural scale, layout order) into `out[0..num_params]`.
///
/// # Safety
/// `fit` must be null or a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_estimates(
    fit: *const OrdnormFit,
    out: *mut f64,
    len: usize,
) -> OrdnormStatus {
    copy_out(fit, out, len, FitResult::estimate_vec)
}

/// Copies the standard errors into `out[0..num_params]`; unavailable entries are NaN.
///
/// # Safety
/// `fit` must be null or a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_std_errors(
    fit: *const OrdnormFit,
    out: *mut f64,
    len: usize,
) -> OrdnormStatus {
    copy_out(fit, out, len, |r| {
        r.se.iter().map(|s| s.unwrap_or(f64::NAN)).collect()
    })
}

/// Maximized pairwise log-likelihood, or NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_log_pl(fit: *const OrdnormFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.result.log_pl)
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_claic(fit: *const OrdnormFit) -> f64 {
    fit.as_ref()
        .and_then(|f| f.result.claic)
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_clbic(fit: *const OrdnormFit) -> f64 {
    fit.as_ref()
        .and_then(|f| f.result.clbic)
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_converged(fit: *const OrdnormFit) -> bool {
    fit.as_ref().is_some_and(|f| f.result.converged)
}

/// Name of parameter `index` (e.g. `y1 1|2`, `sigma.z1`), or null when out of range.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_param_name(
    fit: *const OrdnormFit,
    index: usize,
) -> *mut c_char {
    match fit
        .as_ref()
        .and_then(|f| f.result.parameter_names.get(index))
    {
        Some(name) => into_c_string(name.clone()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_to_json(fit: *const OrdnormFit) -> *mut c_char {
    let Some(f) = fit.as_ref() else {
        return ptr::null_mut();
    };
    guarded_value(ptr::null_mut(), || {
        serde_json::to_string_pretty(&f.result).map_or(ptr::null_mut(), into_c_string)
    })
}

/// Text summary of the fit.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_report(fit: *const OrdnormFit) -> *mut c_char {
    let Some(f) = fit.as_ref() else {
        return ptr::null_mut();
    };
    guarded_value(ptr::null_mut(), || into_c_string(render_summary(&f.result)))
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_fit_free(fit: *mut OrdnormFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ordnorm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

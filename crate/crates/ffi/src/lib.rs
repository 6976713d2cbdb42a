//! C ABI over the `eqcorr` engine.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`EqcStatus`]; on failure [`eqc_last_error_message`] describes the error
//! for the calling thread. Output arrays are caller-allocated and their
//! length is passed explicitly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use eqcorr::backtest::{run, BacktestConfig, BacktestLedger};
use eqcorr::estimators::MeanVector;
use eqcorr::market_data::{load_prices, to_gross_returns, ReturnsPanel, WindowSpec};
use eqcorr::models::{build, ModelSpec};
use eqcorr::optimizer::{solve, SolverConfig};
use eqcorr::risk::RiskModel;
use eqcorr::tuning::TuningConfig;
use eqcorr::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferSize = 3,
    Parse = 10,
    EmptyUniverse = 11,
    InsufficientData = 12,
    Window = 13,
    DegenerateUniverse = 14,
    Estimation = 15,
    DegeneratePortfolio = 16,
    Singular = 17,
    Argument = 18,
    Spec = 19,
    Infeasible = 20,
    Numeric = 21,
    Tuning = 22,
    Config = 23,
    Io = 24,
    Csv = 25,
    Panic = 99,
}

impl From<&Error> for EqcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => EqcStatus::Parse,
            Error::EmptyUniverse(_) => EqcStatus::EmptyUniverse,
            Error::InsufficientData(_) => EqcStatus::InsufficientData,
            Error::Window(_) => EqcStatus::Window,
            Error::DegenerateUniverse(_) => EqcStatus::DegenerateUniverse,
            Error::Estimation(_) => EqcStatus::Estimation,
            Error::DegeneratePortfolio(_) => EqcStatus::DegeneratePortfolio,
            Error::Singular(_) => EqcStatus::Singular,
            Error::Argument(_) => EqcStatus::Argument,
            Error::Spec(_) => EqcStatus::Spec,
            Error::Infeasible(_) => EqcStatus::Infeasible,
            Error::Numeric(_) => EqcStatus::Numeric,
            Error::Tuning(_) => EqcStatus::Tuning,
            Error::Config(_) => EqcStatus::Config,
            Error::Io(_) => EqcStatus::Io,
            Error::Csv(_) => EqcStatus::Csv,
        }
    }
}

/// Covariance-derived risk measures for one universe.
pub struct EqcRiskModel(RiskModel);

/// Daily gross % returns loaded from a price CSV.
pub struct EqcReturns(ReturnsPanel);

/// Result of a backtest run.
pub struct EqcLedger(BacktestLedger);

/// Backtest settings. Obtain defaults from [`eqc_backtest_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EqcBacktestOptions {
    pub train_months: u32,
    pub test_months: u32,
    pub k: usize,
    pub grid_step: f64,
    pub filter_window: u32,
    pub seed: u64,
    /// Inclusive year range; both 0 selects every year with enough history.
    pub first_year: i32,
    pub last_year: i32,
    /// Minimum mean daily net % return for Type-1 models.
    pub r_min: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(EqcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EqcStatus::from(&e), format!("error[{}]: {e}", e.code()))
    }
}

type FfiResult<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> EqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EqcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EqcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EqcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out_slice<'a>(ptr: *mut f64, len: usize, want: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if ptr.is_null() {
        return Err(null(what));
    }
    if len != want {
        return Err(Failure(EqcStatus::BufferSize, format!("{what} has length {len}, expected {want}")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn string<'a>(ptr: *const c_char, what: &str) -> FfiResult<&'a str> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(EqcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or_else(|| null(what))
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

/// Message for the last failed call on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a risk model from a row-major `d x d` covariance matrix.
///
/// # Safety
/// `cov` must point to `d * d` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eqc_risk_model_new(cov: *const f64, d: usize, out: *mut *mut EqcRiskModel) -> EqcStatus {
    guard(|| {
        let values = slice(cov, d * d, "cov")?;
        let model = RiskModel::new(DMatrix::from_row_slice(d, d, values))?;
        write_out(out, Box::into_raw(Box::new(EqcRiskModel(model))), "out")
    })
}

/// # Safety
/// `model` must come from [`eqc_risk_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eqc_risk_model_free(model: *mut EqcRiskModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn eqc_risk_model_dim(model: *const EqcRiskModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// Equal-correlation weights into `out[len]`.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqc_w_eq(model: *const EqcRiskModel, out: *mut f64, len: usize) -> EqcStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let w = m.w_eq()?;
        out_slice(out, len, m.dim(), "out")?.copy_from_slice(w.as_slice());
        Ok(())
    })
}

/// Minimum-variance weights into `out[len]`.
///
/// # Safety
/// As for [`eqc_w_eq`].
#[no_mangle]
pub unsafe extern "C" fn eqc_min_variance(model: *const EqcRiskModel, out: *mut f64, len: usize) -> EqcStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let w = m.min_variance_weights()?;
        out_slice(out, len, m.dim(), "out")?.copy_from_slice(w.as_slice());
        Ok(())
    })
}

unsafe fn weights<'a>(
    model: *const EqcRiskModel,
    w: *const f64,
    len: usize,
) -> FfiResult<(&'a RiskModel, DVector<f64>)> {
    let m = &handle(model, "model")?.0;
    if len != m.dim() {
        return Err(Failure(EqcStatus::BufferSize, format!("w has length {len}, model has {}", m.dim())));
    }
    Ok((m, DVector::from_column_slice(slice(w, len, "w")?)))
}

/// Each asset's correlation with portfolio `w`, into `out`.
///
/// # Safety
/// `w` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqc_corr_vec(
    model: *const EqcRiskModel,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> EqcStatus {
    guard(|| {
        let (m, w) = weights(model, w, len)?;
        let c = m.corr_vec(&w)?;
        out_slice(out, len, len, "out")?.copy_from_slice(c.as_slice());
        Ok(())
    })
}

/// Variance of the correlation vector of `w`.
///
/// # Safety
/// `w` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_sigma_rho_sq(
    model: *const EqcRiskModel,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> EqcStatus {
    guard(|| {
        let (m, w) = weights(model, w, len)?;
        write_out(out, m.sigma_rho_sq(&w)?, "out")
    })
}

/// Squared distance from `w` to the equal-correlation weights.
///
/// # Safety
/// As for [`eqc_sigma_rho_sq`].
#[no_mangle]
pub unsafe extern "C" fn eqc_d_eq_sq(model: *const EqcRiskModel, w: *const f64, len: usize, out: *mut f64) -> EqcStatus {
    guard(|| {
        let (m, w) = weights(model, w, len)?;
        write_out(out, m.d_eq_sq(&w)?, "out")
    })
}

fn optional(l: f64) -> Option<f64> {
    if l.is_nan() {
        None
    } else {
        Some(l)
    }
}

/// Solve one model (e.g. `"B2-SC"`) for mean vector `mu[d]` and row-major
/// covariance `cov[d*d]`, used as given. Pass NaN for unused
/// hyperparameters.
///
/// # Safety
/// Pointers must reference arrays of the stated sizes; `w_out` holds `d`
/// doubles and `value_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn eqc_solve_model(
    model: *const c_char,
    mu: *const f64,
    cov: *const f64,
    d: usize,
    lambda1: f64,
    lambda2: f64,
    r_min: f64,
    w_out: *mut f64,
    value_out: *mut f64,
) -> EqcStatus {
    guard(|| {
        let spec = ModelSpec::parse(string(model, "model")?)?
            .with_hyper(optional(lambda1), optional(lambda2))
            .with_r_min(r_min);
        let mu = MeanVector(DVector::from_column_slice(slice(mu, d, "mu")?));
        let risk = RiskModel::new(DMatrix::from_row_slice(d, d, slice(cov, d * d, "cov")?))?;
        let problem = build(&spec, &mu, Arc::new(risk))?;
        let report = solve(&problem, &SolverConfig::default())?;
        out_slice(w_out, d, d, "w_out")?.copy_from_slice(report.w.as_slice());
        if !value_out.is_null() {
            value_out.write(report.value);
        }
        Ok(())
    })
}

/// Load a price CSV and convert it to daily gross returns.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_returns_load_csv(path: *const c_char, out: *mut *mut EqcReturns) -> EqcStatus {
    guard(|| {
        let path = string(path, "path")?;
        let loaded = load_prices(Path::new(path), None)?;
        let returns = to_gross_returns(&loaded.panel)?;
        write_out(out, Box::into_raw(Box::new(EqcReturns(returns))), "out")
    })
}

/// # Safety
/// `returns` must come from [`eqc_returns_load_csv`] or be null.
#[no_mangle]
pub unsafe extern "C" fn eqc_returns_free(returns: *mut EqcReturns) {
    if !returns.is_null() {
        drop(Box::from_raw(returns));
    }
}

/// # Safety
/// `returns` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_returns_shape(
    returns: *const EqcReturns,
    n_obs: *mut usize,
    n_assets: *mut usize,
) -> EqcStatus {
    guard(|| {
        let r = &handle(returns, "returns")?.0;
        write_out(n_obs, r.n_obs(), "n_obs")?;
        write_out(n_assets, r.n_assets(), "n_assets")
    })
}

#[no_mangle]
pub extern "C" fn eqc_backtest_options_default() -> EqcBacktestOptions {
    let cfg = BacktestConfig::default();
    EqcBacktestOptions {
        train_months: cfg.window.train_months,
        test_months: cfg.window.test_months,
        k: cfg.k,
        grid_step: cfg.tuning.grid_step,
        filter_window: cfg.tuning.filter_window as u32,
        seed: cfg.solver.seed,
        first_year: 0,
        last_year: 0,
        r_min: eqcorr::models::DEFAULT_R_MIN,
    }
}

/// Run the walk-forward backtest of `model` over `returns`. `options` may
/// be null for defaults.
///
/// # Safety
/// Handles must be live, `model` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_backtest_run(
    returns: *const EqcReturns,
    model: *const c_char,
    options: *const EqcBacktestOptions,
    out: *mut *mut EqcLedger,
) -> EqcStatus {
    guard(|| {
        let data = &handle(returns, "returns")?.0;
        let opts = options.as_ref().copied().unwrap_or_else(|| eqc_backtest_options_default());
        let spec = ModelSpec::parse(string(model, "model")?)?.with_r_min(opts.r_min);
        let cfg = BacktestConfig {
            window: WindowSpec::new(opts.train_months, opts.test_months)?,
            k: opts.k,
            solver: SolverConfig {
                seed: opts.seed,
                ..SolverConfig::default()
            },
            tuning: TuningConfig {
                grid_step: opts.grid_step,
                filter_window: opts.filter_window as usize,
            },
            years: if opts.first_year == 0 && opts.last_year == 0 {
                None
            } else {
                Some((opts.first_year, opts.last_year))
            },
            ..BacktestConfig::default()
        };
        let ledger = run(&spec, data, &cfg)?;
        write_out(out, Box::into_raw(Box::new(EqcLedger(ledger))), "out")
    })
}

/// # Safety
/// `ledger` must come from [`eqc_backtest_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_free(ledger: *mut EqcLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Number of monthly records (0 for a null handle).
///
/// # Safety
/// `ledger` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_month_count(ledger: *const EqcLedger) -> usize {
    ledger.as_ref().map_or(0, |l| l.0.records.len())
}

/// Number of daily portfolio returns (0 for a null handle).
///
/// # Safety
/// `ledger` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_daily_len(ledger: *const EqcLedger) -> usize {
    ledger.as_ref().map_or(0, |l| l.0.daily.len())
}

/// Daily portfolio gross % returns into `out[len]`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_daily_returns(ledger: *const EqcLedger, out: *mut f64, len: usize) -> EqcStatus {
    guard(|| {
        let l = &handle(ledger, "ledger")?.0;
        let dst = out_slice(out, len, l.daily.len(), "out")?;
        for (d, (_, v)) in dst.iter_mut().zip(&l.daily) {
            *d = *v;
        }
        Ok(())
    })
}

/// Year, month, universe size and leverage of record `index`. Any out
/// pointer may be null.
///
/// # Safety
/// `ledger` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_month_info(
    ledger: *const EqcLedger,
    index: usize,
    year: *mut i32,
    month: *mut u32,
    n_assets: *mut usize,
    leverage: *mut f64,
) -> EqcStatus {
    guard(|| {
        let l = &handle(ledger, "ledger")?.0;
        let r = l.records.get(index).ok_or_else(|| {
            Failure(EqcStatus::Argument, format!("record {index} out of range (have {})", l.records.len()))
        })?;
        if !year.is_null() {
            year.write(r.month.year);
        }
        if !month.is_null() {
            month.write(r.month.month);
        }
        if !n_assets.is_null() {
            n_assets.write(r.weights.len());
        }
        if !leverage.is_null() {
            leverage.write(r.leverage());
        }
        Ok(())
    })
}

/// Weights of record `index` into `out[len]`, in ticker order.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_month_weights(
    ledger: *const EqcLedger,
    index: usize,
    out: *mut f64,
    len: usize,
) -> EqcStatus {
    guard(|| {
        let l = &handle(ledger, "ledger")?.0;
        let r = l
            .records
            .get(index)
            .ok_or_else(|| Failure(EqcStatus::Argument, format!("record {index} out of range")))?;
        out_slice(out, len, r.weights.len(), "out")?.copy_from_slice(&r.weights);
        Ok(())
    })
}

/// Write `weights.csv`, `returns.csv` and `months.csv` into directory `dir`.
///
/// # Safety
/// `ledger` must be live and `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn eqc_ledger_write_csv(ledger: *const EqcLedger, dir: *const c_char) -> EqcStatus {
    guard(|| {
        let l = &handle(ledger, "ledger")?.0;
        let dir = Path::new(string(dir, "dir")?);
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let file = |name: &str| std::fs::File::create(dir.join(name)).map_err(Error::from);
        l.write_weights(file("weights.csv")?)?;
        l.write_returns(file("returns.csv")?)?;
        l.write_months(file("months.csv")?)?;
        Ok(())
    })
}

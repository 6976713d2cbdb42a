//! Walk-forward backtest: tune once a year, then select, estimate, solve and
//! hold a portfolio for each month.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_covariance, sample_mean, MeanVector};
use crate::market_data::{resample_series, slice_window, Frequency, ReturnsPanel, WindowSpec, YearMonth};
use crate::models::{build, ModelSpec, MAX_LEVERAGE};
use crate::optimizer::{solve, SolverConfig};
use crate::risk::RiskModel;
use crate::selection::{select_universe, Linkage};
use crate::tuning::{tune, TuningConfig, TuningOutcome};

/// How a grid point is scored during annual tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuningMode {
    /// Select, estimate and solve once on the whole prior year, then score
    /// the resulting portfolio on that same year.
    #[default]
    InSample,
    /// Run the monthly walk-forward over the prior year and score the
    /// concatenated out-of-sample returns. Needs one extra training window
    /// of history.
    WalkForward,
}

impl fmt::Display for TuningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TuningMode::InSample => "in-sample",
            TuningMode::WalkForward => "walk-forward",
        })
    }
}

impl FromStr for TuningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "in-sample" => Ok(TuningMode::InSample),
            "walk-forward" => Ok(TuningMode::WalkForward),
            other => Err(Error::Argument(format!("unknown tuning mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub window: WindowSpec,
    /// Number of clusters, one stock picked from each.
    pub k: usize,
    pub linkage: Linkage,
    pub solver: SolverConfig,
    pub tuning: TuningConfig,
    pub tuning_mode: TuningMode,
    /// Inclusive year range; defaults to every year with enough history.
    pub years: Option<(i32, i32)>,
    /// Stop after this month even if data continues.
    pub last_month: Option<YearMonth>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            window: WindowSpec::default(),
            k: 20,
            linkage: Linkage::Average,
            solver: SolverConfig::default(),
            tuning: TuningConfig::default(),
            tuning_mode: TuningMode::InSample,
            years: None,
            last_month: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonthStatus {
    Solved { converged: bool, iterations: usize },
    /// The solve failed and the month held the fallback portfolio.
    Fallback { reason: String },
}

impl MonthStatus {
    pub fn label(&self) -> &'static str {
        match self {
            MonthStatus::Solved { converged: true, .. } => "solved",
            MonthStatus::Solved { converged: false, .. } => "max_iter",
            MonthStatus::Fallback { .. } => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthRecord {
    pub month: YearMonth,
    pub tickers: Vec<String>,
    pub weights: Vec<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub status: MonthStatus,
    /// Trading days held and the portfolio's daily gross % returns.
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

impl MonthRecord {
    pub fn leverage(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestLedger {
    pub model: String,
    pub records: Vec<MonthRecord>,
    pub daily: Vec<(NaiveDate, f64)>,
    pub weekly: Vec<(NaiveDate, f64)>,
    pub monthly: Vec<(NaiveDate, f64)>,
}

impl BacktestLedger {
    pub fn from_records(model: String, records: Vec<MonthRecord>) -> Self {
        let daily: Vec<(NaiveDate, f64)> = records
            .iter()
            .flat_map(|r| r.dates.iter().copied().zip(r.returns.iter().copied()))
            .collect();
        let (dates, values): (Vec<NaiveDate>, Vec<f64>) = daily.iter().copied().unzip();
        Self {
            weekly: resample_series(&dates, &values, Frequency::Weekly),
            monthly: resample_series(&dates, &values, Frequency::Monthly),
            model,
            records,
            daily,
        }
    }

    pub fn series(&self, frequency: Frequency) -> &[(NaiveDate, f64)] {
        match frequency {
            Frequency::Daily => &self.daily,
            Frequency::Weekly => &self.weekly,
            Frequency::Monthly => &self.monthly,
        }
    }

    pub fn write_weights<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "month", "ticker", "weight"])?;
        for r in &self.records {
            for (t, x) in r.tickers.iter().zip(&r.weights) {
                w.write_record([r.month.year.to_string(), r.month.month.to_string(), t.clone(), x.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_returns<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "frequency", "gross_return"])?;
        for f in [Frequency::Daily, Frequency::Weekly, Frequency::Monthly] {
            for (d, v) in self.series(f) {
                w.write_record([d.to_string(), f.as_str().to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-month status, hyperparameters and leverage.
    pub fn write_months<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "month", "status", "lambda1", "lambda2", "leverage", "n_assets", "note"])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.records {
            let note = match &r.status {
                MonthStatus::Fallback { reason } => reason.clone(),
                MonthStatus::Solved { iterations, .. } => format!("iterations={iterations}"),
            };
            w.write_record([
                r.month.year.to_string(),
                r.month.month.to_string(),
                r.status.label().to_string(),
                opt(r.lambda1),
                opt(r.lambda2),
                r.leverage().to_string(),
                r.tickers.len().to_string(),
                note,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Errors that make a month (or grid point) fall back instead of aborting.
fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible(_)
            | Error::Numeric(_)
            | Error::Singular(_)
            | Error::DegeneratePortfolio(_)
            | Error::Estimation(_)
    )
}

/// Moments of a selected universe; everything a solve needs except the
/// hyperparameters.
struct Prepared {
    mu: MeanVector,
    risk: Result<Arc<RiskModel>>,
    /// Gross % returns of the selected stocks over the holding period.
    hold: ReturnsPanel,
}

impl Prepared {
    fn new(train: &ReturnsPanel, hold: &ReturnsPanel, spec: &ModelSpec, cfg: &BacktestConfig) -> Result<Self> {
        let tickers = select_universe(train, cfg.k, cfg.linkage)?;
        let train = train.select_tickers(&tickers)?;
        let hold = hold.select_tickers(&tickers)?;
        let mu = sample_mean(&train)?;
        let risk = if tickers.len() == 1 {
            RiskModel::new(DMatrix::identity(1, 1)).map(Arc::new)
        } else {
            estimate_covariance(&train, spec.cov_method)
                .and_then(|est| RiskModel::from_estimate(&est))
                .map(Arc::new)
        };
        Ok(Self { mu, risk, hold })
    }

    fn solve(&self, spec: &ModelSpec, solver: &SolverConfig) -> Result<(DVector<f64>, MonthStatus)> {
        if self.mu.0.len() == 1 {
            return Ok((DVector::from_element(1, 1.0), MonthStatus::Solved { converged: true, iterations: 0 }));
        }
        let risk = match &self.risk {
            Ok(r) => r.clone(),
            Err(e) => return Err(Error::Estimation(e.to_string())),
        };
        let problem = build(spec, &self.mu, risk)?;
        let report = solve(&problem, solver)?;
        Ok((
            report.w,
            MonthStatus::Solved {
                converged: report.converged,
                iterations: report.iterations,
            },
        ))
    }

    /// `w_eq` pulled toward equal weights until the leverage cap holds;
    /// equal weights when `w_eq` is unavailable.
    fn fallback(&self) -> DVector<f64> {
        let d = self.mu.0.len();
        let equal = DVector::from_element(d, 1.0 / d as f64);
        let Some(weq) = self.risk.as_ref().ok().and_then(|r| r.w_eq().ok()).cloned() else {
            return equal;
        };
        let mix = |t: f64| &weq * (1.0 - t) + &equal * t;
        if weq.lp_norm(1) <= MAX_LEVERAGE {
            return weq;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mix(mid).lp_norm(1) <= MAX_LEVERAGE {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        mix(hi)
    }

    fn portfolio_returns(&self, w: &DVector<f64>) -> Vec<f64> {
        portfolio_returns(&self.hold.returns, w)
    }
}

/// Daily gross % return of fixed weights: `100 (1 + sum_i w_i (r_i/100 - 1))`.
pub fn portfolio_returns(gross: &DMatrix<f64>, w: &DVector<f64>) -> Vec<f64> {
    (0..gross.nrows())
        .map(|t| {
            let excess: f64 = (0..gross.ncols()).map(|i| w[i] * (gross[(t, i)] / 100.0 - 1.0)).sum();
            100.0 * (1.0 + excess)
        })
        .collect()
}

/// Tune `spec` on calendar year `year`.
pub fn tune_year(spec: &ModelSpec, data: &ReturnsPanel, year: i32, cfg: &BacktestConfig) -> Result<TuningOutcome> {
    let prepared: Vec<Prepared> = match cfg.tuning_mode {
        TuningMode::InSample => {
            let panel = data.months_between(YearMonth::new(year, 1), YearMonth::new(year, 12));
            let months = panel.months();
            if months.len() != 12 {
                return Err(Error::Window(format!(
                    "tuning year {year} needs all 12 months of data, found {}",
                    months.len()
                )));
            }
            vec![Prepared::new(&panel, &panel, spec, cfg)?]
        }
        TuningMode::WalkForward => rebalance_months(year, cfg.window)
            .into_iter()
            .map(|m| {
                let (train, test) = slice_window(data, cfg.window, m)?;
                Prepared::new(&train, &test, spec, cfg)
            })
            .collect::<Result<_>>()?,
    };
    tune(spec, &cfg.tuning, |candidate| {
        let mut out = Vec::new();
        for p in &prepared {
            let (w, _) = p.solve(candidate, &cfg.solver)?;
            out.extend(p.portfolio_returns(&w));
        }
        Ok(out)
    })
}

fn rebalance_months(year: i32, window: WindowSpec) -> Vec<YearMonth> {
    (1..=12u32)
        .step_by(window.test_months as usize)
        .map(|m| YearMonth::new(year, m))
        .collect()
}

/// One month of the walk-forward: select, estimate, solve (or fall back)
/// and hold.
pub fn run_month(
    spec: &ModelSpec,
    data: &ReturnsPanel,
    month: YearMonth,
    cfg: &BacktestConfig,
) -> Result<MonthRecord> {
    let (train, test) = slice_window(data, cfg.window, month)?;
    let prepared = Prepared::new(&train, &test, spec, cfg)?;
    let (w, status) = match prepared.solve(spec, &cfg.solver) {
        Ok(ok) => ok,
        Err(e) if recoverable(&e) => (
            prepared.fallback(),
            MonthStatus::Fallback {
                reason: format!("{}: {e}", e.code()),
            },
        ),
        Err(e) => return Err(e),
    };
    Ok(MonthRecord {
        month,
        tickers: prepared.hold.tickers.clone(),
        returns: prepared.portfolio_returns(&w),
        weights: w.iter().copied().collect(),
        lambda1: spec.lambda1,
        lambda2: spec.lambda2,
        status,
        dates: prepared.hold.dates,
    })
}

/// Inclusive year range the run covers.
pub fn resolve_years(data: &ReturnsPanel, spec: &ModelSpec, cfg: &BacktestConfig) -> Result<(i32, i32)> {
    let (Some(first), Some(last)) = (data.dates.first(), data.dates.last()) else {
        return Err(Error::InsufficientData("no returns".into()));
    };
    if let Some(range) = cfg.years {
        if range.0 > range.1 {
            return Err(Error::Argument(format!("year range {}..{} is empty", range.0, range.1)));
        }
        return Ok(range);
    }
    // Earliest year whose first rebalance has enough history.
    let mut y = first.year();
    while first_needed_month(spec, y, cfg) < YearMonth::of(*first) && y <= last.year() {
        y += 1;
    }
    Ok((y, last.year()))
}

/// First calendar month of data that the run for `first_year` reads.
pub fn first_needed_month(spec: &ModelSpec, first_year: i32, cfg: &BacktestConfig) -> YearMonth {
    let start = YearMonth::new(first_year, 1);
    let train = start.offset(-(cfg.window.train_months as i64));
    if spec.kind.n_hyper() == 0 {
        return train;
    }
    let tuning = match cfg.tuning_mode {
        TuningMode::InSample => YearMonth::new(first_year - 1, 1),
        TuningMode::WalkForward => YearMonth::new(first_year - 1, 1).offset(-(cfg.window.train_months as i64)),
    };
    train.min(tuning)
}

/// Run the walk-forward backtest for one model.
///
/// The run stops at the last month with data (or `cfg.last_month`), so a
/// truncated panel reproduces the prefix of a longer run.
pub fn run(spec: &ModelSpec, data: &ReturnsPanel, cfg: &BacktestConfig) -> Result<BacktestLedger> {
    if data.frequency != Frequency::Daily {
        return Err(Error::Argument("backtest expects daily returns".into()));
    }
    let (first_year, last_year) = resolve_years(data, spec, cfg)?;
    let Some(first_date) = data.dates.first() else {
        return Err(Error::InsufficientData("no returns".into()));
    };
    let needed = first_needed_month(spec, first_year, cfg);
    if needed < YearMonth::of(*first_date) {
        return Err(Error::Window(format!(
            "{} from {first_year} needs data starting {needed}-01, but data starts {first_date}",
            spec.name()
        )));
    }
    let data_end = YearMonth::of(*data.dates.last().expect("non-empty"));
    let stop = cfg.last_month.map_or(data_end, |m| m.min(data_end));

    let mut records = Vec::new();
    for year in first_year..=last_year {
        let months: Vec<YearMonth> = rebalance_months(year, cfg.window)
            .into_iter()
            .filter(|m| *m <= stop)
            .collect();
        if months.is_empty() {
            break;
        }
        let tuned = if spec.kind.n_hyper() > 0 {
            tune_year(spec, data, year - 1, cfg)?.apply(spec)
        } else {
            *spec
        };
        let year_records: Vec<Result<MonthRecord>> = months
            .par_iter()
            .map(|m| run_month(&tuned, data, *m, cfg))
            .collect();
        for r in year_records {
            records.push(r?);
        }
    }
    if records.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no month of {first_year}..{last_year} has data"
        )));
    }
    Ok(BacktestLedger::from_records(spec.name(), records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn portfolio_return_formula() {
        let g = DMatrix::from_row_slice(2, 2, &[101.0, 99.0, 100.0, 102.0]);
        let w = DVector::from_vec(vec![1.5, -0.5]);
        let r = portfolio_returns(&g, &w);
        assert!((r[0] - 102.0).abs() < 1e-12);
        assert!((r[1] - 99.0).abs() < 1e-12);
    }

    #[test]
    fn tuning_mode_round_trip() {
        for m in [TuningMode::InSample, TuningMode::WalkForward] {
            assert_eq!(m.to_string().parse::<TuningMode>().unwrap(), m);
        }
    }
}

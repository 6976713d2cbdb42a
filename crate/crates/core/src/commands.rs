//! The work behind each CLI subcommand. Every command builds its outputs in
//! memory first and only then writes them, so a failure leaves no partial
//! output directory behind.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::analytics::{render_table, report, write_drawdown_csv, write_report_csv, MetricsRow};
use crate::backtest::{run, tune_year, BacktestConfig, BacktestLedger};
use crate::config::{read_universe, RunConfig};
use crate::error::{Error, Result};
use crate::market_data::{load_prices, resample, slice_window, to_gross_returns, Frequency, ReturnsPanel, YearMonth};
use crate::models::ModelSpec;
use crate::risk::RiskModel;
use crate::selection::select_universe;
use crate::tuning::TuningOutcome;

/// Files to be written under one output directory.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct OutputSet {
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((rel.into(), bytes));
    }

    pub fn get(&self, rel: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(p, _)| p == Path::new(rel))
            .map(|(_, b)| b.as_slice())
    }

    /// Write every file; on failure remove whatever this call created.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut created: Vec<PathBuf> = Vec::new();
        let mut created_dirs: Vec<PathBuf> = Vec::new();
        let result = (|| -> Result<()> {
            for (rel, bytes) in &self.files {
                let path = dir.join(rel);
                if let Some(parent) = path.parent() {
                    let mut missing = Vec::new();
                    let mut p = parent.to_path_buf();
                    while !p.as_os_str().is_empty() && !p.exists() {
                        missing.push(p.clone());
                        if !p.pop() {
                            break;
                        }
                    }
                    fs::create_dir_all(parent)?;
                    created_dirs.extend(missing);
                }
                fs::write(&path, bytes)?;
                created.push(path);
            }
            Ok(())
        })();
        match result {
            Ok(()) => Ok(created),
            Err(e) => {
                for p in &created {
                    let _ = fs::remove_file(p);
                }
                for d in created_dirs.iter() {
                    let _ = fs::remove_dir(d);
                }
                Err(e)
            }
        }
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Daily gross returns from the configured price file, restricted to the
/// universe file if one is set. Also returns tickers dropped for gaps.
pub fn load_returns(cfg: &RunConfig) -> Result<(ReturnsPanel, Vec<String>)> {
    let loaded = load_prices(cfg.data_path()?, None)?;
    let mut returns = to_gross_returns(&loaded.panel)?;
    if let Some(u) = &cfg.universe {
        returns = returns.select_tickers(&read_universe(u)?)?;
    }
    Ok((returns, loaded.dropped))
}

pub fn ledger_outputs(ledger: &BacktestLedger, out: &mut OutputSet) -> Result<()> {
    let dir = PathBuf::from(&ledger.model);
    out.add(dir.join("weights.csv"), csv_bytes(|b| ledger.write_weights(b))?);
    out.add(dir.join("returns.csv"), csv_bytes(|b| ledger.write_returns(b))?);
    out.add(dir.join("months.csv"), csv_bytes(|b| ledger.write_months(b))?);
    out.add(dir.join("drawdown.csv"), csv_bytes(|b| write_drawdown_csv(ledger, b))?);
    Ok(())
}

pub fn report_outputs(rows: &[MetricsRow], out: &mut OutputSet) -> Result<()> {
    out.add("report.csv", csv_bytes(|b| write_report_csv(rows, b))?);
    out.add("report.txt", render_table(rows).into_bytes());
    Ok(())
}

/// Run every model; ledgers come back in input order.
pub fn backtest(
    returns: &ReturnsPanel,
    specs: &[ModelSpec],
    cfg: &BacktestConfig,
) -> Result<(Vec<BacktestLedger>, OutputSet)> {
    let ledgers: Vec<BacktestLedger> = specs
        .par_iter()
        .map(|s| run(s, returns, cfg))
        .collect::<Result<_>>()?;
    let mut out = OutputSet::default();
    for l in &ledgers {
        ledger_outputs(l, &mut out)?;
    }
    report_outputs(&report(&ledgers)?, &mut out)?;
    Ok((ledgers, out))
}

/// Tune one model on one calendar year and dump the raw and smoothed grid.
pub fn tune(
    returns: &ReturnsPanel,
    spec: &ModelSpec,
    year: i32,
    cfg: &BacktestConfig,
) -> Result<(TuningOutcome, OutputSet)> {
    let outcome = tune_year(spec, returns, year, cfg)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["lambda1", "lambda2", "raw", "filtered"])?;
        let raw = &outcome.raw;
        for i in 0..raw.values.nrows() {
            for j in 0..raw.values.ncols() {
                if !raw.mask[(i, j)] {
                    continue;
                }
                let (l1, l2) = raw.point(i, j);
                w.write_record([
                    l1.to_string(),
                    l2.map_or(String::new(), |v| v.to_string()),
                    raw.values[(i, j)].to_string(),
                    outcome.filtered[(i, j)].to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    let mut out = OutputSet::default();
    out.add(format!("tuning_{}_{year}.csv", spec.name()), buf);
    Ok((outcome, out))
}

/// Stocks picked for the month `month` from its training window.
pub fn select(returns: &ReturnsPanel, month: YearMonth, cfg: &BacktestConfig) -> Result<(Vec<String>, OutputSet)> {
    let (train, _) = slice_window(returns, cfg.window, month)?;
    let tickers = select_universe(&train, cfg.k, cfg.linkage)?;
    let mut body = String::from("ticker\n");
    for t in &tickers {
        body.push_str(t);
        body.push('\n');
    }
    let mut out = OutputSet::default();
    out.add(format!("selection_{month}.csv"), body.into_bytes());
    Ok((tickers, out))
}

/// Cross-sectional mean and sample standard deviation of net % returns per
/// date at daily, weekly and monthly frequency. The std is `NA` when fewer
/// than two tickers are present.
pub fn summary(returns: &ReturnsPanel) -> Result<OutputSet> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["date", "frequency", "n", "mean_net_pct", "std_net_pct"])?;
        for f in [Frequency::Daily, Frequency::Weekly, Frequency::Monthly] {
            let panel = if f == Frequency::Daily { returns.clone() } else { resample(returns, f)? };
            let n = panel.n_assets();
            for (t, d) in panel.dates.iter().enumerate() {
                let x: Vec<f64> = panel.returns.row(t).iter().map(|r| r - 100.0).collect();
                let mean = x.iter().sum::<f64>() / n as f64;
                let std = if n < 2 {
                    "NA".to_string()
                } else {
                    let v = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                    v.sqrt().to_string()
                };
                w.write_record([d.to_string(), f.as_str().to_string(), n.to_string(), mean.to_string(), std])?;
            }
        }
        w.flush()?;
    }
    let mut out = OutputSet::default();
    out.add("summary.csv", buf);
    Ok(out)
}

/// Three-asset covariance used when `demo` gets none: stds 1, 1.5, 2 and
/// correlations 0.3, 0.5, 0.1.
pub fn demo_covariance() -> DMatrix<f64> {
    let sd = [1.0, 1.5, 2.0];
    let rho = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.5, 0.3, 1.0, 0.1, 0.5, 0.1, 1.0]);
    DMatrix::from_fn(3, 3, |i, j| rho[(i, j)] * sd[i] * sd[j])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoStrategy {
    pub name: &'static str,
    pub weights: DVector<f64>,
    pub corr: DVector<f64>,
}

/// Equal-weight, equal-correlation and minimum-variance portfolios with
/// each asset's correlation to the portfolio.
pub fn demo(cov: &DMatrix<f64>) -> Result<(Vec<DemoStrategy>, OutputSet)> {
    let risk = RiskModel::new(cov.clone())?;
    let d = risk.dim();
    let portfolios = [
        ("equal_weight", DVector::from_element(d, 1.0 / d as f64)),
        ("equal_correlation", risk.w_eq()?.clone()),
        ("min_variance", risk.min_variance_weights()?),
    ];
    let strategies = portfolios
        .into_iter()
        .map(|(name, w)| {
            Ok(DemoStrategy {
                name,
                corr: risk.corr_vec(&w)?,
                weights: w,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut body = String::from("strategy,asset,weight,corr\n");
    for s in &strategies {
        for i in 0..d {
            body.push_str(&format!("{},{},{},{}\n", s.name, i + 1, s.weights[i], s.corr[i]));
        }
    }
    let mut out = OutputSet::default();
    out.add("demo.csv", body.into_bytes());
    Ok((strategies, out))
}

/// Read a square covariance matrix from a headerless CSV.
pub fn read_covariance(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.trim().parse::<f64>().map_err(|e| Error::Parse {
                    row: r + 1,
                    column: (c + 1).to_string(),
                    message: format!("{v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Argument(format!("{} is not a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

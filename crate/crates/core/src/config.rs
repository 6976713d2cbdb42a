//! Run configuration: a flat TOML key-value file whose keys the CLI flags
//! can override.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::backtest::{BacktestConfig, TuningMode};
use crate::error::{Error, Result};
use crate::market_data::WindowSpec;
use crate::models::{ModelSpec, DEFAULT_R_MIN};
use crate::optimizer::SolverConfig;
use crate::selection::Linkage;
use crate::tuning::TuningConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Price CSV: a `date` column then one close-price column per ticker.
    pub data: Option<PathBuf>,
    /// Optional file listing tickers to keep, one per line.
    pub universe: Option<PathBuf>,
    pub train_months: u32,
    pub test_months: u32,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub models: Vec<String>,
    pub k: usize,
    pub linkage: Linkage,
    pub grid_step: f64,
    pub filter_window: usize,
    pub tuning_mode: TuningMode,
    /// Minimum mean daily net % return for Type-1 models.
    pub r_min: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub random_starts: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let tuning = TuningConfig::default();
        Self {
            data: None,
            universe: None,
            train_months: 12,
            test_months: 1,
            first_year: None,
            last_year: None,
            models: vec!["A1-SC".into()],
            k: 20,
            linkage: Linkage::Average,
            grid_step: tuning.grid_step,
            filter_window: tuning.filter_window,
            tuning_mode: TuningMode::InSample,
            r_min: DEFAULT_R_MIN,
            max_iter: solver.max_iter,
            tol: solver.tol,
            random_starts: solver.n_random_starts,
            seed: 0,
            jobs: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("no data file given (set `data` or pass --data)".into()))
    }

    /// Parsed model list, with `r_min` applied.
    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".into()));
        }
        self.models
            .iter()
            .map(|m| ModelSpec::parse(m).map(|s| s.with_r_min(self.r_min)))
            .collect()
    }

    pub fn years(&self) -> Result<Option<(i32, i32)>> {
        match (self.first_year, self.last_year) {
            (None, None) => Ok(None),
            (Some(a), Some(b)) if a <= b => Ok(Some((a, b))),
            (Some(a), Some(b)) => Err(Error::Config(format!("first_year {a} is after last_year {b}"))),
            _ => Err(Error::Config("set both first_year and last_year, or neither".into())),
        }
    }

    pub fn backtest_config(&self) -> Result<BacktestConfig> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("solver needs tol > 0 and max_iter > 0".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        Ok(BacktestConfig {
            window: WindowSpec::new(self.train_months, self.test_months)?,
            k: self.k,
            linkage: self.linkage,
            solver: SolverConfig {
                max_iter: self.max_iter,
                tol: self.tol,
                n_random_starts: self.random_starts,
                seed: self.seed,
                ..SolverConfig::default()
            },
            tuning: TuningConfig {
                grid_step: self.grid_step,
                filter_window: self.filter_window,
            },
            tuning_mode: self.tuning_mode,
            years: self.years()?,
            last_month: None,
        })
    }
}

/// Tickers from a universe file: one per line, `#` comments and blank
/// lines ignored.
pub fn read_universe(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    let tickers: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if tickers.is_empty() {
        return Err(Error::EmptyUniverse(format!("{} lists no tickers", path.display())));
    }
    Ok(tickers)
}

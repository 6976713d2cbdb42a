//! Annual hyperparameter grid search scored by `-ES/Sharpe` and smoothed
//! with a mean filter before taking the argmin.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    pub grid_step: f64,
    /// Odd filter width; shrunk to fit coarse grids.
    pub filter_window: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            filter_window: 11,
        }
    }
}

/// `-ES/Sharpe` of daily gross % returns; lower is better.
///
/// ES averages the negative net returns (0 when there are none). A
/// non-positive Sharpe or a flat series scores `+inf`.
pub fn evaluation_value(daily_gross: &[f64]) -> Result<f64> {
    let n = daily_gross.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "evaluation needs at least 2 returns, found {n}"
        )));
    }
    let x: Vec<f64> = daily_gross.iter().map(|r| r - 100.0).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(sd > 0.0) {
        return Ok(f64::INFINITY);
    }
    let sharpe = 252f64.sqrt() * mean / sd;
    if !(sharpe > 0.0) {
        return Ok(f64::INFINITY);
    }
    let losses: Vec<f64> = x.iter().copied().filter(|v| *v < 0.0).collect();
    let es = if losses.is_empty() {
        0.0
    } else {
        losses.iter().sum::<f64>() / losses.len() as f64
    };
    Ok(-es / sharpe)
}

/// Multiples of `step` inside `[0.01, 0.99]`, ascending.
pub fn grid(step: f64) -> Result<Vec<f64>> {
    if !(0.01 - 1e-12..=0.5).contains(&step) {
        return Err(Error::Argument(format!("grid step {step} must lie in [0.01, 0.5]")));
    }
    let mut out = Vec::new();
    let mut k = 1usize;
    loop {
        let v = ((k as f64 * step) * 1e12).round() / 1e12;
        if v > 0.99 + 1e-12 {
            break;
        }
        if v >= 0.01 - 1e-12 {
            out.push(v);
        }
        k += 1;
    }
    Ok(out)
}

fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Argument(format!("filter window {window} must be odd")));
    }
    Ok(())
}

/// Each entry becomes the mean of its `window` nearest entries; the window
/// slides inward at the edges so it always covers `window` points.
pub fn mean_filter_1d(v: &[f64], window: usize) -> Result<Vec<f64>> {
    check_window(window)?;
    let n = v.len();
    if window > n {
        return Err(Error::Argument(format!("filter window {window} exceeds length {n}")));
    }
    let half = window / 2;
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - window);
            v[start..start + window].iter().sum::<f64>() / window as f64
        })
        .collect())
}

/// Mean over the clipped `window x window` neighbourhood restricted to
/// feasible cells. Infeasible cells come out as NaN.
pub fn mean_filter_2d(m: &DMatrix<f64>, mask: &DMatrix<bool>, window: usize) -> Result<DMatrix<f64>> {
    check_window(window)?;
    if m.shape() != mask.shape() {
        return Err(Error::Argument("values and mask shapes differ".into()));
    }
    let (r, c) = m.shape();
    let half = window / 2;
    Ok(DMatrix::from_fn(r, c, |i, j| {
        if !mask[(i, j)] {
            return f64::NAN;
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for a in i.saturating_sub(half)..(i + half + 1).min(r) {
            for b in j.saturating_sub(half)..(j + half + 1).min(c) {
                if mask[(a, b)] {
                    sum += m[(a, b)];
                    count += 1;
                }
            }
        }
        sum / count as f64
    }))
}

/// Raw scores over the grid. 1-D grids are stored as a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    pub lambdas: Vec<f64>,
    pub values: DMatrix<f64>,
    pub mask: DMatrix<bool>,
    pub two_d: bool,
}

impl EvaluationGrid {
    /// Feasibility mask for `n` grid values: `l1 + l2 <= 1` in 2-D.
    fn mask_for(lambdas: &[f64], two_d: bool) -> DMatrix<bool> {
        let n = lambdas.len();
        if two_d {
            DMatrix::from_fn(n, n, |i, j| lambdas[i] + lambdas[j] <= 1.0 + 1e-9)
        } else {
            DMatrix::from_element(1, n, true)
        }
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, Option<f64>) {
        if self.two_d {
            (self.lambdas[i], Some(self.lambdas[j]))
        } else {
            (self.lambdas[j], None)
        }
    }

    /// Smoothed scores; masked cells are NaN.
    pub fn filtered(&self, window: usize) -> Result<DMatrix<f64>> {
        let n = self.lambdas.len();
        let w = effective_window(window, n);
        if self.two_d {
            mean_filter_2d(&self.values, &self.mask, w)
        } else {
            let row: Vec<f64> = self.values.iter().copied().collect();
            Ok(DMatrix::from_row_slice(1, n, &mean_filter_1d(&row, w)?))
        }
    }
}

/// Largest odd width not above `window` or `n`.
fn effective_window(window: usize, n: usize) -> usize {
    let w = window.min(n).max(1);
    if w.is_multiple_of(2) {
        w - 1
    } else {
        w
    }
}

/// Row-major argmin over finite feasible cells, so ties go to the smaller
/// `l1` and then the smaller `l2`.
pub fn argmin(values: &DMatrix<f64>, mask: &DMatrix<bool>) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            let v = values[(i, j)];
            if mask[(i, j)] && v.is_finite() && best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOutcome {
    pub lambda1: f64,
    pub lambda2: Option<f64>,
    pub raw: EvaluationGrid,
    pub filtered: DMatrix<f64>,
}

impl TuningOutcome {
    pub fn apply(&self, spec: &ModelSpec) -> ModelSpec {
        spec.with_hyper(Some(self.lambda1), self.lambda2)
    }
}

/// Errors that disqualify a grid point instead of aborting the search.
fn scores_infinite(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible(_)
            | Error::Numeric(_)
            | Error::Singular(_)
            | Error::DegeneratePortfolio(_)
            | Error::Estimation(_)
    )
}

/// Grid-search `spec`'s hyperparameters. `daily_returns` runs the model
/// with the given hyperparameters over the tuning period and returns its
/// daily gross % returns.
pub fn tune<F>(spec: &ModelSpec, cfg: &TuningConfig, daily_returns: F) -> Result<TuningOutcome>
where
    F: Fn(&ModelSpec) -> Result<Vec<f64>> + Sync,
{
    let n_hyper = spec.kind.n_hyper();
    if n_hyper == 0 {
        return Err(Error::Spec(format!("{} has no hyperparameters to tune", spec.kind)));
    }
    check_window(cfg.filter_window)?;
    let lambdas = grid(cfg.grid_step)?;
    let two_d = n_hyper == 2;
    let mask = EvaluationGrid::mask_for(&lambdas, two_d);
    let cells: Vec<(usize, usize)> = (0..mask.nrows())
        .flat_map(|i| (0..mask.ncols()).map(move |j| (i, j)))
        .filter(|&(i, j)| mask[(i, j)])
        .collect();
    let point = |i: usize, j: usize| {
        if two_d {
            (lambdas[i], Some(lambdas[j]))
        } else {
            (lambdas[j], None)
        }
    };
    let scores: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (l1, l2) = point(i, j);
            let candidate = spec.with_hyper(Some(l1), l2);
            match daily_returns(&candidate).and_then(|r| evaluation_value(&r)) {
                Ok(v) => Ok(v),
                Err(e) if scores_infinite(&e) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut values = DMatrix::from_element(mask.nrows(), mask.ncols(), f64::NAN);
    for (&(i, j), s) in cells.iter().zip(scores) {
        values[(i, j)] = s?;
    }
    let raw = EvaluationGrid {
        lambdas,
        values,
        mask,
        two_d,
    };
    let filtered = raw.filtered(cfg.filter_window)?;
    let (i, j) = argmin(&filtered, &raw.mask).ok_or_else(|| {
        Error::Tuning(format!("every grid point of {} scored +inf", spec.name()))
    })?;
    let (lambda1, lambda2) = raw.point(i, j);
    Ok(TuningOutcome {
        lambda1,
        lambda2,
        raw,
        filtered,
    })
}

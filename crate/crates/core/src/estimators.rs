//! Moment estimates over a training window.
//!
//! Sample covariance uses the 1/N normalization throughout. Shrinkage blends
//! it with a constant-correlation target `F`:
//!
//! ```text
//! S = (1 - lambda) * Sigma_hat + lambda * F
//! ```
//!
//! Two data-driven intensity estimators are provided:
//!
//! * [`ShrinkageMethod::Sc`]: the Ledoit-Wolf (2004) constant-correlation
//!   estimator, `lambda = max(0, min(1, (pi - rho) / gamma / N))`, with all
//!   moments computed under 1/N.
//! * [`ShrinkageMethod::Uscc`]: the unbiased variant, which estimates
//!   `Var(s_ij)` and `Cov(s_ii, s_ij)` with the `N / (N-1)^3` correction on
//!   the 1/(N-1) sample covariance (Schafer-Strimmer form of the same target).
//!
//! Either result is clipped into `[0.01, 0.99]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market_data::ReturnsPanel;

/// Lower clip for shrinkage intensity; the upper clip is `1 - LAMBDA_MIN`.
pub const LAMBDA_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShrinkageMethod {
    /// Ledoit-Wolf constant-correlation shrinkage.
    Sc,
    /// Unbiased shrinkage toward constant correlation.
    Uscc,
    /// User-supplied intensity.
    Fixed(f64),
}

impl fmt::Display for ShrinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShrinkageMethod::Sc => write!(f, "SC"),
            ShrinkageMethod::Uscc => write!(f, "USCC"),
            ShrinkageMethod::Fixed(l) => write!(f, "FIXED{l}"),
        }
    }
}

impl FromStr for ShrinkageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        match up.as_str() {
            "SC" => Ok(ShrinkageMethod::Sc),
            "USCC" => Ok(ShrinkageMethod::Uscc),
            _ => {
                let rest = up
                    .strip_prefix("FIXED")
                    .ok_or_else(|| Error::Spec(format!("unknown covariance method {s:?}")))?;
                let l: f64 = rest
                    .trim_start_matches(['(', ':'])
                    .trim_end_matches(')')
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad fixed intensity in {s:?}")))?;
                if !(l > 0.0 && l < 1.0) {
                    return Err(Error::Spec(format!("fixed intensity {l} not in (0,1)")));
                }
                Ok(ShrinkageMethod::Fixed(l))
            }
        }
    }
}

/// Mean vector of gross % returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector(pub DVector<f64>);

/// A blended covariance estimate.
#[derive(Debug, Clone)]
pub struct ShrinkageEstimate {
    /// The blended matrix `S`.
    pub s: DMatrix<f64>,
    /// Intensity actually used, after clipping.
    pub lambda: f64,
    pub method: ShrinkageMethod,
    /// Diagonal of `S` (the `Lambda` matrix of the correlation-variance form).
    pub lambda_diag: DVector<f64>,
    /// Set when `S` needed a ridge to become positive definite.
    pub repaired: bool,
}

impl ShrinkageEstimate {
    /// Smallest eigenvalue of `S`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.s
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.s.clone().cholesky().is_some()
    }
}

pub fn sample_mean(train: &ReturnsPanel) -> Result<MeanVector> {
    let n = train.n_obs();
    if n == 0 {
        return Err(Error::InsufficientData("mean of an empty window".into()));
    }
    let mu = DVector::from_fn(train.n_assets(), |i, _| {
        train.returns.column(i).iter().sum::<f64>() / n as f64
    });
    Ok(MeanVector(mu))
}

fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let m = col.iter().sum::<f64>() / n;
        col.add_scalar_mut(-m);
    }
    c
}

/// `(1/N) X' (I - J/N) X`.
pub fn sample_cov(train: &ReturnsPanel) -> Result<DMatrix<f64>> {
    let n = train.n_obs();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "covariance needs at least 2 observations, found {n}"
        )));
    }
    let xc = centered(&train.returns);
    let mut cov = xc.tr_mul(&xc) / n as f64;
    symmetrize(&mut cov);
    Ok(cov)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Mean of the off-diagonal correlations implied by `cov`.
pub fn average_correlation(cov: &DMatrix<f64>) -> f64 {
    let d = cov.nrows();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                total += cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
            }
        }
    }
    total / (d * (d - 1)) as f64
}

/// Covariance with the sample variances and a single average correlation.
pub fn constant_correlation_target(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    if d < 2 {
        return Err(Error::DegenerateUniverse(format!(
            "constant-correlation target needs at least 2 assets, found {d}"
        )));
    }
    if let Some(i) = (0..d).find(|&i| !(cov[(i, i)] > 0.0)) {
        return Err(Error::Estimation(format!(
            "asset {i} has non-positive variance {}",
            cov[(i, i)]
        )));
    }
    let r_bar = average_correlation(cov);
    Ok(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            cov[(i, i)]
        } else {
            r_bar * (cov[(i, i)] * cov[(j, j)]).sqrt()
        }
    }))
}

/// Ledoit-Wolf constant-correlation intensity, unclipped. `None` when the
/// target coincides with the sample covariance.
fn ledoit_wolf_intensity(train: &ReturnsPanel, cov: &DMatrix<f64>, target: &DMatrix<f64>) -> Option<f64> {
    let t = train.n_obs() as f64;
    let d = cov.nrows();
    let x = centered(&train.returns);
    let r_bar = average_correlation(cov);
    let sd: Vec<f64> = (0..d).map(|i| cov[(i, i)].sqrt()).collect();

    // pi_ij = mean_t (x_ti x_tj - s_ij)^2
    let mut pi = DMatrix::zeros(d, d);
    // theta_ij = mean_t (x_ti^2 - s_ii)(x_ti x_tj - s_ij)
    let mut theta = DMatrix::zeros(d, d);
    for row in x.row_iter() {
        for i in 0..d {
            let xi = row[i];
            let sq = xi * xi - cov[(i, i)];
            for j in 0..d {
                let p = xi * row[j] - cov[(i, j)];
                pi[(i, j)] += p * p;
                theta[(i, j)] += sq * p;
            }
        }
    }
    pi /= t;
    theta /= t;

    let pi_sum: f64 = pi.iter().sum();
    let mut rho = (0..d).map(|i| pi[(i, i)]).sum::<f64>();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                rho += 0.5
                    * r_bar
                    * ((sd[j] / sd[i]) * theta[(i, j)] + (sd[i] / sd[j]) * theta[(j, i)]);
            }
        }
    }
    let gamma: f64 = (cov - target).iter().map(|v| v * v).sum();
    let scale: f64 = cov.iter().map(|v| v * v).sum();
    if gamma <= 1e-28 * scale {
        return None;
    }
    Some((pi_sum - rho) / gamma / t)
}

/// Unbiased constant-correlation intensity, unclipped.
fn unbiased_intensity(train: &ReturnsPanel, cov: &DMatrix<f64>) -> Option<f64> {
    let n = train.n_obs() as f64;
    let d = cov.nrows();
    let x = centered(&train.returns);
    let s = cov * (n / (n - 1.0));
    let r_bar = average_correlation(&s);
    let sd: Vec<f64> = (0..d).map(|i| s[(i, i)].sqrt()).collect();

    // w_tij = x_ti x_tj, wbar_ij = mean_t w_tij
    let wbar = x.tr_mul(&x) / n;
    let mut var_s = DMatrix::zeros(d, d);
    let mut cov_s = DMatrix::zeros(d, d); // Cov(s_ii, s_ij)
    for row in x.row_iter() {
        for i in 0..d {
            let dii = row[i] * row[i] - wbar[(i, i)];
            for j in 0..d {
                let dij = row[i] * row[j] - wbar[(i, j)];
                var_s[(i, j)] += dij * dij;
                cov_s[(i, j)] += dii * dij;
            }
        }
    }
    let factor = n / (n - 1.0).powi(3);
    var_s *= factor;
    cov_s *= factor;

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let f = 0.5 * ((sd[j] / sd[i]) * cov_s[(i, j)] + (sd[i] / sd[j]) * cov_s[(j, i)]);
            num += var_s[(i, j)] - r_bar * f;
            let diff = s[(i, j)] - r_bar * sd[i] * sd[j];
            den += diff * diff;
        }
    }
    let scale: f64 = s.iter().map(|v| v * v).sum();
    if den <= 1e-28 * scale {
        return None;
    }
    Some(num / den)
}

/// Blend `cov` toward `target` with an intensity chosen by `method`.
///
/// When the target coincides with the sample covariance the blend is the
/// same for every intensity and the upper clip is reported.
pub fn shrink(
    cov: &DMatrix<f64>,
    target: &DMatrix<f64>,
    method: ShrinkageMethod,
    train: &ReturnsPanel,
) -> Result<ShrinkageEstimate> {
    let d = cov.nrows();
    if cov.shape() != target.shape() || cov.ncols() != d || train.n_assets() != d {
        return Err(Error::Argument(format!(
            "shape mismatch: cov {:?}, target {:?}, panel width {}",
            cov.shape(),
            target.shape(),
            train.n_assets()
        )));
    }
    let raw = match method {
        ShrinkageMethod::Fixed(l) => Some(l),
        ShrinkageMethod::Sc => ledoit_wolf_intensity(train, cov, target),
        ShrinkageMethod::Uscc => unbiased_intensity(train, cov),
    };
    let lambda = match raw {
        Some(l) if !l.is_finite() => {
            return Err(Error::Estimation(format!("{method} intensity is not finite: {l}")))
        }
        Some(l) => l.clamp(LAMBDA_MIN, 1.0 - LAMBDA_MIN),
        None => 1.0 - LAMBDA_MIN,
    };
    let mut s = cov * (1.0 - lambda) + target * lambda;
    symmetrize(&mut s);
    let repaired = repair_positive_definite(&mut s)?;
    Ok(ShrinkageEstimate {
        lambda_diag: s.diagonal(),
        s,
        lambda,
        method,
        repaired,
    })
}

/// Add `eps * I` (starting at `1e-8 * trace / d`, growing tenfold) until the
/// matrix admits a Cholesky factorization. Returns whether a ridge was added.
pub fn repair_positive_definite(s: &mut DMatrix<f64>) -> Result<bool> {
    if s.clone().cholesky().is_some() {
        return Ok(false);
    }
    let d = s.nrows();
    let trace = s.trace();
    if !(trace.is_finite() && trace > 0.0) {
        return Err(Error::Estimation(format!("cannot repair matrix with trace {trace}")));
    }
    let mut eps = 1e-8 * trace / d as f64;
    let mut added = 0.0;
    for _ in 0..12 {
        for i in 0..d {
            s[(i, i)] += eps - added;
        }
        added = eps;
        if s.clone().cholesky().is_some() {
            return Ok(true);
        }
        eps *= 10.0;
    }
    Err(Error::Estimation("positive-definite repair failed".into()))
}

/// Sample covariance, constant-correlation target and shrinkage in one step.
pub fn estimate_covariance(train: &ReturnsPanel, method: ShrinkageMethod) -> Result<ShrinkageEstimate> {
    let cov = sample_cov(train)?;
    let target = constant_correlation_target(&cov)?;
    shrink(&cov, &target, method, train)
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation matrix plus the indices of zero-variance
/// columns, whose correlations are reported as 0.
pub fn spearman_matrix(train: &ReturnsPanel) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let n = train.n_obs();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "spearman correlation needs at least 3 observations, found {n}"
        )));
    }
    let d = train.n_assets();
    let mut centered_ranks: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut norms = Vec::with_capacity(d);
    for i in 0..d {
        let mut r = ranks(&train.column(i));
        let m = r.iter().sum::<f64>() / n as f64;
        r.iter_mut().for_each(|v| *v -= m);
        norms.push(r.iter().map(|v| v * v).sum::<f64>().sqrt());
        centered_ranks.push(r);
    }
    let flat: Vec<usize> = (0..d).filter(|&i| norms[i] == 0.0).collect();
    let mut out = DMatrix::identity(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = centered_ranks[i]
                    .iter()
                    .zip(&centered_ranks[j])
                    .map(|(a, b)| a * b)
                    .sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok((out, flat))
}

//! Equal-correlation risk measures over a covariance estimate `S`.
//!
//! For a weight vector `w` the correlation of asset `i` with the portfolio is
//!
//! ```text
//! rho_i(w) = (S w)_i / (sqrt(w' S w) * sqrt(S_ii))
//! ```
//!
//! The equal-correlation portfolio makes all `rho_i` identical; it solves
//! `S x = sqrt(diag S)` normalized to `1' x = 1`. Two measures of distance
//! from that state are exposed: the squared Euclidean distance to `w_eq` and
//! the population variance of `rho(w)`,
//!
//! ```text
//! sigma_rho^2(w) = (1/d) * w' S L (I - J/d) L S w / (w' S w),  L = diag(S)^(-1/2)
//! ```

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::estimators::ShrinkageEstimate;

/// Below this `|1' S^-1 std|` the equal-correlation normalization is singular.
pub const NORMALIZATION_EPS: f64 = 1e-12;

/// Precomputed view of a positive-definite covariance used by every risk
/// measure and by the model objectives.
#[derive(Debug, Clone)]
pub struct RiskModel {
    s: DMatrix<f64>,
    std: DVector<f64>,
    inv_std: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    w_eq: std::result::Result<DVector<f64>, f64>,
}

impl RiskModel {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        let d = s.nrows();
        if d == 0 || s.ncols() != d {
            return Err(Error::Argument(format!("covariance must be square, got {:?}", s.shape())));
        }
        let asym = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (s[(i, j)] - s[(j, i)]).abs())
            .fold(0.0, f64::max);
        let scale = s.amax().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::Argument(format!("covariance is not symmetric (gap {asym:e})")));
        }
        let chol = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Estimation("covariance is not positive definite".into()))?;
        let std = s.diagonal().map(f64::sqrt);
        let inv_std = std.map(|v| 1.0 / v);

        let x = chol.solve(&std);
        let total = x.sum();
        let w_eq = if total.abs() < NORMALIZATION_EPS {
            Err(total)
        } else {
            Ok(x / total)
        };
        Ok(Self {
            s,
            std,
            inv_std,
            chol,
            w_eq,
        })
    }

    pub fn from_estimate(est: &ShrinkageEstimate) -> Result<Self> {
        Self::new(est.s.clone())
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// `sqrt(diag S)`.
    pub fn std_devs(&self) -> &DVector<f64> {
        &self.std
    }

    /// Solve `S x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn variance(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.s * w))
    }

    pub fn variance_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.s * w)
    }

    fn check_dim(&self, w: &DVector<f64>) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::Argument(format!(
                "weight vector has length {}, covariance is {}x{}",
                w.len(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn portfolio_variance_checked(&self, w: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        self.check_dim(w)?;
        let sw = &self.s * w;
        let q = w.dot(&sw);
        if !(q > 0.0) {
            return Err(Error::DegeneratePortfolio(format!("w'Sw = {q:e}")));
        }
        Ok((sw, q))
    }

    /// Correlation of every asset with the portfolio return.
    pub fn corr_vec(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let (sw, q) = self.portfolio_variance_checked(w)?;
        Ok(sw.component_mul(&self.inv_std) / q.sqrt())
    }

    /// Equal-correlation weights.
    pub fn w_eq(&self) -> Result<&DVector<f64>> {
        self.w_eq.as_ref().map_err(|&t| Error::Singular(t))
    }

    pub fn d_eq_sq(&self, w: &DVector<f64>) -> Result<f64> {
        self.check_dim(w)?;
        Ok((w - self.w_eq()?).norm_squared())
    }

    pub fn d_eq_sq_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(w)?;
        Ok(2.0 * (w - self.w_eq()?))
    }

    /// `y = L S w` centered, plus `S w` and `w' S w`.
    fn centered_scaled(&self, w: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>, f64)> {
        let (sw, q) = self.portfolio_variance_checked(w)?;
        let mut y = sw.component_mul(&self.inv_std);
        let mean = y.mean();
        y.add_scalar_mut(-mean);
        Ok((y, sw, q))
    }

    /// Correlation variance via the quadratic-form ratio.
    pub fn sigma_rho_sq(&self, w: &DVector<f64>) -> Result<f64> {
        let (y, _, q) = self.centered_scaled(w)?;
        let d = self.dim() as f64;
        Ok((y.norm_squared() / d / q).max(0.0))
    }

    /// Gradient of `p(w) / q(w)` with `p = w'Aw`, `A = S L (I - J/d) L S / d`
    /// and `q = w'Sw`: `(2 A w q - 2 S w p) / q^2`.
    pub fn sigma_rho_sq_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let (y, sw, q) = self.centered_scaled(w)?;
        let d = self.dim() as f64;
        let p = y.norm_squared() / d;
        // A w = S L y / d, since (I - J/d) L S w is the centered y.
        let aw = &self.s * y.component_mul(&self.inv_std) / d;
        Ok((aw * (2.0 * q) - sw * (2.0 * p)) / (q * q))
    }

    /// Unconstrained minimum-variance weights `S^-1 1 / 1' S^-1 1`.
    pub fn min_variance_weights(&self) -> Result<DVector<f64>> {
        let x = self.solve(&DVector::from_element(self.dim(), 1.0));
        let total = x.sum();
        if total.abs() < NORMALIZATION_EPS {
            return Err(Error::Singular(total));
        }
        Ok(x / total)
    }
}

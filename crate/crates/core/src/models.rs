//! The portfolio model catalog.
//!
//! Four risk categories crossed with three objective types:
//!
//! | model | objective                                                      |
//! |-------|----------------------------------------------------------------|
//! | A1    | min w'Sw, mean floor                                            |
//! | A2    | max (1-l1) m(w) - l1 w'Sw                                        |
//! | A3    | max m(w) / sqrt(w'Sw)                                            |
//! | B1    | min (1-l1) w'Sw + l1 d_eq^2(w), mean floor                       |
//! | B2    | max (1-l1-l2) m(w) - l1 w'Sw - l2 d_eq^2(w)                      |
//! | B3    | max (1-l1) m(w)/sqrt(w'Sw) - l1 d_eq^2(w)                        |
//! | C1    | min sigma_rho^2(w), mean floor                                   |
//! | C2    | max (1-l1) m(w) - l1 sigma_rho^2(w)                              |
//! | C3    | max (1-l1) m(w)/sqrt(w'Sw) - l1 sigma_rho^2(w)                   |
//! | D1    | min (1-l1) w'Sw + l1 sigma_rho^2(w), mean floor                  |
//! | D2    | max (1-l1-l2) m(w) - l1 w'Sw - l2 sigma_rho^2(w)                 |
//!
//! where `m(w) = w'mu - 100` is the mean daily net % return. Every problem
//! is returned in minimization form; the budget `1'w = 1` and leverage
//! `||w||_1 <= 2` constraints are implied by the feasible set.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimators::{MeanVector, ShrinkageMethod};
use crate::risk::RiskModel;

/// Leverage cap `||w||_1 <= 2`.
pub const MAX_LEVERAGE: f64 = 2.0;

/// Default minimum daily % return for Type-1 models (3% monthly).
pub const DEFAULT_R_MIN: f64 = 0.148;

/// Below this portfolio variance Sharpe-type objectives evaluate to `+inf`.
pub const SHARPE_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    A,
    B,
    C,
    D,
}

/// The eleven valid (category, type) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    A1,
    A2,
    A3,
    B1,
    B2,
    B3,
    C1,
    C2,
    C3,
    D1,
    D2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 11] = [
        ModelKind::A1,
        ModelKind::A2,
        ModelKind::A3,
        ModelKind::B1,
        ModelKind::B2,
        ModelKind::B3,
        ModelKind::C1,
        ModelKind::C2,
        ModelKind::C3,
        ModelKind::D1,
        ModelKind::D2,
    ];

    pub fn new(category: Category, model_type: u8) -> Result<Self> {
        use Category::*;
        Ok(match (category, model_type) {
            (A, 1) => ModelKind::A1,
            (A, 2) => ModelKind::A2,
            (A, 3) => ModelKind::A3,
            (B, 1) => ModelKind::B1,
            (B, 2) => ModelKind::B2,
            (B, 3) => ModelKind::B3,
            (C, 1) => ModelKind::C1,
            (C, 2) => ModelKind::C2,
            (C, 3) => ModelKind::C3,
            (D, 1) => ModelKind::D1,
            (D, 2) => ModelKind::D2,
            _ => {
                return Err(Error::Spec(format!(
                    "no model of category {category:?} and type {model_type}"
                )))
            }
        })
    }

    pub fn category(self) -> Category {
        use ModelKind::*;
        match self {
            A1 | A2 | A3 => Category::A,
            B1 | B2 | B3 => Category::B,
            C1 | C2 | C3 => Category::C,
            D1 | D2 => Category::D,
        }
    }

    pub fn model_type(self) -> u8 {
        use ModelKind::*;
        match self {
            A1 | B1 | C1 | D1 => 1,
            A2 | B2 | C2 | D2 => 2,
            A3 | B3 | C3 => 3,
        }
    }

    /// Number of hyperparameters (0, 1 or 2).
    pub fn n_hyper(self) -> usize {
        use ModelKind::*;
        match self {
            A1 | A3 | C1 => 0,
            A2 | B1 | B3 | C2 | C3 | D1 => 1,
            B2 | D2 => 2,
        }
    }

    pub fn has_mean_floor(self) -> bool {
        self.model_type() == 1
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let (Some(c), Some(t), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::Spec(format!("invalid model {s:?}")));
        };
        let category = match c.to_ascii_uppercase() {
            'A' => Category::A,
            'B' => Category::B,
            'C' => Category::C,
            'D' => Category::D,
            _ => return Err(Error::Spec(format!("invalid model {s:?}: unknown category {c:?}"))),
        };
        let model_type = t
            .to_digit(10)
            .ok_or_else(|| Error::Spec(format!("invalid model {s:?}: bad type {t:?}")))?;
        ModelKind::new(category, model_type as u8)
            .map_err(|_| Error::Spec(format!("invalid model {s:?}")))
    }
}

/// One fully parameterized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub cov_method: ShrinkageMethod,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Minimum mean daily net % return for Type-1 models.
    pub r_min: f64,
}

impl ModelSpec {
    /// A spec without hyperparameter values.
    pub fn new(kind: ModelKind, cov_method: ShrinkageMethod) -> Self {
        Self {
            kind,
            cov_method,
            lambda1: None,
            lambda2: None,
            r_min: DEFAULT_R_MIN,
        }
    }

    pub fn with_hyper(mut self, lambda1: Option<f64>, lambda2: Option<f64>) -> Self {
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self
    }

    pub fn with_r_min(mut self, r_min: f64) -> Self {
        self.r_min = r_min;
        self
    }

    /// Table name such as `A1-SC` or `C3-USCC`.
    pub fn name(&self) -> String {
        format!("{}-{}", self.kind, self.cov_method)
    }

    /// Parse `A1-SC`, `C3-USCC`, `B2-FIXED0.3`.
    pub fn parse(name: &str) -> Result<Self> {
        let (kind, method) = name
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::Spec(format!("invalid model name {name:?}: expected KIND-METHOD")))?;
        Ok(Self::new(kind.parse()?, method.parse()?))
    }

    /// Check hyperparameter arity and ranges.
    pub fn validate(&self) -> Result<()> {
        let present = self.lambda1.is_some() as usize + self.lambda2.is_some() as usize;
        let want = self.kind.n_hyper();
        if present != want || (self.lambda2.is_some() && self.lambda1.is_none()) {
            return Err(Error::Spec(format!(
                "{} takes {want} hyperparameter(s), got {present}",
                self.kind
            )));
        }
        for l in [self.lambda1, self.lambda2].into_iter().flatten() {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::Spec(format!("hyperparameter {l} not in [0,1]")));
            }
        }
        if let (Some(a), Some(b)) = (self.lambda1, self.lambda2) {
            if a + b > 1.0 + 1e-12 {
                return Err(Error::Spec(format!("l1 + l2 = {} exceeds 1", a + b)));
            }
        }
        if !self.r_min.is_finite() {
            return Err(Error::Spec("r_min must be finite".into()));
        }
        Ok(())
    }
}

/// Compound-equivalent daily % return for a monthly % target, 20 trading
/// days per month.
pub fn r_min_from_monthly(monthly_pct: f64) -> Result<f64> {
    if !(monthly_pct > -100.0) {
        return Err(Error::Argument(format!("monthly return {monthly_pct} must exceed -100")));
    }
    Ok(100.0 * ((1.0 + monthly_pct / 100.0).powf(1.0 / 20.0) - 1.0))
}

/// A linear inequality `a'w <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub a: DVector<f64>,
    pub b: f64,
    pub label: String,
}

impl LinearConstraint {
    /// `g(w) = a'w - b`; feasible when `<= 0`.
    pub fn value(&self, w: &DVector<f64>) -> f64 {
        self.a.dot(w) - self.b
    }

    pub fn gradient(&self) -> &DVector<f64> {
        &self.a
    }
}

/// Weights on the terms of a minimization objective.
///
/// `value(w) = -ret * m(w) + var * w'Sw + deq * d_eq^2(w)
///             + srho * sigma_rho^2(w) - sharpe * m(w)/sqrt(w'Sw)`
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermWeights {
    pub ret: f64,
    pub var: f64,
    pub deq: f64,
    pub srho: f64,
    pub sharpe: f64,
}

/// A model ready for the optimizer.
#[derive(Debug, Clone)]
pub struct ObjectiveProblem {
    pub name: String,
    pub terms: TermWeights,
    pub mu: DVector<f64>,
    pub risk: Arc<RiskModel>,
    /// Model-specific constraints beyond budget and leverage.
    pub constraints: Vec<LinearConstraint>,
}

impl ObjectiveProblem {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean_return(&self, w: &DVector<f64>) -> f64 {
        w.dot(&self.mu) - 100.0
    }

    pub fn value(&self, w: &DVector<f64>) -> f64 {
        self.value_and_gradient(w, false).0
    }

    pub fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.value_and_gradient(w, true).1
    }

    /// Objective value and (when `with_grad`) gradient, assembled term by term.
    /// Non-finite values signal points the optimizer must avoid.
    pub fn value_and_gradient(&self, w: &DVector<f64>, with_grad: bool) -> (f64, DVector<f64>) {
        let t = &self.terms;
        let d = self.dim();
        let mut value = 0.0;
        let mut grad = DVector::zeros(if with_grad { d } else { 0 });
        let m = self.mean_return(w);

        if t.ret != 0.0 {
            value -= t.ret * m;
            if with_grad {
                grad.axpy(-t.ret, &self.mu, 1.0);
            }
        }
        let needs_var = t.var != 0.0 || t.sharpe != 0.0;
        let sw = if needs_var { Some(self.risk.covariance() * w) } else { None };
        let q = sw.as_ref().map(|sw| w.dot(sw)).unwrap_or(0.0);
        if t.var != 0.0 {
            value += t.var * q;
            if with_grad {
                grad.axpy(2.0 * t.var, sw.as_ref().expect("computed"), 1.0);
            }
        }
        if t.sharpe != 0.0 {
            if !(q >= SHARPE_VARIANCE_FLOOR) {
                return (f64::INFINITY, grad);
            }
            let sd = q.sqrt();
            value -= t.sharpe * m / sd;
            if with_grad {
                // d/dw [m / sqrt(q)] = mu / sqrt(q) - m * Sw / q^(3/2)
                grad.axpy(-t.sharpe / sd, &self.mu, 1.0);
                grad.axpy(t.sharpe * m / (q * sd), sw.as_ref().expect("computed"), 1.0);
            }
        }
        if t.deq != 0.0 {
            match self.risk.d_eq_sq(w) {
                Ok(v) => {
                    value += t.deq * v;
                    if with_grad {
                        let g = self.risk.d_eq_sq_gradient(w).expect("w_eq available");
                        grad.axpy(t.deq, &g, 1.0);
                    }
                }
                Err(_) => return (f64::NAN, grad),
            }
        }
        if t.srho != 0.0 {
            match self.risk.sigma_rho_sq(w) {
                Ok(v) => {
                    value += t.srho * v;
                    if with_grad {
                        let g = self.risk.sigma_rho_sq_gradient(w).expect("same precondition");
                        grad.axpy(t.srho, &g, 1.0);
                    }
                }
                Err(_) => return (f64::INFINITY, grad),
            }
        }
        (value, grad)
    }
}

/// Assemble the objective and constraints of `spec` over the estimates.
pub fn build(spec: &ModelSpec, mu: &MeanVector, risk: Arc<RiskModel>) -> Result<ObjectiveProblem> {
    spec.validate()?;
    let d = mu.0.len();
    if risk.dim() != d {
        return Err(Error::Argument(format!(
            "mean vector has {d} entries, covariance is {}x{}",
            risk.dim(),
            risk.dim()
        )));
    }
    let l1 = spec.lambda1.unwrap_or(0.0);
    let l2 = spec.lambda2.unwrap_or(0.0);
    use ModelKind::*;
    let terms = match spec.kind {
        A1 => TermWeights { var: 1.0, ..Default::default() },
        A2 => TermWeights { ret: 1.0 - l1, var: l1, ..Default::default() },
        A3 => TermWeights { sharpe: 1.0, ..Default::default() },
        B1 => TermWeights { var: 1.0 - l1, deq: l1, ..Default::default() },
        B2 => TermWeights { ret: 1.0 - l1 - l2, var: l1, deq: l2, ..Default::default() },
        B3 => TermWeights { sharpe: 1.0 - l1, deq: l1, ..Default::default() },
        C1 => TermWeights { srho: 1.0, ..Default::default() },
        C2 => TermWeights { ret: 1.0 - l1, srho: l1, ..Default::default() },
        C3 => TermWeights { sharpe: 1.0 - l1, srho: l1, ..Default::default() },
        D1 => TermWeights { var: 1.0 - l1, srho: l1, ..Default::default() },
        D2 => TermWeights { ret: 1.0 - l1 - l2, var: l1, srho: l2, ..Default::default() },
    };
    if terms.deq != 0.0 {
        risk.w_eq()?;
    }
    let mut constraints = Vec::new();
    if spec.kind.has_mean_floor() {
        // r_min - (w'mu - 100) <= 0
        constraints.push(LinearConstraint {
            a: -&mu.0,
            b: -(100.0 + spec.r_min),
            label: "mean_floor".into(),
        });
    }
    Ok(ObjectiveProblem {
        name: spec.name(),
        terms,
        mu: mu.0.clone(),
        risk,
        constraints,
    })
}

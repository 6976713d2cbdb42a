//! Constrained minimization over `{w : 1'w = 1, ||w||_1 <= 2, a_j'w <= b_j}`.
//!
//! The engine is a nonmonotone spectral projected-gradient method. Every
//! iterate is the exact Euclidean projection of a trial point onto the
//! feasible polytope, so feasibility never depends on convergence.
//!
//! Projection onto `{1'w = 1, ||w||_1 <= L}` reduces to two threshold
//! problems: when the leverage cap binds, the positive part of `w` sums to
//! `(L+1)/2` and the negative part to `(L-1)/2`, each a shifted soft
//! threshold of the input. Extra half-spaces are handled by dual coordinate
//! ascent on their multipliers, each a monotone one-dimensional root.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{LinearConstraint, ObjectiveProblem, MAX_LEVERAGE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Projected-gradient infinity-norm tolerance.
    pub tol: f64,
    /// Maximum constraint violation accepted as converged.
    pub constraint_tol: f64,
    pub n_random_starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
            constraint_tol: 1e-8,
            n_random_starts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub w: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts_used: usize,
    pub active_constraints: Vec<String>,
}

/// Solve `sum_i (y_i - t)_+ = target` for `t`; `target > 0`.
fn upper_threshold(y: &[f64], target: f64) -> f64 {
    let mut s: Vec<f64> = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut t = s[0] - target;
    for (k, &v) in s.iter().enumerate() {
        cum += v;
        let cand = (cum - target) / (k + 1) as f64;
        if v > cand {
            t = cand;
        } else {
            break;
        }
    }
    t
}

/// Euclidean projection onto `{1'w = 1, ||w||_1 <= leverage}`.
pub fn project_budget_leverage(y: &DVector<f64>, leverage: f64) -> DVector<f64> {
    let d = y.len();
    let shift = (y.sum() - 1.0) / d as f64;
    let w = y.add_scalar(-shift);
    if w.lp_norm(1) <= leverage || d == 1 {
        return w;
    }
    let pos = 0.5 * (leverage + 1.0);
    let neg = 0.5 * (leverage - 1.0);
    let ys = y.as_slice();
    let alpha = upper_threshold(ys, pos);
    let neg_y: Vec<f64> = ys.iter().map(|v| -v).collect();
    let beta = -upper_threshold(&neg_y, neg);
    debug_assert!(alpha >= beta - 1e-12, "alpha {alpha} < beta {beta}");
    y.map(|v| {
        if v > alpha {
            v - alpha
        } else if v < beta {
            v - beta
        } else {
            0.0
        }
    })
}

/// The feasible polytope of a problem.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    pub dim: usize,
    pub leverage: f64,
    /// Constraints restricted to the budget hyperplane (`a` centered).
    constraints: Vec<LinearConstraint>,
}

impl FeasibleSet {
    pub fn new(dim: usize, leverage: f64, constraints: &[LinearConstraint]) -> Self {
        let constraints = constraints
            .iter()
            .map(|c| {
                let mean = c.a.mean();
                LinearConstraint {
                    a: c.a.add_scalar(-mean),
                    b: c.b - mean,
                    label: c.label.clone(),
                }
            })
            .collect();
        Self {
            dim,
            leverage,
            constraints,
        }
    }

    pub fn for_problem(problem: &ObjectiveProblem) -> Self {
        Self::new(problem.dim(), MAX_LEVERAGE, &problem.constraints)
    }

    /// Smallest value of `a'w` over the budget/leverage set (attained at a
    /// vertex `e_i` or `((L+1)/2) e_i - ((L-1)/2) e_j`).
    fn min_over_base(&self, a: &DVector<f64>) -> f64 {
        if self.dim == 1 {
            return a[0];
        }
        let lo = a.min();
        let hi = a.max();
        (0.5 * (self.leverage + 1.0) * lo - 0.5 * (self.leverage - 1.0) * hi).min(lo)
    }

    /// Reject constraint sets that no point of the base set satisfies.
    pub fn check_feasible(&self) -> Result<()> {
        for c in &self.constraints {
            let best = self.min_over_base(&c.a);
            let scale = c.a.amax().max(c.b.abs()).max(1e-300);
            if best > c.b + 1e-12 * scale {
                return Err(Error::Infeasible(format!(
                    "constraint {} needs a'w <= {:.6e} but the leverage-capped budget set reaches only {:.6e}",
                    c.label, c.b, best
                )));
            }
        }
        Ok(())
    }

    fn violation(&self, w: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(w))
            .fold(0.0, f64::max)
    }

    /// Total violation including budget and leverage.
    pub fn total_violation(&self, w: &DVector<f64>) -> f64 {
        let budget = (w.sum() - 1.0).abs();
        let lev = (w.lp_norm(1) - self.leverage).max(0.0);
        budget.max(lev).max(self.violation(w))
    }

    /// Root in `t >= 0` of the nonincreasing `a'P(z - t a) - b`.
    fn multiplier(&self, z: &DVector<f64>, c: &LinearConstraint) -> Result<f64> {
        let h = |t: f64| c.a.dot(&project_budget_leverage(&(z - &c.a * t), self.leverage)) - c.b;
        let h0 = h(0.0);
        if h0 <= 0.0 {
            return Ok(0.0);
        }
        let aa = c.a.norm_squared();
        if aa == 0.0 {
            return Err(Error::Infeasible(format!("constraint {} is unsatisfiable", c.label)));
        }
        let (mut lo, mut h_lo) = (0.0, h0);
        let mut hi = h0 / aa;
        let mut h_hi = h(hi);
        let mut grow = 0;
        while h_hi > 0.0 {
            lo = hi;
            h_lo = h_hi;
            hi *= 2.0;
            h_hi = h(hi);
            grow += 1;
            if grow > 200 {
                return Err(Error::Infeasible(format!(
                    "constraint {} cannot be met on the feasible set",
                    c.label
                )));
            }
        }
        // Illinois regula falsi; `hi` always stays on the feasible side.
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi.abs() || h_hi == 0.0 {
                break;
            }
            let mut t = hi - h_hi * (hi - lo) / (h_hi - h_lo);
            if !(t > lo && t < hi) {
                t = 0.5 * (lo + hi);
            }
            let ht = h(t);
            if ht > 0.0 {
                lo = t;
                h_lo = ht;
                if side == -1 {
                    h_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = t;
                h_hi = ht;
                if side == 1 {
                    h_lo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(hi)
    }

    /// Euclidean projection onto the full feasible set.
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let base = project_budget_leverage(y, self.leverage);
        if self.constraints.is_empty() || self.violation(&base) <= 0.0 {
            return Ok(base);
        }
        let k = self.constraints.len();
        let mut kappa = vec![0.0; k];
        let shifted = |kappa: &[f64]| {
            let mut z = y.clone();
            for (c, &t) in self.constraints.iter().zip(kappa) {
                z.axpy(-t, &c.a, 1.0);
            }
            z
        };
        for _ in 0..if k == 1 { 1 } else { 1000 } {
            for j in 0..k {
                let mut others = kappa.clone();
                others[j] = 0.0;
                let z = shifted(&others);
                kappa[j] = self.multiplier(&z, &self.constraints[j])?;
            }
            let w = project_budget_leverage(&shifted(&kappa), self.leverage);
            if self.violation(&w) <= 1e-13 {
                return Ok(w);
            }
        }
        let w = project_budget_leverage(&shifted(&kappa), self.leverage);
        if self.violation(&w) <= 1e-9 {
            Ok(w)
        } else {
            Err(Error::Infeasible("projection onto the constraint set did not converge".into()))
        }
    }

    fn active(&self, w: &DVector<f64>) -> Vec<String> {
        let mut out = vec!["budget".to_string()];
        if w.lp_norm(1) >= self.leverage - 1e-7 {
            out.push("leverage".into());
        }
        for c in &self.constraints {
            if c.value(w) >= -1e-7 {
                out.push(c.label.clone());
            }
        }
        out
    }
}

struct LocalResult {
    w: DVector<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

const HISTORY: usize = 10;
const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e12;
const ARMIJO: f64 = 1e-4;

fn spectral_projected_gradient(
    problem: &ObjectiveProblem,
    set: &FeasibleSet,
    start: DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Option<LocalResult>> {
    let mut x = start;
    let (mut f, mut g) = problem.value_and_gradient(&x, true);
    if !f.is_finite() {
        return Ok(None);
    }
    let mut history: VecDeque<f64> = VecDeque::from([f]);
    let pg0 = (set.project(&(&x - &g))? - &x).amax();
    let mut step = if pg0 > 0.0 { (1.0 / pg0).clamp(STEP_MIN, STEP_MAX) } else { 1.0 };
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let pg = (set.project(&(&x - &g))? - &x).amax();
        if pg <= cfg.tol && set.total_violation(&x) <= cfg.constraint_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = set.project(&(&x - &g * step))? - &x;
        let slope = g.dot(&dir);
        if !(slope < 0.0) {
            // No descent available at this step length: stationary up to roundoff.
            converged = set.total_violation(&x) <= cfg.constraint_tol;
            break;
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &dir * lambda;
            let fnew = problem.value(&xn);
            if fnew.is_finite() && fnew <= f_ref + ARMIJO * lambda * slope {
                accepted = Some((xn, fnew));
                break;
            }
            let mut next = 0.5 * lambda;
            if fnew.is_finite() {
                let denom = fnew - f - lambda * slope;
                if denom > 0.0 {
                    let q = -0.5 * lambda * lambda * slope / denom;
                    if q >= 0.1 * lambda && q <= 0.9 * lambda {
                        next = q;
                    }
                }
            }
            lambda = next;
        }
        let Some((xn, fnew)) = accepted else { break };
        let gn = problem.gradient(&xn);
        let s = &xn - &x;
        let yv = &gn - &g;
        let sty = s.dot(&yv);
        step = if sty > 0.0 {
            (s.norm_squared() / sty).clamp(STEP_MIN, STEP_MAX)
        } else {
            STEP_MAX
        };
        x = xn;
        f = fnew;
        g = gn;
        history.push_back(f);
        if history.len() > HISTORY {
            history.pop_front();
        }
    }
    // Best point seen is the last accepted one only under monotone descent;
    // the nonmonotone rule can end above an earlier value, so report `x`
    // which is feasible and has value `f`.
    Ok(Some(LocalResult {
        value: f,
        w: x,
        iterations,
        converged,
    }))
}

/// Starting points: equal weight, projected `w_eq`, then seeded random ones.
fn starts(problem: &ObjectiveProblem, set: &FeasibleSet, cfg: &SolverConfig) -> Result<Vec<DVector<f64>>> {
    let d = problem.dim();
    let mut out = vec![set.project(&DVector::from_element(d, 1.0 / d as f64))?];
    if let Ok(weq) = problem.risk.w_eq() {
        out.push(set.project(weq)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 0.5).expect("valid sd");
    for _ in 0..cfg.n_random_starts {
        let y = DVector::from_fn(d, |_, _| 1.0 / d as f64 + normal.sample(&mut rng));
        out.push(set.project(&y)?);
    }
    Ok(out)
}

/// Minimize `problem` over its feasible set from several starts and return
/// the best feasible local solution (ties go to the earlier start).
pub fn solve(problem: &ObjectiveProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    let d = problem.dim();
    if d == 0 {
        return Err(Error::Argument("empty problem".into()));
    }
    let set = FeasibleSet::for_problem(problem);
    set.check_feasible()?;
    if d == 1 {
        let w = DVector::from_element(1, 1.0);
        if set.violation(&w) > cfg.constraint_tol {
            return Err(Error::Infeasible("single-asset portfolio violates constraints".into()));
        }
        return Ok(SolveReport {
            value: problem.value(&w),
            active_constraints: set.active(&w),
            w,
            iterations: 0,
            converged: true,
            starts_used: 1,
        });
    }
    let starts = starts(problem, &set, cfg)?;
    let n = starts.len();
    let mut best: Option<LocalResult> = None;
    for x0 in starts {
        if let Some(r) = spectral_projected_gradient(problem, &set, x0, cfg)? {
            if best.as_ref().is_none_or(|b| r.value < b.value) {
                best = Some(r);
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::Numeric(format!("objective of {} is not finite at any start", problem.name))
    })?;
    Ok(SolveReport {
        active_constraints: set.active(&best.w),
        w: best.w,
        value: best.value,
        iterations: best.iterations,
        converged: best.converged,
        starts_used: n,
    })
}

/// Exhaustive grid scan of the feasible set for `d` in `{2, 3}`, used to
/// check [`solve`].
pub fn brute_force_oracle(problem: &ObjectiveProblem, grid_step: f64) -> Result<SolveReport> {
    let d = problem.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::Argument(format!("grid oracle supports d in {{2, 3}}, got {d}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Argument("grid step must be positive".into()));
    }
    let lo = -0.5 * (MAX_LEVERAGE - 1.0);
    let hi = 0.5 * (MAX_LEVERAGE + 1.0);
    let n = ((hi - lo) / grid_step).round() as usize;
    let coord = |k: usize| lo + k as f64 * grid_step;
    let feasible = |w: &DVector<f64>| {
        w.lp_norm(1) <= MAX_LEVERAGE + 1e-12 && problem.constraints.iter().all(|c| c.value(w) <= 1e-12)
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |w: DVector<f64>| {
        if !feasible(&w) {
            return;
        }
        let v = problem.value(&w);
        if v.is_finite() && best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, w));
        }
    };
    if d == 2 {
        for k in 0..=n {
            let w1 = coord(k);
            consider(DVector::from_vec(vec![w1, 1.0 - w1]));
        }
    } else {
        for k in 0..=n {
            for l in 0..=n {
                let (w1, w2) = (coord(k), coord(l));
                consider(DVector::from_vec(vec![w1, w2, 1.0 - w1 - w2]));
            }
        }
    }
    let (value, w) = best.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    let set = FeasibleSet::for_problem(problem);
    Ok(SolveReport {
        active_constraints: set.active(&w),
        w,
        value,
        iterations: 0,
        converged: true,
        starts_used: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{MeanVector, ShrinkageMethod};
    use crate::models::{build, ModelKind, ModelSpec};
    use crate::risk::RiskModel;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use std::sync::Arc;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn identity_a(kind: ModelKind, r_min: f64) -> ObjectiveProblem {
        let risk = Arc::new(RiskModel::new(DMatrix::identity(2, 2)).unwrap());
        let mu = MeanVector(dv(&[100.2, 100.1]));
        let spec = ModelSpec::new(kind, ShrinkageMethod::Sc).with_r_min(r_min);
        build(&spec, &mu, risk).unwrap()
    }

    /// Brute-force projection by dense grid search over the d = 3 slice.
    fn grid_projection(y: &DVector<f64>) -> DVector<f64> {
        let mut best = (f64::INFINITY, DVector::zeros(3));
        let step = 0.002;
        let n = (2.0 / step) as usize;
        for k in 0..=n {
            for l in 0..=n {
                let w1 = -0.5 + k as f64 * step;
                let w2 = -0.5 + l as f64 * step;
                let w = dv(&[w1, w2, 1.0 - w1 - w2]);
                if w.lp_norm(1) <= 2.0 + 1e-12 {
                    let dist = (&w - y).norm_squared();
                    if dist < best.0 {
                        best = (dist, w);
                    }
                }
            }
        }
        best.1
    }

    #[test]
    fn projection_interior_point_is_hyperplane_projection() {
        let y = dv(&[0.5, 0.7, 0.1]);
        let w = project_budget_leverage(&y, 2.0);
        assert_relative_eq!(w.sum(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(w, dv(&[0.4, 0.6, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn projection_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let y = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
            let w = project_budget_leverage(&y, 2.0);
            assert!(w.lp_norm(1) <= 2.0 + 1e-12);
            assert!((w.sum() - 1.0).abs() < 1e-12);
            let g = grid_projection(&y);
            assert!((&w - &y).norm_squared() <= (&g - &y).norm_squared() + 1e-12);
            assert!((&w - &g).amax() < 5e-3, "{w} vs {g}");
        }
    }

    #[test]
    fn projection_is_idempotent_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..200 {
            let d = rng.random_range(2..12);
            let y = DVector::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
            let w = project_budget_leverage(&y, 2.0);
            assert!(w.lp_norm(1) <= 2.0 + 1e-12);
            assert!((w.sum() - 1.0).abs() < 1e-12);
            let again = project_budget_leverage(&w, 2.0);
            assert!((&again - &w).amax() < 1e-12);
            // Variational inequality: (y - w)'(z - w) <= 0 for feasible z.
            for _ in 0..20 {
                let z = project_budget_leverage(
                    &DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0)),
                    2.0,
                );
                assert!((&y - &w).dot(&(&z - &w)) <= 1e-9);
            }
        }
    }

    #[test]
    fn projection_with_half_space() {
        let c = LinearConstraint {
            a: dv(&[-1.0, 0.0, 0.0]),
            b: -0.8,
            label: "w1 >= 0.8".into(),
        };
        let set = FeasibleSet::new(3, 2.0, std::slice::from_ref(&c));
        let w = set.project(&dv(&[0.0, 0.5, 0.5])).unwrap();
        assert!(c.value(&w) <= 1e-12);
        assert!((w.sum() - 1.0).abs() < 1e-12);
        assert_relative_eq!(w, dv(&[0.8, 0.1, 0.1]), epsilon = 1e-9);
    }

    #[test]
    fn unreachable_floor_is_infeasible() {
        // Best return on the L1 ball: 1.5 * 0.2 - 0.5 * 0.1 = 0.25.
        let p = identity_a(ModelKind::A1, 0.3);
        assert!(matches!(solve(&p, &SolverConfig::default()), Err(Error::Infeasible(_))));
        let p = identity_a(ModelKind::A1, 0.249);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert!(p.mean_return(&r.w) >= 0.249 - 1e-9);
        assert_relative_eq!(r.w, dv(&[1.49, -0.49]), epsilon = 1e-6);
    }

    #[test]
    fn a1_closed_forms() {
        let cfg = SolverConfig::default();
        let r = solve(&identity_a(ModelKind::A1, 0.148), &cfg).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.w, dv(&[0.5, 0.5]), epsilon = 1e-6);
        assert_relative_eq!(r.value, 0.5, epsilon = 1e-9);

        let r = solve(&identity_a(ModelKind::A1, 0.16), &cfg).unwrap();
        assert_relative_eq!(r.w, dv(&[0.6, 0.4]), epsilon = 1e-6);
        assert_relative_eq!(r.value, 0.52, epsilon = 1e-8);
        assert!(r.active_constraints.contains(&"mean_floor".to_string()));
    }

    #[test]
    fn a3_closed_form() {
        let r = solve(&identity_a(ModelKind::A3, 0.0), &SolverConfig::default()).unwrap();
        assert_relative_eq!(r.w, dv(&[2.0 / 3.0, 1.0 / 3.0]), epsilon = 1e-5);
    }

    #[test]
    fn oracle_examples() {
        let r = brute_force_oracle(&identity_a(ModelKind::A3, 0.0), 1e-4).unwrap();
        assert!((r.w[0] - 2.0 / 3.0).abs() <= 1e-4);
        let r = brute_force_oracle(&identity_a(ModelKind::A1, 0.16), 1e-4).unwrap();
        assert!((r.w[0] - 0.6).abs() <= 1e-4 && (r.w[1] - 0.4).abs() <= 1e-4);
    }

    #[test]
    fn oracle_flat_objective() {
        let risk = Arc::new(RiskModel::new(DMatrix::identity(2, 2)).unwrap());
        let mu = MeanVector(dv(&[100.1, 100.1]));
        // C2 with lambda 0: maximize an equal-mean return, constant on the budget line.
        let spec = ModelSpec::new(ModelKind::C2, ShrinkageMethod::Sc).with_hyper(Some(0.0), None);
        let p = build(&spec, &mu, risk).unwrap();
        let r = brute_force_oracle(&p, 0.01).unwrap();
        let v0 = p.value(&dv(&[0.3, 0.7]));
        assert!((r.value - v0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_dimension() {
        let risk = Arc::new(RiskModel::new(DMatrix::identity(4, 4)).unwrap());
        let mu = MeanVector(DVector::from_element(4, 100.1));
        let p = build(&ModelSpec::new(ModelKind::C1, ShrinkageMethod::Sc).with_r_min(0.0), &mu, risk)
            .unwrap();
        assert!(matches!(brute_force_oracle(&p, 0.1), Err(Error::Argument(_))));
    }

    #[test]
    fn c1_reaches_zero_at_w_eq() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 2.0, 0.4, 0.1, 0.4, 1.5]);
        let risk = Arc::new(RiskModel::new(s).unwrap());
        let weq = risk.w_eq().unwrap().clone();
        assert!(weq.lp_norm(1) <= 2.0);
        let mu = MeanVector(DVector::from_element(3, 100.0));
        let p = build(&ModelSpec::new(ModelKind::C1, ShrinkageMethod::Sc).with_r_min(0.0), &mu, risk)
            .unwrap();
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert!(r.value < 1e-10, "{}", r.value);
        assert!((&r.w - &weq).amax() < 1e-5);
    }

    #[test]
    fn deterministic() {
        let p = identity_a(ModelKind::A3, 0.0);
        let cfg = SolverConfig { seed: 42, ..Default::default() };
        assert_eq!(solve(&p, &cfg).unwrap(), solve(&p, &cfg).unwrap());
    }

    #[test]
    fn single_asset() {
        let risk = Arc::new(RiskModel::new(DMatrix::identity(1, 1)).unwrap());
        let mu = MeanVector(dv(&[100.3]));
        let p = build(&ModelSpec::new(ModelKind::A1, ShrinkageMethod::Sc), &mu, risk).unwrap();
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.w, dv(&[1.0]));
    }
}

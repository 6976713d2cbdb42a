use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use eqcorr::analytics::{drawdown_series, expected_shortfall, sharpe};
use eqcorr::estimators::{
    constant_correlation_target, estimate_covariance, sample_cov, spearman_matrix, ShrinkageMethod,
};
use eqcorr::market_data::{resample_series, Frequency, ReturnsPanel};
use eqcorr::optimizer::{project_budget_leverage, FeasibleSet};
use eqcorr::models::LinearConstraint;
use eqcorr::risk::RiskModel;
use eqcorr::selection::{select_universe, Linkage};
use eqcorr::tuning::{mean_filter_1d, mean_filter_2d};

fn panel(cols: usize, values: &[f64]) -> ReturnsPanel {
    let rows = values.len() / cols;
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    ReturnsPanel::new(
        (0..rows).map(|i| start + chrono::Days::new(i as u64)).collect(),
        (0..cols).map(|i| format!("T{i:02}")).collect(),
        DMatrix::from_row_slice(rows, cols, &values[..rows * cols]),
        Frequency::Daily,
    )
    .unwrap()
}

fn returns_panel(max_cols: usize) -> impl Strategy<Value = ReturnsPanel> {
    (2..=max_cols, 8usize..40).prop_flat_map(|(cols, rows)| {
        prop::collection::vec(95.0f64..105.0, cols * rows).prop_map(move |v| panel(cols, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_feasible_and_idempotent(y in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let y = DVector::from_vec(y);
        let w = project_budget_leverage(&y, 2.0);
        prop_assert!((w.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(w.lp_norm(1) <= 2.0 + 1e-12);
        let again = project_budget_leverage(&w, 2.0);
        prop_assert!((&again - &w).amax() <= 1e-12);
    }

    #[test]
    fn projection_with_floor_is_feasible(
        y in prop::collection::vec(-3.0f64..3.0, 2..8),
        mu in prop::collection::vec(-0.2f64..0.4, 8),
        frac in 0.0f64..0.95,
    ) {
        let d = y.len();
        let mu = DVector::from_iterator(d, mu.into_iter().take(d));
        let hi = 1.5 * mu.max() - 0.5 * mu.min();
        let floor = mu.mean() + frac * (hi - mu.mean());
        let c = LinearConstraint { a: -&mu, b: -floor, label: "floor".into() };
        let set = FeasibleSet::new(d, 2.0, std::slice::from_ref(&c));
        let w = set.project(&DVector::from_vec(y)).unwrap();
        prop_assert!(c.value(&w) <= 1e-9);
        prop_assert!(set.total_violation(&w) <= 1e-9);
    }

    #[test]
    fn spearman_ignores_monotone_transforms(p in returns_panel(5)) {
        let (base, _) = spearman_matrix(&p).unwrap();
        let mut t = p.clone();
        for i in 0..t.n_obs() {
            t.returns[(i, 0)] = (t.returns[(i, 0)] / 10.0).exp();
            t.returns[(i, 1)] = -1.0 / t.returns[(i, 1)];
        }
        let (after, _) = spearman_matrix(&t).unwrap();
        prop_assert!((&base - &after).amax() <= 1e-12);
        prop_assert!(base.iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert!((&base - base.transpose()).amax() == 0.0);
    }

    #[test]
    fn sample_cov_matches_pairwise_formula(p in returns_panel(6)) {
        let s = sample_cov(&p).unwrap();
        let n = p.n_obs() as f64;
        for i in 0..p.n_assets() {
            for j in 0..p.n_assets() {
                let (a, b) = (p.column(i), p.column(j));
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let cross = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n;
                prop_assert!((s[(i, j)] - (cross - ma * mb)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn target_has_equal_correlations(p in returns_panel(6)) {
        let s = sample_cov(&p).unwrap();
        let f = constant_correlation_target(&s).unwrap();
        let d = s.nrows();
        let mut corr = Vec::new();
        for i in 0..d {
            prop_assert_eq!(f[(i, i)], s[(i, i)]);
            for j in (i + 1)..d {
                corr.push(f[(i, j)] / (f[(i, i)] * f[(j, j)]).sqrt());
            }
        }
        let spread = corr.iter().cloned().fold(f64::MIN, f64::max) - corr.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(spread <= 1e-12);
    }

    #[test]
    fn shrunk_estimate_is_positive_definite(p in returns_panel(8), which in 0usize..3) {
        let method = [ShrinkageMethod::Sc, ShrinkageMethod::Uscc, ShrinkageMethod::Fixed(0.3)][which];
        let est = estimate_covariance(&p, method).unwrap();
        prop_assert!((&est.s - est.s.transpose()).amax() <= 1e-12);
        prop_assert!(est.is_positive_definite());
        prop_assert!(est.lambda > 0.0 && est.lambda < 1.0);
    }

    #[test]
    fn w_eq_is_scale_free(p in returns_panel(6), c in 0.01f64..100.0) {
        let s = sample_cov(&p).unwrap() + DMatrix::identity(p.n_assets(), p.n_assets()) * 1e-3;
        let a = RiskModel::new(s.clone()).unwrap();
        let b = RiskModel::new(s * c).unwrap();
        if let (Ok(x), Ok(y)) = (a.w_eq(), b.w_eq()) {
            prop_assert!((x - y).amax() <= 1e-8 * x.amax().max(1.0));
        }
    }

    #[test]
    fn filter_stays_in_range(v in prop::collection::vec(-10.0f64..10.0, 11..60)) {
        let out = mean_filter_1d(&v, 11).unwrap();
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(out.iter().all(|x| *x >= lo - 1e-12 && *x <= hi + 1e-12));
        let flat = vec![v[0]; v.len()];
        prop_assert!(mean_filter_1d(&flat, 11).unwrap().iter().all(|x| (x - v[0]).abs() <= 1e-12));
    }

    #[test]
    fn filter_2d_constant_is_fixed(c in -5.0f64..5.0, n in 1usize..20, w in 0usize..6) {
        let m = DMatrix::from_element(n, n, c);
        let mask = DMatrix::from_fn(n, n, |i, j| i + j < n);
        let out = mean_filter_2d(&m, &mask, 2 * w + 1).unwrap();
        for i in 0..n {
            for j in 0..n {
                if mask[(i, j)] {
                    prop_assert!((out[(i, j)] - c).abs() <= 1e-12);
                } else {
                    prop_assert!(out[(i, j)].is_nan());
                }
            }
        }
    }

    #[test]
    fn metric_signs(r in prop::collection::vec(90.0f64..110.0, 1..200)) {
        prop_assert!(expected_shortfall(&r) <= 0.0);
        let dd = drawdown_series(&r);
        prop_assert_eq!(dd[0], 0.0);
        prop_assert!(dd.iter().all(|v| *v <= 0.0));
        if let Some(s) = sharpe(&r, Frequency::Daily) {
            let net: Vec<f64> = r.iter().map(|x| x - 100.0).collect();
            let n = net.len() as f64;
            let m = net.iter().sum::<f64>() / n;
            let sd = (net.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!((s - 252f64.sqrt() * m / sd).abs() <= 1e-9 * s.abs().max(1.0));
        }
    }

    #[test]
    fn monthly_resample_compounds_daily(r in prop::collection::vec(97.0f64..103.0, 1..120)) {
        let start = NaiveDate::from_ymd_opt(2021, 1, 25).unwrap();
        let dates: Vec<NaiveDate> = (0..r.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
        let monthly = resample_series(&dates, &r, Frequency::Monthly);
        let total: f64 = monthly.iter().map(|(_, v)| v / 100.0).product();
        let direct: f64 = r.iter().map(|v| v / 100.0).product();
        prop_assert!((total - direct).abs() <= 1e-12 * direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn selection_ignores_column_order(p in returns_panel(9), k in 1usize..6, seed in any::<u64>()) {
        let d = p.n_assets();
        let mut order: Vec<usize> = (0..d).collect();
        let mut s = seed;
        for i in (1..d).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = select_universe(&p, k, Linkage::Average).unwrap();
        let b = select_universe(&p.select_columns(&order), k, Linkage::Average).unwrap();
        prop_assert_eq!(a.len(), k.min(d));
        prop_assert_eq!(a, b);
    }
}

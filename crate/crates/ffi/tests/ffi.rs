use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{DMatrix, DVector};

use eqcorr::risk::RiskModel;
use eqcorr_ffi::*;

const COV: [f64; 9] = [2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 3.0];

fn last_error() -> String {
    unsafe { CStr::from_ptr(eqc_last_error_message()) }.to_string_lossy().into_owned()
}

fn risk_model() -> *mut EqcRiskModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { eqc_risk_model_new(COV.as_ptr(), 3, &mut m) }, EqcStatus::Ok);
    m
}

#[test]
fn risk_measures_match_core() {
    let core = RiskModel::new(DMatrix::from_row_slice(3, 3, &COV)).unwrap();
    let m = risk_model();
    unsafe {
        assert_eq!(eqc_risk_model_dim(m), 3);
        let mut w = [0.0; 3];
        assert_eq!(eqc_w_eq(m, w.as_mut_ptr(), 3), EqcStatus::Ok);
        assert_eq!(&w[..], core.w_eq().unwrap().as_slice());

        let x = [0.5, 0.7, -0.2];
        let xv = DVector::from_column_slice(&x);
        let mut c = [0.0; 3];
        assert_eq!(eqc_corr_vec(m, x.as_ptr(), 3, c.as_mut_ptr()), EqcStatus::Ok);
        assert_eq!(&c[..], core.corr_vec(&xv).unwrap().as_slice());
        let mut v = 0.0;
        assert_eq!(eqc_sigma_rho_sq(m, x.as_ptr(), 3, &mut v), EqcStatus::Ok);
        assert_eq!(v, core.sigma_rho_sq(&xv).unwrap());
        assert_eq!(eqc_d_eq_sq(m, x.as_ptr(), 3, &mut v), EqcStatus::Ok);
        assert_eq!(v, core.d_eq_sq(&xv).unwrap());
        assert_eq!(eqc_sigma_rho_sq(m, w.as_ptr(), 3, &mut v), EqcStatus::Ok);
        assert!(v.abs() <= 1e-20);

        let mut mv = [0.0; 3];
        assert_eq!(eqc_min_variance(m, mv.as_mut_ptr(), 3), EqcStatus::Ok);
        assert!((mv.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        eqc_risk_model_free(m);
    }
}

#[test]
fn errors_set_status_and_message() {
    let m = risk_model();
    unsafe {
        let mut w = [0.0; 2];
        assert_eq!(eqc_w_eq(m, w.as_mut_ptr(), 2), EqcStatus::BufferSize);
        assert!(last_error().contains("expected 3"), "{}", last_error());
        assert_eq!(eqc_w_eq(ptr::null(), w.as_mut_ptr(), 2), EqcStatus::NullPointer);
        eqc_risk_model_free(m);
        eqc_risk_model_free(ptr::null_mut());

        let bad = [1.0, 2.0, 2.0, 1.0];
        let mut h = ptr::null_mut();
        assert_ne!(eqc_risk_model_new(bad.as_ptr(), 2, &mut h), EqcStatus::Ok);
        assert!(h.is_null());

        let name = CString::new("E1-SC").unwrap();
        let mu = [0.1, 0.2, 0.3];
        let mut out = [0.0; 3];
        let s = eqc_solve_model(name.as_ptr(), mu.as_ptr(), COV.as_ptr(), 3, f64::NAN, f64::NAN, 0.0, out.as_mut_ptr(), ptr::null_mut());
        assert_eq!(s, EqcStatus::Spec);
        assert!(last_error().starts_with("error[E_SPEC]"));
    }
}

#[test]
fn solve_min_variance_with_slack_floor() {
    // Minimum-variance mean is about 100.19, above the 100.148 floor.
    let name = CString::new("A1-SC").unwrap();
    let mu = [100.1, 100.2, 100.3];
    let mut w = [0.0; 3];
    let mut value = 0.0;
    let s = unsafe {
        eqc_solve_model(name.as_ptr(), mu.as_ptr(), COV.as_ptr(), 3, f64::NAN, f64::NAN, 0.148, w.as_mut_ptr(), &mut value)
    };
    assert_eq!(s, EqcStatus::Ok, "{}", last_error());
    let cov = DMatrix::from_row_slice(3, 3, &COV);
    let x = cov.clone().lu().solve(&DVector::from_element(3, 1.0)).unwrap();
    let want = &x / x.sum();
    for i in 0..3 {
        assert!((w[i] - want[i]).abs() <= 1e-5, "{w:?} vs {want}");
    }
}

#[test]
fn backtest_through_handles() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic_prices.csv");
    let path = CString::new(data.to_str().unwrap()).unwrap();
    let model = CString::new("A1-SC").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(eqc_returns_load_csv(path.as_ptr(), &mut r), EqcStatus::Ok, "{}", last_error());
        let (mut n, mut d) = (0, 0);
        assert_eq!(eqc_returns_shape(r, &mut n, &mut d), EqcStatus::Ok);
        assert_eq!((n, d), (1042, 30));

        let mut opts = eqc_backtest_options_default();
        opts.first_year = 2011;
        opts.last_year = 2011;
        opts.k = 6;
        let mut ledger = ptr::null_mut();
        assert_eq!(eqc_backtest_run(r, model.as_ptr(), &opts, &mut ledger), EqcStatus::Ok, "{}", last_error());
        assert_eq!(eqc_ledger_month_count(ledger), 12);

        let (mut year, mut month, mut k, mut lev) = (0, 0, 0, 0.0);
        assert_eq!(eqc_ledger_month_info(ledger, 11, &mut year, &mut month, &mut k, &mut lev), EqcStatus::Ok);
        assert_eq!((year, month, k), (2011, 12, 6));
        assert!((1.0 - 1e-9..=2.0 + 1e-6).contains(&lev));
        let mut w = vec![0.0; k];
        assert_eq!(eqc_ledger_month_weights(ledger, 11, w.as_mut_ptr(), k), EqcStatus::Ok);
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
        assert_eq!(eqc_ledger_month_info(ledger, 12, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), EqcStatus::Argument);

        let days = eqc_ledger_daily_len(ledger);
        let mut daily = vec![0.0; days];
        assert_eq!(eqc_ledger_daily_returns(ledger, daily.as_mut_ptr(), days), EqcStatus::Ok);
        assert!(days > 240 && daily.iter().all(|v| *v > 50.0 && *v < 150.0));

        assert_eq!(eqc_ledger_write_csv(ledger, out_dir.as_ptr()), EqcStatus::Ok);
        let weights = std::fs::read_to_string(dir.path().join("weights.csv")).unwrap();
        assert_eq!(weights.lines().count(), 1 + 12 * 6);

        opts.first_year = 2010;
        opts.last_year = 2010;
        let mut none = ptr::null_mut();
        assert_eq!(eqc_backtest_run(r, model.as_ptr(), &opts, &mut none), EqcStatus::Window);
        assert!(none.is_null());

        eqc_ledger_free(ledger);
        eqc_returns_free(r);
    }
}

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqcorr::market_data::{Frequency, ReturnsPanel};
use eqcorr::selection::{cluster, distance_matrix, select, selection_sharpe, ClusterAssignment, Linkage};

fn panel(tickers: &[&str], returns: DMatrix<f64>) -> ReturnsPanel {
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    ReturnsPanel::new(
        (0..returns.nrows()).map(|i| start + chrono::Days::new(i as u64)).collect(),
        tickers.iter().map(|s| s.to_string()).collect(),
        returns,
        Frequency::Daily,
    )
    .unwrap()
}

/// Every assignment of `d` items to exactly 2 non-empty groups, item 0 in
/// group 0.
fn two_partitions(d: usize) -> Vec<Vec<usize>> {
    (1..(1u32 << (d - 1)))
        .map(|mask| (0..d).map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize }).collect())
        .collect()
}

#[test]
fn pairs_match_best_two_partition() {
    let rho = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
    );
    let dist = distance_matrix(&rho).unwrap();
    let within = |labels: &[usize]| -> f64 {
        let mut total = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if labels[i] == labels[j] {
                    total += dist[(i, j)];
                }
            }
        }
        total
    };
    let best = two_partitions(4)
        .into_iter()
        .min_by(|a, b| within(a).total_cmp(&within(b)))
        .unwrap();
    let got = cluster(&dist, 2, Linkage::Average).unwrap();
    assert_eq!(got.labels, best);
}

#[test]
fn per_cluster_pick_matches_exhaustive_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tickers = ["F", "B", "E", "A", "D", "C"];
    for _ in 0..20 {
        let r = DMatrix::from_fn(60, 6, |_, j| 100.0 + rng.random_range(-1.0..1.0) + 0.02 * j as f64);
        let p = panel(&tickers, r);
        let labels: Vec<usize> = (0..6).map(|i| i % 3).collect();
        let a = ClusterAssignment { labels: labels.clone(), k: 3 };
        let got = select(&p, &a).unwrap();
        let mut want: Vec<String> = (0..3)
            .map(|c| {
                let mut best: Option<(f64, &str)> = None;
                for i in 0..6 {
                    if labels[i] != c {
                        continue;
                    }
                    let s = selection_sharpe(&p.column(i));
                    let better = match best {
                        None => true,
                        Some((bs, bt)) => s > bs || (s == bs && tickers[i] < bt),
                    };
                    if better {
                        best = Some((s, tickers[i]));
                    }
                }
                best.unwrap().1.to_string()
            })
            .collect();
        want.sort();
        assert_eq!(got, want);
    }
}

#[test]
fn clusters_are_non_empty_and_counted() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let d = rng.random_range(2..15);
        let k = rng.random_range(1..=d);
        let mut rho = DMatrix::identity(d, d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = rng.random_range(-1.0..1.0);
                rho[(i, j)] = v;
                rho[(j, i)] = v;
            }
        }
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let a = cluster(&distance_matrix(&rho).unwrap(), k, linkage).unwrap();
            assert_eq!(a.k, k);
            for c in 0..k {
                assert!(!a.members(c).is_empty());
            }
            assert!(a.labels.iter().all(|l| *l < k));
        }
    }
}

#[test]
fn two_stock_cluster_takes_higher_sharpe() {
    // Net means 0.12 and 0.08 with the same 0.1 dispersion: Sharpe ratios in
    // the ratio 1.2 : 0.8.
    let r = DMatrix::from_row_slice(4, 2, &[100.18, 100.22, 99.98, 100.02, 100.18, 100.22, 99.98, 100.02]);
    let p = panel(&["LOW", "TOP"], r);
    let ratio = selection_sharpe(&p.column(1)) / selection_sharpe(&p.column(0));
    assert!((ratio - 1.5).abs() < 1e-9);
    let a = ClusterAssignment { labels: vec![0, 0], k: 1 };
    assert_eq!(select(&p, &a).unwrap(), vec!["TOP"]);
}

//! Stock selection: agglomerative clustering on Spearman distance, then the
//! highest-Sharpe stock of each cluster.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::spearman_matrix;
use crate::market_data::ReturnsPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Argument(format!("unknown linkage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// Cluster id per asset, numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster).collect()
    }
}

pub fn distance_matrix(spearman: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !spearman.is_square() {
        return Err(Error::Argument("correlation matrix must be square".into()));
    }
    let d = spearman.nrows();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v = spearman[(i, j)];
            if !v.is_finite() || (v - spearman[(j, i)]).abs() > 1e-12 {
                return Err(Error::Argument("correlation matrix must be finite and symmetric".into()));
            }
            if i != j {
                out[(i, j)] = (1.0 - v).clamp(0.0, 2.0);
            }
        }
    }
    Ok(out)
}

/// Agglomerative clustering down to exactly `k` clusters. On equal linkage
/// distance the pair whose smallest member indices are lexicographically
/// smallest merges first.
pub fn cluster(dist: &DMatrix<f64>, k: usize, linkage: Linkage) -> Result<ClusterAssignment> {
    let d = dist.nrows();
    if !dist.is_square() || d == 0 {
        return Err(Error::Argument("distance matrix must be square and non-empty".into()));
    }
    if k == 0 || k > d {
        return Err(Error::Argument(format!("cluster count {k} outside [1, {d}]")));
    }
    // Active clusters keyed by their smallest member, which is also their slot.
    let mut members: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
    let mut alive = vec![true; d];
    let mut link = dist.clone();
    for _ in 0..(d - k) {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..d {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..d {
                if alive[j] && best.is_none_or(|(b, _, _)| link[(i, j)] < b) {
                    best = Some((link[(i, j)], i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two clusters remain");
        let (ni, nj) = (members[i].len() as f64, members[j].len() as f64);
        for m in 0..d {
            if !alive[m] || m == i || m == j {
                continue;
            }
            let v = match linkage {
                Linkage::Single => link[(i, m)].min(link[(j, m)]),
                Linkage::Complete => link[(i, m)].max(link[(j, m)]),
                Linkage::Average => (ni * link[(i, m)] + nj * link[(j, m)]) / (ni + nj),
            };
            link[(i, m)] = v;
            link[(m, i)] = v;
        }
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        alive[j] = false;
    }
    let mut slot_label = vec![usize::MAX; d];
    let mut labels = vec![0; d];
    let mut next = 0;
    let mut owner = vec![0; d];
    for (slot, ms) in members.iter().enumerate() {
        for &m in ms {
            owner[m] = slot;
        }
    }
    for i in 0..d {
        let slot = owner[i];
        if slot_label[slot] == usize::MAX {
            slot_label[slot] = next;
            next += 1;
        }
        labels[i] = slot_label[slot];
    }
    Ok(ClusterAssignment { labels, k })
}

/// Annualized daily Sharpe of net returns `r - 100` with zero risk-free
/// rate; a flat series scores negative infinity.
pub fn selection_sharpe(gross: &[f64]) -> f64 {
    let n = gross.len() as f64;
    if gross.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mean = gross.iter().map(|r| r - 100.0).sum::<f64>() / n;
    let var = gross.iter().map(|r| (r - 100.0 - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return f64::NEG_INFINITY;
    }
    252f64.sqrt() * mean / var.sqrt()
}

/// One ticker per cluster, sorted. Ties go to the smaller ticker.
pub fn select(train: &ReturnsPanel, assignment: &ClusterAssignment) -> Result<Vec<String>> {
    if assignment.labels.len() != train.n_assets() {
        return Err(Error::Argument(format!(
            "assignment covers {} assets, panel has {}",
            assignment.labels.len(),
            train.n_assets()
        )));
    }
    let sharpe: Vec<f64> = (0..train.n_assets())
        .map(|i| selection_sharpe(&train.column(i)))
        .collect();
    let mut out = Vec::with_capacity(assignment.k);
    for c in 0..assignment.k {
        let ms = assignment.members(c);
        if ms.is_empty() {
            return Err(Error::Argument(format!("cluster {c} is empty")));
        }
        let best = ms
            .into_iter()
            .min_by(|&a, &b| {
                sharpe[b]
                    .total_cmp(&sharpe[a])
                    .then_with(|| train.tickers[a].cmp(&train.tickers[b]))
            })
            .expect("non-empty");
        out.push(train.tickers[best].clone());
    }
    out.sort();
    Ok(out)
}

/// Full selection step on a training window: columns are put in ticker
/// order first so the outcome does not depend on input column order.
pub fn select_universe(train: &ReturnsPanel, k: usize, linkage: Linkage) -> Result<Vec<String>> {
    let d = train.n_assets();
    if d == 0 {
        return Err(Error::EmptyUniverse("training window has no assets".into()));
    }
    let k = k.min(d);
    if k == 0 {
        return Err(Error::Argument("cluster count must be positive".into()));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| train.tickers[a].cmp(&train.tickers[b]));
    let sorted = train.select_columns(&order);
    if k == d {
        return Ok(sorted.tickers);
    }
    let (rho, _) = spearman_matrix(&sorted)?;
    let assignment = cluster(&distance_matrix(&rho)?, k, linkage)?;
    select(&sorted, &assignment)
}

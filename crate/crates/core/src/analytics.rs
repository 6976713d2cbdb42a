//! Performance metrics and the per-model report table.

use std::io::Write;

use crate::backtest::BacktestLedger;
use crate::error::{Error, Result};
use crate::market_data::Frequency;

pub const REPORT_COLUMNS: [&str; 9] = [
    "Model",
    "Mean Monthly Return(%)",
    "Monthly Return Std(%)",
    "Monthly ES",
    "Mean Leverage",
    "Mean Daily Drawdown(%)",
    "Sharpe Daily",
    "Sharpe Weekly",
    "Sharpe Monthly",
];

fn net(gross: &[f64]) -> Vec<f64> {
    gross.iter().map(|r| r - 100.0).collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/N) standard deviation.
fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Annualized Sharpe of gross % returns with zero risk-free rate. `None`
/// when fewer than two returns or zero dispersion.
pub fn sharpe(gross: &[f64], frequency: Frequency) -> Option<f64> {
    if gross.len() < 2 {
        return None;
    }
    let x = net(gross);
    let sd = std_dev(&x);
    if !(sd > 0.0) {
        return None;
    }
    Some(frequency.periods_per_year().sqrt() * mean(&x) / sd)
}

/// Mean of the negative net returns; 0 when there are none.
pub fn expected_shortfall(gross: &[f64]) -> f64 {
    let losses: Vec<f64> = net(gross).into_iter().filter(|v| *v < 0.0).collect();
    if losses.is_empty() {
        0.0
    } else {
        mean(&losses)
    }
}

/// Percentage drawdown of cumulative wealth from its running peak. Wealth
/// compounds from 1 and the peak only counts observed points, so the first
/// entry is always 0.
pub fn drawdown_series(daily_gross: &[f64]) -> Vec<f64> {
    let mut wealth = 1.0;
    let mut peak = f64::NEG_INFINITY;
    daily_gross
        .iter()
        .map(|r| {
            wealth *= r / 100.0;
            peak = peak.max(wealth);
            100.0 * (wealth - peak) / peak
        })
        .collect()
}

pub fn mean_leverage(ledger: &BacktestLedger) -> Option<f64> {
    if ledger.records.is_empty() {
        return None;
    }
    Some(ledger.records.iter().map(|r| r.leverage()).sum::<f64>() / ledger.records.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    /// Annualized: 12 x mean monthly net return.
    pub mean_return: Option<f64>,
    /// Annualized: sqrt(12) x monthly std.
    pub return_std: Option<f64>,
    pub monthly_es: Option<f64>,
    pub mean_leverage: Option<f64>,
    pub mean_drawdown: Option<f64>,
    pub sharpe_daily: Option<f64>,
    pub sharpe_weekly: Option<f64>,
    pub sharpe_monthly: Option<f64>,
}

impl MetricsRow {
    pub fn from_ledger(ledger: &BacktestLedger) -> Self {
        let values = |f: Frequency| -> Vec<f64> { ledger.series(f).iter().map(|p| p.1).collect() };
        let daily = values(Frequency::Daily);
        let monthly = values(Frequency::Monthly);
        let some_if = |ok: bool, v: f64| if ok { Some(v) } else { None };
        let m = net(&monthly);
        let dd = drawdown_series(&daily);
        Self {
            model: ledger.model.clone(),
            mean_return: some_if(!m.is_empty(), 12.0 * mean(&m)),
            return_std: some_if(!m.is_empty(), 12f64.sqrt() * std_dev(&m)),
            monthly_es: some_if(!monthly.is_empty(), expected_shortfall(&monthly)),
            mean_leverage: mean_leverage(ledger),
            mean_drawdown: some_if(!dd.is_empty(), mean(&dd)),
            sharpe_daily: sharpe(&daily, Frequency::Daily),
            sharpe_weekly: sharpe(&values(Frequency::Weekly), Frequency::Weekly),
            sharpe_monthly: sharpe(&monthly, Frequency::Monthly),
        }
    }

    fn cells(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
        vec![
            self.model.clone(),
            f(self.mean_return),
            f(self.return_std),
            f(self.monthly_es),
            f(self.mean_leverage),
            f(self.mean_drawdown),
            f(self.sharpe_daily),
            f(self.sharpe_weekly),
            f(self.sharpe_monthly),
        ]
    }
}

/// One row per ledger, sorted by model name.
pub fn report(ledgers: &[BacktestLedger]) -> Result<Vec<MetricsRow>> {
    if ledgers.is_empty() {
        return Err(Error::Argument("report needs at least one ledger".into()));
    }
    let mut rows: Vec<MetricsRow> = ledgers.iter().map(MetricsRow::from_ledger).collect();
    rows.sort_by(|a, b| a.model.cmp(&b.model));
    Ok(rows)
}

pub fn write_report_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table with right-aligned numeric columns.
pub fn render_table(rows: &[MetricsRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(|r| r.cells()).collect();
    let widths: Vec<usize> = (0..REPORT_COLUMNS.len())
        .map(|c| body.iter().map(|r| r[c].len()).chain([REPORT_COLUMNS[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<String>| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(REPORT_COLUMNS.iter().map(|s| s.to_string()).collect());
    out.push('\n');
    for r in body {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// `date,drawdown` rows for external plotting.
pub fn write_drawdown_csv<W: Write>(ledger: &BacktestLedger, writer: W) -> Result<()> {
    let values: Vec<f64> = ledger.daily.iter().map(|p| p.1).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "drawdown_pct"])?;
    for ((d, _), v) in ledger.daily.iter().zip(drawdown_series(&values)) {
        w.write_record([d.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sharpe_examples() {
        // net (1.1, -0.9): mean 0.1, population sd 1.0.
        let d = [101.1, 99.1];
        assert_relative_eq!(sharpe(&d, Frequency::Daily).unwrap(), 252f64.sqrt() * 0.1, epsilon = 1e-12);
        let m = [103.0, 99.0];
        assert_relative_eq!(sharpe(&m, Frequency::Monthly).unwrap(), 12f64.sqrt() * 0.5, epsilon = 1e-12);
        assert_eq!(sharpe(&[100.5; 4], Frequency::Weekly), None);
    }

    #[test]
    fn es_examples() {
        assert_eq!(expected_shortfall(&[101.0, 98.0, 103.0, 96.0]), -3.0);
        assert_eq!(expected_shortfall(&[101.0, 102.0]), 0.0);
        assert_eq!(expected_shortfall(&[99.0]), -1.0);
    }

    #[test]
    fn drawdown_examples() {
        let dd = drawdown_series(&[100.0, 110.0, 90.0]);
        assert_eq!(dd[0], 0.0);
        assert_eq!(dd[1], 0.0);
        assert_relative_eq!(dd[2], -10.0, epsilon = 1e-12);
        assert!(drawdown_series(&[100.0; 5]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn table_alignment() {
        let row = MetricsRow {
            model: "A1-SC".into(),
            mean_return: Some(12.0),
            return_std: Some(0.0),
            monthly_es: Some(0.0),
            mean_leverage: Some(1.0),
            mean_drawdown: Some(0.0),
            sharpe_daily: None,
            sharpe_weekly: None,
            sharpe_monthly: None,
        };
        let t = render_table(&[row]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("A1-SC"));
        assert!(lines[1].ends_with("NA"));
    }
}

//! Price loading, gross % returns, calendar resampling and train/test windows.
//!
//! Returns are kept in gross % units throughout: a flat day is `100.0`, a
//! one-percent gain is `101.0`. Net % return is `gross - 100`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Self { year, month }
    }

    pub fn of(date: NaiveDate) -> Self {
        Self::new(date.year(), date.month())
    }

    fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_index(i: i64) -> Self {
        Self::new(i.div_euclid(12) as i32, (i.rem_euclid(12) + 1) as u32)
    }

    /// Shift by a signed number of months.
    pub fn offset(self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
}

impl Frequency {
    /// Periods per year used to annualize Sharpe ratios.
    pub fn periods_per_year(self) -> f64 {
        match self {
            Frequency::Daily => 252.0,
            Frequency::Weekly => 52.0,
            Frequency::Monthly => 12.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
        }
    }
}

/// Daily close prices, one row per trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `dates.len() x tickers.len()`, all entries strictly positive.
    pub close: DMatrix<f64>,
}

/// Result of [`load_prices`]: the filtered panel plus the tickers that were
/// dropped for having gaps inside the requested range.
#[derive(Debug, Clone)]
pub struct LoadedPrices {
    pub panel: PricePanel,
    pub dropped: Vec<String>,
}

/// Gross % returns with date and ticker axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `dates.len() x tickers.len()`.
    pub returns: DMatrix<f64>,
    pub frequency: Frequency,
}

impl ReturnsPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        returns: DMatrix<f64>,
        frequency: Frequency,
    ) -> Result<Self> {
        if returns.nrows() != dates.len() || returns.ncols() != tickers.len() {
            return Err(Error::Argument(format!(
                "returns matrix is {}x{} but axes are {}x{}",
                returns.nrows(),
                returns.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("dates must be strictly increasing".into()));
        }
        Ok(Self {
            dates,
            tickers,
            returns,
            frequency,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.returns.column(i).iter().copied().collect()
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> ReturnsPanel {
        ReturnsPanel {
            dates: self.dates.clone(),
            tickers: idx.iter().map(|&i| self.tickers[i].clone()).collect(),
            returns: self.returns.select_columns(idx.iter()),
            frequency: self.frequency,
        }
    }

    /// Keep the columns whose tickers are listed, in the listed order.
    pub fn select_tickers(&self, tickers: &[String]) -> Result<ReturnsPanel> {
        let idx = tickers
            .iter()
            .map(|t| {
                self.tickers
                    .iter()
                    .position(|x| x == t)
                    .ok_or_else(|| Error::Argument(format!("unknown ticker {t}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&idx))
    }

    /// Rows whose date falls in `[from, to]` (month granularity, inclusive).
    pub fn months_between(&self, from: YearMonth, to: YearMonth) -> ReturnsPanel {
        let rows: Vec<usize> = self
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                let ym = YearMonth::of(**d);
                ym >= from && ym <= to
            })
            .map(|(i, _)| i)
            .collect();
        self.select_rows(&rows)
    }

    /// Rows with date `<= last`, used to truncate a panel.
    pub fn until(&self, last: NaiveDate) -> ReturnsPanel {
        let rows: Vec<usize> = (0..self.n_obs()).filter(|&i| self.dates[i] <= last).collect();
        self.select_rows(&rows)
    }

    fn select_rows(&self, rows: &[usize]) -> ReturnsPanel {
        ReturnsPanel {
            dates: rows.iter().map(|&i| self.dates[i]).collect(),
            tickers: self.tickers.clone(),
            returns: self.returns.select_rows(rows.iter()),
            frequency: self.frequency,
        }
    }

    /// Distinct calendar months present, ascending.
    pub fn months(&self) -> Vec<YearMonth> {
        let mut out: Vec<YearMonth> = self.dates.iter().map(|d| YearMonth::of(*d)).collect();
        out.dedup();
        out
    }
}

/// Training/testing window lengths in months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub train_months: u32,
    pub test_months: u32,
}

impl WindowSpec {
    pub fn new(train_months: u32, test_months: u32) -> Result<Self> {
        if train_months == 0 || test_months == 0 {
            return Err(Error::Argument(format!(
                "window ({train_months},{test_months}) must have positive lengths"
            )));
        }
        Ok(Self {
            train_months,
            test_months,
        })
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            train_months: 12,
            test_months: 1,
        }
    }
}

fn parse_date(s: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
        row,
        column: "date".into(),
        message: format!("invalid ISO-8601 date {s:?}: {e}"),
    })
}

/// Read prices from any CSV source. See [`load_prices`].
pub fn read_prices<R: Read>(
    reader: R,
    date_range: Option<(NaiveDate, NaiveDate)>,
) -> Result<LoadedPrices> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.get(0).map(str::trim) != Some("date") {
        return Err(Error::Parse {
            row: 0,
            column: header.get(0).unwrap_or("").to_string(),
            message: "first header column must be `date`".into(),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();

    // (date, cells) where a cell is None when blank.
    let mut rows: Vec<(NaiveDate, Vec<Option<f64>>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: "*".into(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let date = parse_date(&rec[0], row)?;
        if let Some((lo, hi)) = date_range {
            if date < lo || date > hi {
                continue;
            }
        }
        let mut cells = Vec::with_capacity(tickers.len());
        for (j, raw) in rec.iter().skip(1).enumerate() {
            let raw = raw.trim();
            if raw.is_empty() || raw.eq_ignore_ascii_case("nan") || raw.eq_ignore_ascii_case("na")
            {
                cells.push(None);
                continue;
            }
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: tickers[j].clone(),
                message: format!("not a number: {raw:?}"),
            })?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parse {
                    row,
                    column: tickers[j].clone(),
                    message: format!("price must be positive, found {v}"),
                });
            }
            cells.push(Some(v));
        }
        rows.push((date, cells));
    }

    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse {
            row: 0,
            column: "date".into(),
            message: format!("duplicate date {}", w[0].0),
        });
    }

    let keep: Vec<usize> = (0..tickers.len())
        .filter(|&j| rows.iter().all(|(_, c)| c[j].is_some()))
        .collect();
    let dropped: Vec<String> = (0..tickers.len())
        .filter(|j| !keep.contains(j))
        .map(|j| tickers[j].clone())
        .collect();
    if keep.is_empty() || rows.is_empty() {
        return Err(Error::EmptyUniverse(format!(
            "{} rows and {} complete tickers after filtering",
            rows.len(),
            keep.len()
        )));
    }

    let close = DMatrix::from_fn(rows.len(), keep.len(), |i, j| {
        rows[i].1[keep[j]].expect("kept tickers are complete")
    });
    Ok(LoadedPrices {
        panel: PricePanel {
            dates: rows.iter().map(|(d, _)| *d).collect(),
            tickers: keep.iter().map(|&j| tickers[j].clone()).collect(),
            close,
        },
        dropped,
    })
}

/// Load a `date,TICKER1,TICKER2,...` close-price CSV.
///
/// Tickers with any missing cell inside `date_range` are dropped and listed in
/// [`LoadedPrices::dropped`]. Dates are sorted ascending.
pub fn load_prices(path: &Path, date_range: Option<(NaiveDate, NaiveDate)>) -> Result<LoadedPrices> {
    let file = std::fs::File::open(path)?;
    read_prices(std::io::BufReader::new(file), date_range)
}

/// Write a panel in the same layout [`load_prices`] reads. Floats use the
/// shortest representation that round-trips exactly.
pub fn write_prices<W: Write>(panel: &PricePanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.tickers.iter().cloned());
    w.write_record(&header)?;
    for (i, d) in panel.dates.iter().enumerate() {
        let mut rec = vec![d.format("%Y-%m-%d").to_string()];
        rec.extend(panel.close.row(i).iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `100 * close[t+1] / close[t]` for every consecutive pair of rows.
pub fn to_gross_returns(prices: &PricePanel) -> Result<ReturnsPanel> {
    let n = prices.close.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 price rows, found {n}"
        )));
    }
    let d = prices.close.ncols();
    let returns = DMatrix::from_fn(n - 1, d, |t, i| {
        100.0 * prices.close[(t + 1, i)] / prices.close[(t, i)]
    });
    Ok(ReturnsPanel {
        dates: prices.dates[1..].to_vec(),
        tickers: prices.tickers.clone(),
        returns,
        frequency: Frequency::Daily,
    })
}

fn period_key(date: NaiveDate, target: Frequency) -> (i32, u32) {
    match target {
        Frequency::Weekly => {
            let w = date.iso_week();
            (w.year(), w.week())
        }
        Frequency::Monthly => (date.year(), date.month()),
        Frequency::Daily => (date.year(), date.ordinal()),
    }
}

/// Compound daily gross returns into ISO-week (Mon-Sun) or calendar-month
/// periods. Each period is dated by its last trading day; partial boundary
/// periods are kept.
pub fn resample(returns: &ReturnsPanel, target: Frequency) -> Result<ReturnsPanel> {
    if returns.frequency != Frequency::Daily {
        return Err(Error::Argument(format!(
            "resample expects daily input, got {}",
            returns.frequency.as_str()
        )));
    }
    if target == Frequency::Daily {
        return Err(Error::Argument("resample target must be weekly or monthly".into()));
    }
    let d = returns.n_assets();
    let mut groups: BTreeMap<(i32, u32), Vec<usize>> = BTreeMap::new();
    for (t, date) in returns.dates.iter().enumerate() {
        groups.entry(period_key(*date, target)).or_default().push(t);
    }
    let mut dates = Vec::with_capacity(groups.len());
    let mut out = DMatrix::zeros(groups.len(), d);
    for (p, rows) in groups.values().enumerate() {
        dates.push(returns.dates[*rows.last().expect("non-empty group")]);
        for i in 0..d {
            let growth: f64 = rows.iter().map(|&t| returns.returns[(t, i)] / 100.0).product();
            out[(p, i)] = 100.0 * growth;
        }
    }
    Ok(ReturnsPanel {
        dates,
        tickers: returns.tickers.clone(),
        returns: out,
        frequency: target,
    })
}

/// Compound a single series of daily gross returns per period. Returns
/// `(period_end_date, gross_return)` pairs.
pub fn resample_series(
    dates: &[NaiveDate],
    daily: &[f64],
    target: Frequency,
) -> Vec<(NaiveDate, f64)> {
    let mut out: Vec<(NaiveDate, f64)> = Vec::new();
    let mut current: Option<(i32, u32)> = None;
    let mut growth = 1.0;
    let mut last = None;
    for (date, r) in dates.iter().zip(daily) {
        let key = period_key(*date, target);
        if current.is_some() && current != Some(key) {
            out.push((last.expect("set with current"), 100.0 * growth));
            growth = 1.0;
        }
        current = Some(key);
        growth *= r / 100.0;
        last = Some(*date);
    }
    if let Some(date) = last {
        out.push((date, 100.0 * growth));
    }
    out
}

/// Split `returns` into the `train_months` calendar months strictly before
/// `month` and the `test_months` months starting at `month`.
pub fn slice_window(
    returns: &ReturnsPanel,
    window: WindowSpec,
    month: YearMonth,
) -> Result<(ReturnsPanel, ReturnsPanel)> {
    let train_from = month.offset(-(window.train_months as i64));
    let train_to = month.offset(-1);
    let test_to = month.offset(window.test_months as i64 - 1);

    let present: std::collections::BTreeSet<YearMonth> = returns.months().into_iter().collect();
    let mut missing = Vec::new();
    let mut m = train_from;
    while m <= test_to {
        if !present.contains(&m) {
            missing.push(m.to_string());
        }
        m = m.next();
    }
    if !missing.is_empty() {
        return Err(Error::Window(format!(
            "window for {month} (train {train_from}..{train_to}) lacks data for months {}",
            missing.join(", ")
        )));
    }
    Ok((
        returns.months_between(train_from, train_to),
        returns.months_between(month, test_to),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn prices(rows: &[(NaiveDate, Vec<f64>)], tickers: &[&str]) -> PricePanel {
        PricePanel {
            dates: rows.iter().map(|r| r.0).collect(),
            tickers: tickers.iter().map(|s| s.to_string()).collect(),
            close: DMatrix::from_fn(rows.len(), tickers.len(), |i, j| rows[i].1[j]),
        }
    }

    #[test]
    fn drops_ticker_with_gap() {
        let csv = "date,AAA,BBB,CCC\n2020-01-02,10,20,30\n2020-01-03,11,,31\n2020-01-06,12,22,32\n";
        let out = read_prices(csv.as_bytes(), None).unwrap();
        assert_eq!(out.panel.tickers, vec!["AAA", "CCC"]);
        assert_eq!(out.dropped, vec!["BBB"]);
    }

    #[test]
    fn gap_outside_range_is_ignored() {
        let csv = "date,AAA,BBB\n2020-01-02,10,\n2020-01-03,11,21\n2020-01-06,12,22\n";
        let range = Some((date(2020, 1, 3), date(2020, 1, 31)));
        let out = read_prices(csv.as_bytes(), range).unwrap();
        assert_eq!(out.panel.tickers.len(), 2);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn sorts_unsorted_dates() {
        let csv = "date,AAA\n2020-01-06,12\n2020-01-02,10\n2020-01-03,11\n";
        let out = read_prices(csv.as_bytes(), None).unwrap();
        assert_eq!(
            out.panel.dates,
            vec![date(2020, 1, 2), date(2020, 1, 3), date(2020, 1, 6)]
        );
        assert_eq!(out.panel.close[(0, 0)], 10.0);
    }

    #[test]
    fn non_positive_price_names_the_cell() {
        let csv = "date,AAA,BBB\n2020-01-02,10,20\n2020-01-03,11,0\n";
        match read_prices(csv.as_bytes(), None) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "BBB");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_number_and_date() {
        let bad_num = "date,AAA\n2020-01-02,abc\n";
        assert!(matches!(
            read_prices(bad_num.as_bytes(), None),
            Err(Error::Parse { row: 1, .. })
        ));
        let bad_date = "date,AAA\n02/01/2020,1\n";
        assert!(matches!(
            read_prices(bad_date.as_bytes(), None),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn empty_after_filtering() {
        let csv = "date,AAA\n2020-01-02,\n2020-01-03,11\n";
        assert!(matches!(
            read_prices(csv.as_bytes(), None),
            Err(Error::EmptyUniverse(_))
        ));
    }

    #[test]
    fn gross_returns_examples() {
        let p = prices(
            &[
                (date(2020, 1, 2), vec![100.0, 100.0, 200.0]),
                (date(2020, 1, 3), vec![101.0, 100.0, 190.0]),
            ],
            &["A", "B", "C"],
        );
        let r = to_gross_returns(&p).unwrap();
        assert_eq!(r.n_obs(), 1);
        assert_eq!(r.returns[(0, 0)], 101.0);
        assert_eq!(r.returns[(0, 1)], 100.0);
        assert_relative_eq!(r.returns[(0, 2)], 95.0, epsilon = 1e-12);
        assert_eq!(r.dates, vec![date(2020, 1, 3)]);
    }

    #[test]
    fn gross_returns_needs_two_rows() {
        let p = prices(&[(date(2020, 1, 2), vec![1.0])], &["A"]);
        assert!(matches!(to_gross_returns(&p), Err(Error::InsufficientData(_))));
    }

    fn daily(rows: &[(NaiveDate, f64)]) -> ReturnsPanel {
        ReturnsPanel::new(
            rows.iter().map(|r| r.0).collect(),
            vec!["A".into()],
            DMatrix::from_fn(rows.len(), 1, |i, _| rows[i].1),
            Frequency::Daily,
        )
        .unwrap()
    }

    #[test]
    fn weekly_compounding() {
        // Tue and Wed of the same ISO week.
        let r = daily(&[(date(2024, 3, 5), 100.5), (date(2024, 3, 6), 100.5)]);
        let w = resample(&r, Frequency::Weekly).unwrap();
        assert_eq!(w.n_obs(), 1);
        assert_relative_eq!(w.returns[(0, 0)], 101.0025, epsilon = 1e-10);

        let r = daily(&[(date(2024, 3, 5), 110.0), (date(2024, 3, 6), 100.0 / 1.1)]);
        let w = resample(&r, Frequency::Weekly).unwrap();
        assert_relative_eq!(w.returns[(0, 0)], 100.0, epsilon = 1e-10);
    }

    #[test]
    fn week_boundary_is_monday() {
        // Sunday 2024-03-10 and Monday 2024-03-11 fall in different ISO weeks.
        let r = daily(&[(date(2024, 3, 10), 101.0), (date(2024, 3, 11), 102.0)]);
        let w = resample(&r, Frequency::Weekly).unwrap();
        assert_eq!(w.n_obs(), 2);
        assert_eq!(w.dates, vec![date(2024, 3, 10), date(2024, 3, 11)]);
    }

    #[test]
    fn monthly_identity() {
        let r = daily(&[(date(2024, 3, 5), 100.0)]);
        let m = resample(&r, Frequency::Monthly).unwrap();
        assert_eq!(m.returns[(0, 0)], 100.0);
    }

    #[test]
    fn resample_series_matches_panel() {
        let rows = [
            (date(2024, 1, 30), 101.0),
            (date(2024, 1, 31), 99.0),
            (date(2024, 2, 1), 100.5),
            (date(2024, 2, 2), 102.0),
        ];
        let r = daily(&rows);
        let m = resample(&r, Frequency::Monthly).unwrap();
        let s = resample_series(&r.dates, &r.column(0), Frequency::Monthly);
        assert_eq!(s.len(), 2);
        for (k, (d, v)) in s.iter().enumerate() {
            assert_eq!(*d, m.dates[k]);
            assert_eq!(*v, m.returns[(k, 0)]);
        }
    }

    fn monthly_panel(from: YearMonth, months: i64) -> ReturnsPanel {
        let dates: Vec<NaiveDate> = (0..months)
            .flat_map(|k| {
                let ym = from.offset(k);
                [1u32, 15].map(|d| date(ym.year, ym.month, d))
            })
            .collect();
        let n = dates.len();
        ReturnsPanel::new(dates, vec!["A".into()], DMatrix::from_element(n, 1, 100.0), Frequency::Daily)
            .unwrap()
    }

    #[test]
    fn window_twelve_months() {
        let r = monthly_panel(YearMonth::new(2011, 6), 24);
        let (train, test) =
            slice_window(&r, WindowSpec::new(12, 1).unwrap(), YearMonth::new(2013, 1)).unwrap();
        assert_eq!(train.months().first(), Some(&YearMonth::new(2012, 1)));
        assert_eq!(train.months().last(), Some(&YearMonth::new(2012, 12)));
        assert_eq!(train.months().len(), 12);
        assert_eq!(test.months(), vec![YearMonth::new(2013, 1)]);
        assert!(train.dates.last().unwrap() < test.dates.first().unwrap());
    }

    #[test]
    fn window_six_months() {
        let r = monthly_panel(YearMonth::new(2012, 6), 24);
        let (train, _) =
            slice_window(&r, WindowSpec::new(6, 1).unwrap(), YearMonth::new(2013, 7)).unwrap();
        assert_eq!(train.months().first(), Some(&YearMonth::new(2013, 1)));
        assert_eq!(train.months().last(), Some(&YearMonth::new(2013, 6)));
    }

    #[test]
    fn window_before_data_start() {
        let r = monthly_panel(YearMonth::new(2012, 1), 24);
        let err = slice_window(&r, WindowSpec::default(), YearMonth::new(2012, 6)).unwrap_err();
        match err {
            Error::Window(msg) => assert!(msg.contains("2011-06"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn year_month_arithmetic() {
        let m = YearMonth::new(2013, 1);
        assert_eq!(m.offset(-1), YearMonth::new(2012, 12));
        assert_eq!(m.offset(-12), YearMonth::new(2012, 1));
        assert_eq!(m.offset(13), YearMonth::new(2014, 2));
    }
}

//! Seeded sector-factor price generator behind the bundled sample dataset.

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::market_data::PricePanel;

pub const SECTORS: [&str; 5] = ["EN", "FI", "HC", "IT", "UT"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub per_sector: usize,
    /// Daily log-return volatilities in percent.
    pub market_vol: f64,
    pub sector_vol: f64,
    pub idio_vol: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 20100101,
            start: NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2013, 12, 31).expect("valid date"),
            per_sector: 6,
            market_vol: 0.9,
            sector_vol: 0.7,
            idio_vol: 1.1,
        }
    }
}

/// Monday to Friday dates in `[start, end]`.
pub fn business_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Close prices from a market + sector + idiosyncratic log-return model.
/// Prices are rounded to 4 decimals so the CSV form is exact.
pub fn generate(spec: &SyntheticSpec) -> Result<PricePanel> {
    if spec.per_sector == 0 || spec.start >= spec.end {
        return Err(Error::Argument("synthetic spec needs tickers and a non-empty date range".into()));
    }
    let dates = business_days(spec.start, spec.end);
    let n_sectors = SECTORS.len();
    let d = n_sectors * spec.per_sector;
    let tickers: Vec<String> = SECTORS
        .iter()
        .flat_map(|s| (1..=spec.per_sector).map(move |i| format!("{s}{i}")))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid sd");
    let drift: Vec<f64> = (0..d).map(|_| rng.random_range(-0.03..0.12)).collect();
    let beta_m: Vec<f64> = (0..d).map(|_| rng.random_range(0.6..1.4)).collect();
    let beta_s: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut price: Vec<f64> = (0..d).map(|_| rng.random_range(20.0..200.0)).collect();

    let mut close = DMatrix::zeros(dates.len(), d);
    for t in 0..dates.len() {
        if t > 0 {
            let m = spec.market_vol * unit.sample(&mut rng);
            let s: Vec<f64> = (0..n_sectors).map(|_| spec.sector_vol * unit.sample(&mut rng)).collect();
            for i in 0..d {
                let e = spec.idio_vol * unit.sample(&mut rng);
                let r = drift[i] + beta_m[i] * m + beta_s[i] * s[i / spec.per_sector] + e;
                price[i] *= (r / 100.0).exp();
            }
        }
        for i in 0..d {
            close[(t, i)] = (price[i] * 1e4).round() / 1e4;
        }
    }
    Ok(PricePanel { dates, tickers, close })
}

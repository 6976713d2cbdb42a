//! Equal-correlation portfolio construction and walk-forward backtesting.

// `!(x > 0.0)` is used deliberately so NaN takes the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod backtest;
pub mod commands;
pub mod config;
pub mod error;
pub mod estimators;
pub mod market_data;
pub mod models;
pub mod optimizer;
pub mod risk;
pub mod selection;
pub mod synthetic;
pub mod tuning;

pub use error::{Error, Result};

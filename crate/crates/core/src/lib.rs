//! macdlab: a deterministic daily-bar backtesting engine for MACD-family
//! and VPVMA trading strategies.
//!
//! The pipeline is `marketdata` (CSV ingestion and validation) ->
//! `indicators` -> `signals` (nine strategy rules) -> `backtest`
//! (all-in/all-out execution) -> `metrics` (panel statistics), with
//! `optimizer` providing a genetic-algorithm search over MACD parameter
//! triples and `cli` the command-line front end.

pub mod backtest;
pub mod cli;
pub mod indicators;
pub mod marketdata;
pub mod metrics;
pub mod optimizer;
pub mod signals;

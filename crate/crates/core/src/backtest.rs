//! Bar-by-bar trade execution.
//!
//! Single all-in/all-out long position per symbol: a Buy signal at bar `t`
//! buys as many whole shares as cash affords at the next bar's fill price,
//! a Sell signal liquidates at the next bar's fill price. No costs, no
//! slippage, no shorting, no leverage.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::marketdata::{Universe, ValidatedBarSeries};
use crate::signals::{Signal, SignalSeries, StrategySpec};

/// Which price the day-after fill uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPrice {
    /// The next bar's open: the first price available after the signal day.
    #[default]
    NextOpen,
    NextClose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionConfig {
    pub initial_cash: f64,
    #[serde(default)]
    pub fill_price: FillPrice,
    #[serde(default = "default_force_close")]
    pub force_close_at_end: bool,
}

fn default_force_close() -> bool {
    true
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            initial_cash: 80_000.0,
            fill_price: FillPrice::NextOpen,
            force_close_at_end: true,
        }
    }
}

/// One closed round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub entry_price: f64,
    pub exit_price: f64,
    pub shares: u64,
    pub pnl: f64,
    pub ret: f64,
    pub forced_exit: bool,
}

/// Per-bar account snapshot, marked to the close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub date: NaiveDate,
    pub cash: f64,
    pub shares: u64,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeLedger {
    pub symbol: String,
    pub trades: Vec<Trade>,
    pub equity_curve: Vec<EquityPoint>,
}

impl TradeLedger {
    pub fn final_equity(&self) -> f64 {
        self.equity_curve.last().map(|p| p.equity).unwrap_or(0.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BacktestError {
    #[error("misaligned series: {bars} bars vs {signals} signals")]
    MisalignedSeries { bars: usize, signals: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("initial cash must be positive")]
    NonPositiveCash,
}

/// Runs the execution state machine over one symbol.
pub fn run_backtest(
    series: &ValidatedBarSeries,
    signals: &SignalSeries,
    cfg: &ExecutionConfig,
) -> Result<TradeLedger, BacktestError> {
    let bars = series.bars();
    if bars.is_empty() {
        return Err(BacktestError::EmptySeries);
    }
    if bars.len() != signals.len() {
        return Err(BacktestError::MisalignedSeries {
            bars: bars.len(),
            signals: signals.len(),
        });
    }
    if cfg.initial_cash <= 0.0 {
        return Err(BacktestError::NonPositiveCash);
    }

    let mut cash = cfg.initial_cash;
    let mut shares: u64 = 0;
    let mut entry: Option<(NaiveDate, f64)> = None;
    let mut trades = Vec::new();
    let mut equity_curve = Vec::with_capacity(bars.len());

    // Pending order from yesterday's signal, executed at today's fill price.
    let mut pending: Signal = Signal::Hold;

    for (t, bar) in bars.iter().enumerate() {
        let fill = match cfg.fill_price {
            FillPrice::NextOpen => bar.open,
            FillPrice::NextClose => bar.close,
        };
        match pending {
            Signal::Buy if shares == 0 => {
                let qty = (cash / fill).floor() as u64;
                if qty >= 1 {
                    cash -= qty as f64 * fill;
                    shares = qty;
                    entry = Some((bar.date, fill));
                }
            }
            Signal::Sell if shares > 0 => {
                let (entry_date, entry_price) = entry.take().expect("long position has an entry");
                cash += shares as f64 * fill;
                trades.push(Trade {
                    entry_date,
                    exit_date: bar.date,
                    entry_price,
                    exit_price: fill,
                    shares,
                    pnl: shares as f64 * (fill - entry_price),
                    ret: fill / entry_price - 1.0,
                    forced_exit: false,
                });
                shares = 0;
            }
            _ => {} // signal targeting the state we're already in: no-op
        }
        // A signal on the final bar has no next bar to execute on.
        pending = if t + 1 < bars.len() {
            signals.get(t)
        } else {
            Signal::Hold
        };

        equity_curve.push(EquityPoint {
            date: bar.date,
            cash,
            shares,
            equity: cash + shares as f64 * bar.close,
        });
    }

    if cfg.force_close_at_end && shares > 0 {
        let last = bars.last().unwrap();
        let (entry_date, entry_price) = entry.take().expect("long position has an entry");
        cash += shares as f64 * last.close;
        trades.push(Trade {
            entry_date,
            exit_date: last.date,
            entry_price,
            exit_price: last.close,
            shares,
            pnl: shares as f64 * (last.close - entry_price),
            ret: last.close / entry_price - 1.0,
            forced_exit: true,
        });
        let end = equity_curve.last_mut().unwrap();
        end.cash = cash;
        end.shares = 0;
        end.equity = cash;
    }

    Ok(TradeLedger {
        symbol: series.symbol().to_string(),
        trades,
        equity_curve,
    })
}

/// A per-symbol failure inside a universe run. Collected, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub symbol: String,
    pub message: String,
}

pub struct UniverseRun {
    pub ledgers: Vec<TradeLedger>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Backtests every symbol of a universe independently, each funded with its
/// own `initial_cash`. Output is ordered by symbol; missing or failing
/// symbols become diagnostics.
pub fn run_universe(
    universe: &Universe,
    spec: &StrategySpec,
    cfg: &ExecutionConfig,
    data: &BTreeMap<String, ValidatedBarSeries>,
) -> UniverseRun {
    let mut ledgers = Vec::new();
    let mut diagnostics = Vec::new();
    let mut symbols: Vec<&String> = universe.symbols.iter().collect();
    symbols.sort();
    for symbol in symbols {
        let Some(series) = data.get(symbol) else {
            diagnostics.push(Diagnostic {
                symbol: symbol.clone(),
                message: "no data".into(),
            });
            continue;
        };
        let result = crate::signals::evaluate(spec, series)
            .map_err(|e| e.to_string())
            .and_then(|signals| {
                run_backtest(series, &signals, cfg).map_err(|e| e.to_string())
            });
        match result {
            Ok(ledger) => ledgers.push(ledger),
            Err(message) => diagnostics.push(Diagnostic {
                symbol: symbol.clone(),
                message,
            }),
        }
    }
    UniverseRun {
        ledgers,
        diagnostics,
    }
}

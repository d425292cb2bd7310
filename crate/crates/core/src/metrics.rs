//! Performance statistics over trade ledgers and equity curves.
//!
//! Conventions that are often left unstated, pinned here: Sharpe/Sortino
//! run on
//! daily simple equity returns with a zero risk-free rate, population
//! standard deviations, and sqrt(252) annualization; max drawdown is
//! reported as a positive magnitude; kurtosis is the raw (non-excess)
//! standardized fourth moment. Undefined statistics (zero variance, no
//! losers, fewer than the needed observations) come back as `None` and are
//! rendered as absent, never as zero.

use serde::{Deserialize, Serialize};

use crate::backtest::{EquityPoint, Trade, TradeLedger};

const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Whether curve ratios come from equity curves or pooled trade returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpeBasis {
    #[default]
    EquityCurve,
    TradeReturns,
}

/// Whether kurtosis is raw or excess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisConvention {
    #[default]
    Raw,
    Excess,
}

/// How per-symbol results fold into one universe row: trade statistics are
/// pooled across symbols, curve statistics are computed per symbol and then
/// equal-weight averaged. Recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AggregationPolicy {
    #[serde(default)]
    pub sharpe_basis: SharpeBasis,
    #[serde(default)]
    pub kurtosis: KurtosisConvention,
}

/// One row of a strategy comparison panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub nt: usize,
    pub win_rate: Option<f64>,
    pub pnl_ratio: Option<f64>,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub mdd: Option<f64>,
    pub accumulated_gain: f64,
    pub accumulated_loss: f64,
    pub accumulated_profit: f64,
    pub mean_ret: Option<f64>,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub policy: AggregationPolicy,
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

fn population_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt())
}

/// Winning trades over all trades; zero-pnl trades only count in the
/// denominator. `None` on an empty trade list.
pub fn win_rate(trades: &[Trade]) -> Option<f64> {
    if trades.is_empty() {
        return None;
    }
    let wins = trades.iter().filter(|t| t.pnl > 0.0).count();
    Some(wins as f64 / trades.len() as f64)
}

/// Mean winner gain over mean loser magnitude. Needs at least one of each.
pub fn pnl_ratio(trades: &[Trade]) -> Option<f64> {
    let gains: Vec<f64> = trades.iter().filter(|t| t.pnl > 0.0).map(|t| t.pnl).collect();
    let losses: Vec<f64> = trades.iter().filter(|t| t.pnl < 0.0).map(|t| -t.pnl).collect();
    Some(mean(&gains)? / mean(&losses)?)
}

fn daily_returns(curve: &[EquityPoint]) -> Vec<f64> {
    curve.windows(2).map(|w| w[1].equity / w[0].equity - 1.0).collect()
}

fn annualized_ratio(returns: &[f64], denom: Option<f64>) -> Option<f64> {
    let m = mean(returns)?;
    let d = denom?;
    if d == 0.0 {
        return None;
    }
    Some(m / d * TRADING_DAYS_PER_YEAR.sqrt())
}

/// Annualized Sharpe over daily equity returns, risk-free rate zero.
pub fn sharpe(curve: &[EquityPoint]) -> Option<f64> {
    let returns = daily_returns(curve);
    if returns.is_empty() {
        return None;
    }
    annualized_ratio(&returns, population_std(&returns))
}

/// Annualized Sortino: same numerator, denominator the population std of
/// the strictly negative daily returns. Absent when nothing went down.
pub fn sortino(curve: &[EquityPoint]) -> Option<f64> {
    let returns = daily_returns(curve);
    if returns.is_empty() {
        return None;
    }
    let downside: Vec<f64> = returns.iter().copied().filter(|r| *r < 0.0).collect();
    if downside.is_empty() {
        return None;
    }
    annualized_ratio(&returns, population_std(&downside))
}

/// Same two ratios over an arbitrary return sample (the per-trade basis).
pub fn sharpe_of_returns(returns: &[f64]) -> Option<f64> {
    if returns.is_empty() {
        return None;
    }
    annualized_ratio(returns, population_std(returns))
}

pub fn sortino_of_returns(returns: &[f64]) -> Option<f64> {
    if returns.is_empty() {
        return None;
    }
    let downside: Vec<f64> = returns.iter().copied().filter(|r| *r < 0.0).collect();
    if downside.is_empty() {
        return None;
    }
    annualized_ratio(returns, population_std(&downside))
}

/// Largest peak-to-trough equity decline as a fraction in [0, 1].
pub fn max_drawdown(curve: &[EquityPoint]) -> Option<f64> {
    if curve.is_empty() {
        return None;
    }
    let mut peak = f64::MIN;
    let mut worst = 0.0f64;
    for p in curve {
        peak = peak.max(p.equity);
        worst = worst.max((peak - p.equity) / peak);
    }
    Some(worst)
}

/// Gain, loss (negative), and their sum, pooled over all symbols' trades.
pub fn accumulated_profit(ledgers: &[TradeLedger]) -> (f64, f64, f64) {
    let mut gain = 0.0;
    let mut loss = 0.0;
    for trade in ledgers.iter().flat_map(|l| &l.trades) {
        if trade.pnl > 0.0 {
            gain += trade.pnl;
        } else {
            loss += trade.pnl;
        }
    }
    (gain, loss, gain + loss)
}

/// Mean, skewness (Fisher-Pearson), kurtosis of pooled per-trade returns.
/// Skewness/kurtosis are absent for constant samples or fewer than 2
/// observations.
pub fn return_moments(
    trades: &[Trade],
    convention: KurtosisConvention,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let returns: Vec<f64> = trades.iter().map(|t| t.ret).collect();
    let Some(m) = mean(&returns) else {
        return (None, None, None);
    };
    let n = returns.len() as f64;
    let m2 = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 || returns.len() < 2 {
        return (Some(m), None, None);
    }
    let m3 = returns.iter().map(|r| (r - m).powi(3)).sum::<f64>() / n;
    let m4 = returns.iter().map(|r| (r - m).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = match convention {
        KurtosisConvention::Raw => m4 / (m2 * m2),
        KurtosisConvention::Excess => m4 / (m2 * m2) - 3.0,
    };
    (Some(m), Some(skew), Some(kurt))
}

/// Folds per-symbol ledgers into one report row under the stated policy.
pub fn aggregate(ledgers: &[TradeLedger], policy: AggregationPolicy) -> StrategyReport {
    let pooled: Vec<Trade> = ledgers.iter().flat_map(|l| l.trades.clone()).collect();
    let (gain, loss, ap) = accumulated_profit(ledgers);
    let (mean_ret, skewness, kurtosis) = return_moments(&pooled, policy.kurtosis);

    let cross_mean = |f: &dyn Fn(&TradeLedger) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = ledgers.iter().filter_map(|l| f(l)).collect();
        mean(&vals)
    };
    let (sharpe_v, sortino_v) = match policy.sharpe_basis {
        SharpeBasis::EquityCurve => (
            cross_mean(&|l| sharpe(&l.equity_curve)),
            cross_mean(&|l| sortino(&l.equity_curve)),
        ),
        SharpeBasis::TradeReturns => {
            let returns: Vec<f64> = pooled.iter().map(|t| t.ret).collect();
            (sharpe_of_returns(&returns), sortino_of_returns(&returns))
        }
    };

    StrategyReport {
        nt: pooled.len(),
        win_rate: win_rate(&pooled),
        pnl_ratio: pnl_ratio(&pooled),
        sharpe: sharpe_v,
        sortino: sortino_v,
        mdd: cross_mean(&|l| max_drawdown(&l.equity_curve)),
        accumulated_gain: gain,
        accumulated_loss: loss,
        accumulated_profit: ap,
        mean_ret,
        skewness,
        kurtosis,
        policy,
    }
}

//! Per-bar Buy/Sell/Hold decision rules.
//!
//! Crossover rules are event rules: they fire on a strict sign change
//! between `t-1` and `t`. The combination rules read their MACD condition
//! as a level (`macd_t > signal_t`); the backtest's position state machine
//! keeps repeated level signals from re-entering. Any bar where a required
//! indicator entry is still warming up is a Hold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{self, IndicatorSeries, MacdParams};
use crate::marketdata::ValidatedBarSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signal {
    Buy,
    Sell,
    Hold,
}

/// Signals aligned 1:1 with the bars they were computed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalSeries(pub Vec<Signal>);

impl SignalSeries {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, t: usize) -> Signal {
        self.0[t]
    }

    pub fn buy_indices(&self) -> Vec<usize> {
        self.indices_of(Signal::Buy)
    }

    pub fn sell_indices(&self) -> Vec<usize> {
        self.indices_of(Signal::Sell)
    }

    fn indices_of(&self, s: Signal) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, x)| **x == s)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("misaligned series: lengths {0} and {1}")]
    MisalignedSeries(usize, usize),
}

fn check_aligned(a: &IndicatorSeries, b: &IndicatorSeries) -> Result<(), SignalError> {
    if a.len() != b.len() {
        return Err(SignalError::MisalignedSeries(a.len(), b.len()));
    }
    Ok(())
}

/// How the six-value trailing threshold condition is quantified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdQuantifier {
    /// Every trailing value must satisfy the threshold.
    #[default]
    All,
    /// At least one trailing value must satisfy it.
    Any,
}

/// Which prior-bar clause the VPVMA sell condition uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VpvmaSellMode {
    /// `vpvma_{t-1} <= vpvmas_{t-1}`: the same prior-bar clause as buy.
    #[default]
    Literal,
    /// `vpvma_{t-1} >= vpvmas_{t-1}` (the likely intended mirror of buy).
    Corrected,
}

/// Buy on a strict up-cross of the MACD line through its signal line, sell
/// on a strict down-cross.
pub fn macd_crossover_sig(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
) -> Result<SignalSeries, SignalError> {
    check_aligned(macd, signal)?;
    let mut out = vec![Signal::Hold; macd.len()];
    for t in 1..macd.len() {
        let vals = (macd.get(t - 1), signal.get(t - 1), macd.get(t), signal.get(t));
        if let (Some(m0), Some(s0), Some(m1), Some(s1)) = vals {
            if m0 < s0 && m1 > s1 {
                out[t] = Signal::Buy;
            } else if m0 > s0 && m1 < s1 {
                out[t] = Signal::Sell;
            }
        }
    }
    Ok(SignalSeries(out))
}

/// Buy/sell on a strict zero-line crossing of the MACD line.
pub fn macd_crossover_zero(macd: &IndicatorSeries) -> SignalSeries {
    let mut out = vec![Signal::Hold; macd.len()];
    for t in 1..macd.len() {
        if let (Some(m0), Some(m1)) = (macd.get(t - 1), macd.get(t)) {
            if m0 < 0.0 && m1 > 0.0 {
                out[t] = Signal::Buy;
            } else if m0 > 0.0 && m1 < 0.0 {
                out[t] = Signal::Sell;
            }
        }
    }
    SignalSeries(out)
}

/// Strict V / Lambda shape in the last three histogram bars: buy when all
/// three are negative with a strict trough in the middle, sell on the
/// mirrored peak. Ties hold.
pub fn macd_hist_rule(hist: &IndicatorSeries) -> SignalSeries {
    let mut out = vec![Signal::Hold; hist.len()];
    for t in 2..hist.len() {
        let vals = (hist.get(t - 2), hist.get(t - 1), hist.get(t));
        if let (Some(a), Some(b), Some(c)) = vals {
            if a < 0.0 && b < 0.0 && c < 0.0 && b < a && b < c {
                out[t] = Signal::Buy;
            } else if a > 0.0 && b > 0.0 && c > 0.0 && b > a && b > c {
                out[t] = Signal::Sell;
            }
        }
    }
    SignalSeries(out)
}

/// Signal-line crossover gated by the MACD line's sign at the crossing bar.
pub fn macd_crossover_sig_above0(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
) -> Result<SignalSeries, SignalError> {
    let crossings = macd_crossover_sig(macd, signal)?;
    let out = crossings
        .0
        .iter()
        .enumerate()
        .map(|(t, s)| match s {
            Signal::Buy if macd.get(t).unwrap_or(0.0) > 0.0 => Signal::Buy,
            Signal::Sell if macd.get(t).unwrap_or(0.0) < 0.0 => Signal::Sell,
            _ => Signal::Hold,
        })
        .collect();
    Ok(SignalSeries(out))
}

/// MACD level condition combined with a band-width regime filter:
/// buy while `macd > signal` and the short BBW average sits above the long
/// one, sell with both reversed.
pub fn macd_bb_rule(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
    bbw: &IndicatorSeries,
    short_win: usize,
    long_win: usize,
) -> Result<SignalSeries, EvalError> {
    check_aligned(macd, signal)?;
    check_aligned(macd, bbw)?;
    let short = indicators::sma_of(bbw, short_win)?;
    let long = indicators::sma_of(bbw, long_win)?;
    let mut out = vec![Signal::Hold; macd.len()];
    for t in 0..macd.len() {
        let vals = (macd.get(t), signal.get(t), short.get(t), long.get(t));
        if let (Some(m), Some(s), Some(sh), Some(lo)) = vals {
            if m > s && sh > lo {
                out[t] = Signal::Buy;
            } else if m < s && sh < lo {
                out[t] = Signal::Sell;
            }
        }
    }
    Ok(SignalSeries(out))
}

/// MACD level condition combined with a SAR flip through the close.
pub fn macd_sar_rule(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
    sar: &IndicatorSeries,
    close: &[f64],
) -> Result<SignalSeries, SignalError> {
    check_aligned(macd, signal)?;
    check_aligned(macd, sar)?;
    if close.len() != macd.len() {
        return Err(SignalError::MisalignedSeries(macd.len(), close.len()));
    }
    let mut out = vec![Signal::Hold; macd.len()];
    for t in 1..macd.len() {
        let vals = (macd.get(t), signal.get(t), sar.get(t - 1), sar.get(t));
        if let (Some(m), Some(s), Some(sar0), Some(sar1)) = vals {
            if m > s && sar0 > close[t - 1] && sar1 < close[t] {
                out[t] = Signal::Buy;
            } else if m < s && sar0 < close[t - 1] && sar1 > close[t] {
                out[t] = Signal::Sell;
            }
        }
    }
    Ok(SignalSeries(out))
}

/// MACD level condition combined with a trailing-window oscillator
/// threshold. Shared by the MFI and RSI combinations.
pub fn macd_oscillator_rule(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
    osc: &IndicatorSeries,
    lower: f64,
    upper: f64,
    lookback: usize,
    quantifier: ThresholdQuantifier,
) -> Result<SignalSeries, SignalError> {
    check_aligned(macd, signal)?;
    check_aligned(macd, osc)?;
    assert!(lookback >= 1, "lookback must be at least 1");
    let mut out = vec![Signal::Hold; macd.len()];
    for t in 0..macd.len() {
        if t + 1 < lookback {
            continue;
        }
        let (Some(m), Some(s)) = (macd.get(t), signal.get(t)) else {
            continue;
        };
        let trailing: Option<Vec<f64>> =
            (t + 1 - lookback..=t).map(|i| osc.get(i)).collect();
        let Some(trailing) = trailing else { continue };
        let holds = |pred: &dyn Fn(f64) -> bool| match quantifier {
            ThresholdQuantifier::All => trailing.iter().all(|v| pred(*v)),
            ThresholdQuantifier::Any => trailing.iter().any(|v| pred(*v)),
        };
        if m > s && holds(&|v| v <= lower) {
            out[t] = Signal::Buy;
        } else if m < s && holds(&|v| v >= upper) {
            out[t] = Signal::Sell;
        }
    }
    Ok(SignalSeries(out))
}

pub fn macd_mfi_rule(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
    mfi: &IndicatorSeries,
    lower: f64,
    upper: f64,
    lookback: usize,
    quantifier: ThresholdQuantifier,
) -> Result<SignalSeries, SignalError> {
    macd_oscillator_rule(macd, signal, mfi, lower, upper, lookback, quantifier)
}

pub fn macd_rsi_rule(
    macd: &IndicatorSeries,
    signal: &IndicatorSeries,
    rsi: &IndicatorSeries,
    lower: f64,
    upper: f64,
    lookback: usize,
    quantifier: ThresholdQuantifier,
) -> Result<SignalSeries, SignalError> {
    macd_oscillator_rule(macd, signal, rsi, lower, upper, lookback, quantifier)
}

/// Band-filtered VPVMA/VPVMAS crossing. Buy fires when the line jumps more
/// than `bandwidth` above its signal after sitting at or below it; the sell
/// clause ships in both the printed form and the mirrored one. If the two
/// conditions ever overlap (possible with a negative signal value under the
/// literal mode), buy wins.
pub fn vpvma_rule(
    vpvma: &IndicatorSeries,
    vpvmas: &IndicatorSeries,
    bandwidth: f64,
    sell_mode: VpvmaSellMode,
) -> Result<SignalSeries, SignalError> {
    check_aligned(vpvma, vpvmas)?;
    let mut out = vec![Signal::Hold; vpvma.len()];
    for t in 1..vpvma.len() {
        let vals = (vpvma.get(t - 1), vpvmas.get(t - 1), vpvma.get(t), vpvmas.get(t));
        let (Some(v0), Some(s0), Some(v1), Some(s1)) = vals else {
            continue;
        };
        let buy = v1 > (1.0 + bandwidth) * s1 && v0 <= s0;
        let sell_prior = match sell_mode {
            VpvmaSellMode::Literal => v0 <= s0,
            VpvmaSellMode::Corrected => v0 >= s0,
        };
        let sell = v1 < (1.0 - 2.0 * bandwidth) * s1 && sell_prior;
        if buy {
            out[t] = Signal::Buy;
        } else if sell {
            out[t] = Signal::Sell;
        }
    }
    Ok(SignalSeries(out))
}

/// Standalone oscillator level rule (the building block the combinations
/// reuse): buy at or below `lower`, sell at or above `upper`.
pub fn oscillator_rule(osc: &IndicatorSeries, lower: f64, upper: f64) -> SignalSeries {
    assert!(lower < upper);
    let out = (0..osc.len())
        .map(|t| match osc.get(t) {
            Some(v) if v <= lower => Signal::Buy,
            Some(v) if v >= upper => Signal::Sell,
            _ => Signal::Hold,
        })
        .collect();
    SignalSeries(out)
}

/// Standalone BBW regime rule: short SMA of band width above/below the long
/// SMA.
pub fn bbw_rule(
    bbw: &IndicatorSeries,
    short_win: usize,
    long_win: usize,
) -> Result<SignalSeries, EvalError> {
    let short = indicators::sma_of(bbw, short_win)?;
    let long = indicators::sma_of(bbw, long_win)?;
    let out = (0..bbw.len())
        .map(|t| match (short.get(t), long.get(t)) {
            (Some(s), Some(l)) if s > l => Signal::Buy,
            (Some(s), Some(l)) if s < l => Signal::Sell,
            _ => Signal::Hold,
        })
        .collect();
    Ok(SignalSeries(out))
}

/// Standalone SAR flip rule.
pub fn sar_rule(sar: &IndicatorSeries, close: &[f64]) -> Result<SignalSeries, SignalError> {
    if close.len() != sar.len() {
        return Err(SignalError::MisalignedSeries(sar.len(), close.len()));
    }
    let mut out = vec![Signal::Hold; sar.len()];
    for t in 1..sar.len() {
        if let (Some(s0), Some(s1)) = (sar.get(t - 1), sar.get(t)) {
            if s0 > close[t - 1] && s1 < close[t] {
                out[t] = Signal::Buy;
            } else if s0 < close[t - 1] && s1 > close[t] {
                out[t] = Signal::Sell;
            }
        }
    }
    Ok(SignalSeries(out))
}

/// The nine backtested strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    MacdCrossoverSig,
    MacdCrossoverZero,
    MacdHist,
    MacdCrossoverSigAbove0,
    MacdBb,
    MacdSar,
    MacdMfi,
    MacdRsi,
    Vpvma,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::MacdCrossoverSig,
        StrategyKind::MacdCrossoverZero,
        StrategyKind::MacdHist,
        StrategyKind::MacdCrossoverSigAbove0,
        StrategyKind::MacdBb,
        StrategyKind::MacdSar,
        StrategyKind::MacdMfi,
        StrategyKind::MacdRsi,
        StrategyKind::Vpvma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::MacdCrossoverSig => "macd_crossover_sig",
            StrategyKind::MacdCrossoverZero => "macd_crossover_zero",
            StrategyKind::MacdHist => "macd_hist",
            StrategyKind::MacdCrossoverSigAbove0 => "macd_crossover_sig_above0",
            StrategyKind::MacdBb => "macd_bb",
            StrategyKind::MacdSar => "macd_sar",
            StrategyKind::MacdMfi => "macd_mfi",
            StrategyKind::MacdRsi => "macd_rsi",
            StrategyKind::Vpvma => "vpvma",
        }
    }
}

fn default_macd() -> MacdParams {
    MacdParams::TRADITIONAL
}
fn default_bb_window() -> usize {
    14
}
fn default_bb_k() -> f64 {
    2.0
}
fn default_bb_short() -> usize {
    10
}
fn default_bb_long() -> usize {
    50
}
fn default_sar_af0() -> f64 {
    0.02
}
fn default_sar_afmax() -> f64 {
    0.2
}
fn default_osc_window() -> usize {
    14
}
fn default_mfi_lower() -> f64 {
    25.0
}
fn default_rsi_lower() -> f64 {
    35.0
}
fn default_osc_upper() -> f64 {
    70.0
}
fn default_lookback() -> usize {
    6
}
fn default_bandwidth() -> f64 {
    0.1
}

/// A strategy plus every tunable it reads. Serde defaults mirror the
/// usual combination settings so run configs only name what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    #[serde(default = "default_macd")]
    pub macd: MacdParams,
    #[serde(default = "default_bb_window")]
    pub bb_window: usize,
    #[serde(default = "default_bb_k")]
    pub bb_k: f64,
    #[serde(default = "default_bb_short")]
    pub bb_short: usize,
    #[serde(default = "default_bb_long")]
    pub bb_long: usize,
    #[serde(default = "default_sar_af0")]
    pub sar_af0: f64,
    #[serde(default = "default_sar_afmax")]
    pub sar_afmax: f64,
    #[serde(default = "default_osc_window")]
    pub mfi_window: usize,
    #[serde(default = "default_mfi_lower")]
    pub mfi_lower: f64,
    #[serde(default = "default_osc_upper")]
    pub mfi_upper: f64,
    #[serde(default = "default_osc_window")]
    pub rsi_window: usize,
    #[serde(default = "default_rsi_lower")]
    pub rsi_lower: f64,
    #[serde(default = "default_osc_upper")]
    pub rsi_upper: f64,
    #[serde(default = "default_lookback")]
    pub lookback: usize,
    #[serde(default)]
    pub quantifier: ThresholdQuantifier,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default)]
    pub vpvma_sell_mode: VpvmaSellMode,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        serde_json::from_value(serde_json::json!({ "kind": kind.name() }))
            .expect("defaults are total")
    }

    pub fn check(&self) -> Result<(), String> {
        if !self.macd.is_valid() {
            return Err(format!("bad MACD params {:?}", self.macd));
        }
        if self.mfi_lower >= self.mfi_upper || self.rsi_lower >= self.rsi_upper {
            return Err("thresholds must satisfy lower < upper".into());
        }
        if self.bandwidth < 0.0 {
            return Err("bandwidth must be non-negative".into());
        }
        if self.lookback < 1 {
            return Err("lookback must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Indicator(#[from] indicators::IndicatorError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("bad strategy spec: {0}")]
    BadSpec(String),
}

/// Computes the indicators a strategy needs and runs its rule.
pub fn evaluate(spec: &StrategySpec, series: &ValidatedBarSeries) -> Result<SignalSeries, EvalError> {
    spec.check().map_err(EvalError::BadSpec)?;
    let close = series.closes();
    let bars = series.bars();
    let (macd_line, signal_line, hist) = indicators::macd(&close, spec.macd)?;
    let signals = match spec.kind {
        StrategyKind::MacdCrossoverSig => macd_crossover_sig(&macd_line, &signal_line)?,
        StrategyKind::MacdCrossoverZero => macd_crossover_zero(&macd_line),
        StrategyKind::MacdHist => macd_hist_rule(&hist),
        StrategyKind::MacdCrossoverSigAbove0 => {
            macd_crossover_sig_above0(&macd_line, &signal_line)?
        }
        StrategyKind::MacdBb => {
            let (lo, mid, up) = indicators::bollinger(&close, spec.bb_window, spec.bb_k)?;
            let width = indicators::bbw(&lo, &mid, &up)?;
            macd_bb_rule(&macd_line, &signal_line, &width, spec.bb_short, spec.bb_long)?
        }
        StrategyKind::MacdSar => {
            let sar = indicators::sar(bars, spec.sar_af0, spec.sar_afmax)?;
            macd_sar_rule(&macd_line, &signal_line, &sar, &close)?
        }
        StrategyKind::MacdMfi => {
            let mfi = indicators::mfi(bars, spec.mfi_window)?;
            macd_mfi_rule(
                &macd_line,
                &signal_line,
                &mfi,
                spec.mfi_lower,
                spec.mfi_upper,
                spec.lookback,
                spec.quantifier,
            )?
        }
        StrategyKind::MacdRsi => {
            let rsi = indicators::rsi(&close, spec.rsi_window)?;
            macd_rsi_rule(
                &macd_line,
                &signal_line,
                &rsi,
                spec.rsi_lower,
                spec.rsi_upper,
                spec.lookback,
                spec.quantifier,
            )?
        }
        StrategyKind::Vpvma => {
            let (line, sig) = indicators::vpvma(bars, spec.macd)?;
            vpvma_rule(&line, &sig, spec.bandwidth, spec.vpvma_sell_mode)?
        }
    };
    Ok(signals)
}

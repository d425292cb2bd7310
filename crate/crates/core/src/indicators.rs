//! Technical indicator kernels over daily bars.
//!
//! Every function returns an [`IndicatorSeries`]: a vector aligned 1:1 with
//! its input where exactly the first `warmup_len` entries are undefined and
//! everything after is a finite number. No defined value ever depends on an
//! undefined predecessor, so warm-ups compose mechanically through derived
//! indicators (MACD, BBW, VPVMA).

use thiserror::Error;

use crate::marketdata::Bar;

/// A per-bar numeric series with an explicit warm-up prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    values: Vec<Option<f64>>,
    warmup_len: usize,
}

impl IndicatorSeries {
    /// Builds from raw optional values, checking that undefined entries form
    /// exactly one leading prefix and everything else is finite.
    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        let warmup_len = values.iter().take_while(|v| v.is_none()).count();
        for (i, v) in values.iter().enumerate().skip(warmup_len) {
            match v {
                Some(x) if x.is_finite() => {}
                Some(_) => panic!("non-finite indicator value at {i}"),
                None => panic!("undefined value at {i} after warm-up ended"),
            }
        }
        Self { values, warmup_len }
    }

    pub fn warmup_len(&self) -> usize {
        self.warmup_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        self.values.get(t).copied().flatten()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// The defined suffix, starting at `warmup_len`.
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values[self.warmup_len..].iter().map(|v| v.unwrap())
    }

    /// Applies `f` to the defined suffix and re-prepends this warm-up.
    fn map_defined<F>(&self, f: F) -> Result<IndicatorSeries, IndicatorError>
    where
        F: FnOnce(&[f64]) -> Result<IndicatorSeries, IndicatorError>,
    {
        let suffix: Vec<f64> = self.defined().collect();
        let inner = f(&suffix)?;
        let mut values = vec![None; self.warmup_len];
        values.extend_from_slice(inner.values());
        Ok(IndicatorSeries::from_values(values))
    }

    /// Elementwise combination; defined where both inputs are defined.
    fn zip_with(&self, other: &IndicatorSeries, f: impl Fn(f64, f64) -> f64) -> IndicatorSeries {
        assert_eq!(self.len(), other.len(), "zip_with length mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| match (a, b) {
                (Some(x), Some(y)) => Some(f(*x, *y)),
                _ => None,
            })
            .collect();
        IndicatorSeries::from_values(values)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("window {n} exceeds series length {len}")]
    WindowTooLarge { n: usize, len: usize },
    #[error("window must be at least {min}")]
    WindowTooSmall { min: usize },
    #[error("series too short: need at least {need} bars, have {have}")]
    SeriesTooShort { need: usize, have: usize },
    #[error("zero total volume in window ending at index {at}")]
    ZeroVolumeWindow { at: usize },
    #[error("non-positive middle band at index {at}")]
    NonPositiveMiddle { at: usize },
}

/// MACD / VPVMA period triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MacdParams {
    pub fast: usize,
    pub slow: usize,
    pub signal: usize,
}

impl MacdParams {
    pub const TRADITIONAL: MacdParams = MacdParams {
        fast: 12,
        slow: 26,
        signal: 9,
    };

    pub fn is_valid(&self) -> bool {
        self.fast >= 1 && self.fast < self.slow && self.signal >= 1
    }
}

fn check_window(n: usize, len: usize) -> Result<(), IndicatorError> {
    if n == 0 {
        return Err(IndicatorError::WindowTooSmall { min: 1 });
    }
    if n > len {
        return Err(IndicatorError::WindowTooLarge { n, len });
    }
    Ok(())
}

/// Trailing arithmetic mean; defined from index `n-1`.
pub fn sma(values: &[f64], n: usize) -> Result<IndicatorSeries, IndicatorError> {
    check_window(n, values.len())?;
    let mut out = vec![None; values.len()];
    let mut sum: f64 = values[..n - 1].iter().sum();
    for t in n - 1..values.len() {
        sum += values[t];
        out[t] = Some(sum / n as f64);
        sum -= values[t + 1 - n];
    }
    Ok(IndicatorSeries::from_values(out))
}

/// Exponential moving average, alpha = 2/(n+1), seeded at index `n-1` with
/// the SMA of the first `n` values.
pub fn ema(values: &[f64], n: usize) -> Result<IndicatorSeries, IndicatorError> {
    check_window(n, values.len())?;
    let alpha = 2.0 / (n as f64 + 1.0);
    let mut out = vec![None; values.len()];
    let mut prev = values[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = Some(prev);
    for t in n..values.len() {
        prev = alpha * values[t] + (1.0 - alpha) * prev;
        out[t] = Some(prev);
    }
    Ok(IndicatorSeries::from_values(out))
}

/// MACD line, signal line, histogram. Warm-ups: `slow-1`, `slow-1+signal-1`,
/// `slow-1+signal-1`.
pub fn macd(
    close: &[f64],
    p: MacdParams,
) -> Result<(IndicatorSeries, IndicatorSeries, IndicatorSeries), IndicatorError> {
    let fast = ema(close, p.fast)?;
    let slow = ema(close, p.slow)?;
    let macd_line = fast.zip_with(&slow, |a, b| a - b);
    let signal_line = macd_line.map_defined(|xs| ema(xs, p.signal))?;
    let hist = macd_line.zip_with(&signal_line, |a, b| a - b);
    Ok((macd_line, signal_line, hist))
}

/// Bollinger bands around an SMA middle, offset `k` population standard
/// deviations over the same window.
pub fn bollinger(
    close: &[f64],
    n: usize,
    k: f64,
) -> Result<(IndicatorSeries, IndicatorSeries, IndicatorSeries), IndicatorError> {
    if n < 2 {
        return Err(IndicatorError::WindowTooSmall { min: 2 });
    }
    check_window(n, close.len())?;
    let middle = sma(close, n)?;
    let mut lower = vec![None; close.len()];
    let mut upper = vec![None; close.len()];
    for t in n - 1..close.len() {
        let win = &close[t + 1 - n..=t];
        let m = middle.get(t).unwrap();
        let var = win.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        let offset = k * var.sqrt();
        lower[t] = Some(m - offset);
        upper[t] = Some(m + offset);
    }
    Ok((
        IndicatorSeries::from_values(lower),
        middle,
        IndicatorSeries::from_values(upper),
    ))
}

/// Bollinger band width, (upper - lower) / middle.
pub fn bbw(
    lower: &IndicatorSeries,
    middle: &IndicatorSeries,
    upper: &IndicatorSeries,
) -> Result<IndicatorSeries, IndicatorError> {
    for t in middle.warmup_len()..middle.len() {
        if let Some(m) = middle.get(t) {
            if m <= 0.0 {
                return Err(IndicatorError::NonPositiveMiddle { at: t });
            }
        }
    }
    Ok(upper
        .zip_with(lower, |u, l| u - l)
        .zip_with(middle, |d, m| d / m))
}

/// Wilder's RSI: simple first averages over the first `n` changes, then
/// smoothing `(prev*(n-1) + current)/n`. Zero average loss maps to 100,
/// zero average gain to 0.
pub fn rsi(close: &[f64], n: usize) -> Result<IndicatorSeries, IndicatorError> {
    check_window(n, close.len())?;
    if close.len() <= n {
        return Err(IndicatorError::SeriesTooShort {
            need: n + 1,
            have: close.len(),
        });
    }
    let mut out = vec![None; close.len()];
    let mut avg_gain = 0.0;
    let mut avg_loss = 0.0;
    for t in 1..=n {
        let d = close[t] - close[t - 1];
        avg_gain += d.max(0.0);
        avg_loss += (-d).max(0.0);
    }
    avg_gain /= n as f64;
    avg_loss /= n as f64;
    out[n] = Some(rsi_from_averages(avg_gain, avg_loss));
    for t in n + 1..close.len() {
        let d = close[t] - close[t - 1];
        avg_gain = (avg_gain * (n as f64 - 1.0) + d.max(0.0)) / n as f64;
        avg_loss = (avg_loss * (n as f64 - 1.0) + (-d).max(0.0)) / n as f64;
        out[t] = Some(rsi_from_averages(avg_gain, avg_loss));
    }
    Ok(IndicatorSeries::from_values(out))
}

fn rsi_from_averages(avg_gain: f64, avg_loss: f64) -> f64 {
    if avg_loss == 0.0 {
        100.0
    } else if avg_gain == 0.0 {
        0.0
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// (high + low + close) / 3 per bar; no warm-up.
pub fn typical_price(bars: &[Bar]) -> IndicatorSeries {
    IndicatorSeries::from_values(
        bars.iter()
            .map(|b| Some((b.high + b.low + b.close) / 3.0))
            .collect(),
    )
}

/// Money Flow Index over typical-price money flow. Days with an unchanged
/// typical price contribute to neither flow sum. All-positive flow maps to
/// 100, all-negative to 0.
pub fn mfi(bars: &[Bar], n: usize) -> Result<IndicatorSeries, IndicatorError> {
    check_window(n, bars.len())?;
    if bars.len() <= n {
        return Err(IndicatorError::SeriesTooShort {
            need: n + 1,
            have: bars.len(),
        });
    }
    let tp: Vec<f64> = typical_price(bars).defined().collect();
    // flow[t] for t >= 1: signed money flow of day t.
    let mut pos = vec![0.0; bars.len()];
    let mut neg = vec![0.0; bars.len()];
    for t in 1..bars.len() {
        let flow = tp[t] * bars[t].volume as f64;
        if tp[t] > tp[t - 1] {
            pos[t] = flow;
        } else if tp[t] < tp[t - 1] {
            neg[t] = flow;
        }
    }
    let mut out = vec![None; bars.len()];
    for t in n..bars.len() {
        let p: f64 = pos[t + 1 - n..=t].iter().sum();
        let m: f64 = neg[t + 1 - n..=t].iter().sum();
        let v = if m == 0.0 {
            100.0
        } else if p == 0.0 {
            0.0
        } else {
            100.0 - 100.0 / (1.0 + p / m)
        };
        out[t] = Some(v);
    }
    Ok(IndicatorSeries::from_values(out))
}

/// Full Wilder parabolic stop-and-reverse.
///
/// The initial trend comes from the first two closes. The SAR level is
/// clamped so it never enters the prior two bars' range, the acceleration
/// factor ratchets by `af0` on each new extreme up to `afmax`, and a price
/// penetration flips the trend, resetting SAR to the old extreme and the
/// factor to `af0`. Output is defined from index 1.
pub fn sar(bars: &[Bar], af0: f64, afmax: f64) -> Result<IndicatorSeries, IndicatorError> {
    if bars.len() < 2 {
        return Err(IndicatorError::SeriesTooShort {
            need: 2,
            have: bars.len(),
        });
    }
    let mut out = vec![None; bars.len()];
    let mut uptrend = bars[1].close >= bars[0].close;
    let (mut level, mut ep) = if uptrend {
        (bars[0].low.min(bars[1].low), bars[0].high.max(bars[1].high))
    } else {
        (bars[0].high.max(bars[1].high), bars[0].low.min(bars[1].low))
    };
    let mut af = af0;
    out[1] = Some(level);
    for t in 2..bars.len() {
        let (high, low) = (bars[t].high, bars[t].low);
        if uptrend {
            let mut next = level + af * (ep - level);
            next = next.min(bars[t - 1].low).min(bars[t - 2].low);
            if low < next {
                // Penetrated: flip to downtrend.
                uptrend = false;
                level = ep;
                ep = low;
                af = af0;
            } else {
                level = next;
                if high > ep {
                    ep = high;
                    af = (af + af0).min(afmax);
                }
            }
        } else {
            let mut next = level - af * (level - ep);
            next = next.max(bars[t - 1].high).max(bars[t - 2].high);
            if high > next {
                uptrend = true;
                level = ep;
                ep = high;
                af = af0;
            } else {
                level = next;
                if low < ep {
                    ep = low;
                    af = (af + af0).min(afmax);
                }
            }
        }
        out[t] = Some(level);
    }
    Ok(IndicatorSeries::from_values(out))
}

/// Volume-weighted moving average of `tp` over trailing `n` bars.
pub fn vwma(tp: &[f64], volume: &[f64], n: usize) -> Result<IndicatorSeries, IndicatorError> {
    assert_eq!(tp.len(), volume.len(), "vwma input length mismatch");
    check_window(n, tp.len())?;
    let mut out = vec![None; tp.len()];
    for t in n - 1..tp.len() {
        let num: f64 = (t + 1 - n..=t).map(|i| tp[i] * volume[i]).sum();
        let den: f64 = volume[t + 1 - n..=t].iter().sum();
        if den == 0.0 {
            return Err(IndicatorError::ZeroVolumeWindow { at: t });
        }
        out[t] = Some(num / den);
    }
    Ok(IndicatorSeries::from_values(out))
}

/// Population standard deviation of the four prices of one bar.
pub fn daily_volatility(bar: &Bar) -> f64 {
    let prices = [bar.open, bar.high, bar.low, bar.close];
    let mean = prices.iter().sum::<f64>() / 4.0;
    (prices.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / 4.0).sqrt()
}

/// VPVMA and its signal SMA.
///
/// Short/long volume-weighted typical-price averages are each scaled by the
/// per-bar daily volatility, smoothed with fast/slow EMAs, and differenced;
/// the signal series is the SMA of that difference.
pub fn vpvma(
    bars: &[Bar],
    p: MacdParams,
) -> Result<(IndicatorSeries, IndicatorSeries), IndicatorError> {
    let tp: Vec<f64> = typical_price(bars).defined().collect();
    let vol: Vec<f64> = bars.iter().map(|b| b.volume as f64).collect();
    let dv: Vec<f64> = bars.iter().map(daily_volatility).collect();
    let svwma = vwma(&tp, &vol, p.fast)?;
    let lvwma = vwma(&tp, &vol, p.slow)?;
    let dv_series =
        IndicatorSeries::from_values(dv.into_iter().map(Some).collect());
    let short_leg = svwma
        .zip_with(&dv_series, |a, b| a * b)
        .map_defined(|xs| ema(xs, p.fast))?;
    let long_leg = lvwma
        .zip_with(&dv_series, |a, b| a * b)
        .map_defined(|xs| ema(xs, p.slow))?;
    let line = short_leg.zip_with(&long_leg, |a, b| a - b);
    let signal = line.map_defined(|xs| sma(xs, p.signal))?;
    Ok((line, signal))
}

/// SMA taken over the defined region of an existing indicator series;
/// warm-ups add up. Used for the BBW moving averages and VPVMAS.
pub fn sma_of(series: &IndicatorSeries, n: usize) -> Result<IndicatorSeries, IndicatorError> {
    series.map_defined(|xs| sma(xs, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{validate, BarSeries};
    use chrono::NaiveDate;

    fn mkbars(rows: &[(f64, f64, f64, f64, u64)]) -> Vec<Bar> {
        rows.iter()
            .enumerate()
            .map(|(i, &(o, h, l, c, v))| Bar {
                date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
                    + chrono::Days::new(i as u64),
                open: o,
                high: h,
                low: l,
                close: c,
                adj_close: None,
                volume: v,
            })
            .collect()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    #[test]
    fn sma_constant_and_small_case() {
        let s = sma(&[5.0; 10], 3).unwrap();
        assert!(s.defined().all(|v| v == 5.0));
        assert_eq!(s.warmup_len(), 2);

        let s = sma(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(s.values(), &[None, Some(1.5), Some(2.5), Some(3.5)]);
    }

    #[test]
    fn sma_window_too_large() {
        assert_eq!(
            sma(&[1.0, 2.0], 3).unwrap_err(),
            IndicatorError::WindowTooLarge { n: 3, len: 2 }
        );
    }

    #[test]
    fn ema_constant_is_fixed_point() {
        let s = ema(&[7.0; 20], 5).unwrap();
        assert!(s.defined().all(|v| (v - 7.0).abs() < 1e-15));
    }

    #[test]
    fn ema_hand_recursion() {
        // n=2: seed = (1+2)/2 = 1.5, then (2/3)*3 + (1/3)*1.5 = 2.5
        let s = ema(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(s.get(1), Some(1.5));
        assert_close(s.get(2).unwrap(), 2.5, 1e-15);
    }

    #[test]
    fn macd_constant_is_zero() {
        let close = [42.0; 60];
        let (m, s, h) = macd(&close, MacdParams::TRADITIONAL).unwrap();
        assert!(m.defined().all(|v| v.abs() < 1e-12));
        assert!(s.defined().all(|v| v.abs() < 1e-12));
        assert!(h.defined().all(|v| v.abs() < 1e-12));
        assert_eq!(m.warmup_len(), 25);
        assert_eq!(s.warmup_len(), 33);
        assert_eq!(h.warmup_len(), 33);
    }

    #[test]
    fn macd_linear_ramp_converges_positive() {
        let close: Vec<f64> = (0..400).map(|i| 100.0 + i as f64).collect();
        let (m, _, _) = macd(&close, MacdParams::TRADITIONAL).unwrap();
        let tail: Vec<f64> = m.defined().collect();
        let last = *tail.last().unwrap();
        assert!(last > 0.0);
        // On a ramp with slope 1 the fast/slow EMA lags are (n-1)/2, so the
        // MACD line converges to (26-12)/2 = 7.
        assert_close(last, 7.0, 1e-6);
    }

    #[test]
    fn bollinger_constant_and_alternating() {
        let (lo, mid, up) = bollinger(&[3.0; 10], 4, 2.0).unwrap();
        for t in 3..10 {
            assert_eq!(lo.get(t), mid.get(t));
            assert_eq!(up.get(t), mid.get(t));
        }
        // alternating 1,3: mean 2, population std 1, offset 2.
        let xs: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { 3.0 }).collect();
        let (lo, mid, up) = bollinger(&xs, 2, 2.0).unwrap();
        for t in 1..10 {
            assert_close(mid.get(t).unwrap(), 2.0, 1e-15);
            assert_close(up.get(t).unwrap() - lo.get(t).unwrap(), 4.0, 1e-15);
        }
    }

    #[test]
    fn bbw_arithmetic_and_error() {
        let (lo, mid, up) = bollinger(&[10.0; 6], 3, 2.0).unwrap();
        let w = bbw(&lo, &mid, &up).unwrap();
        assert!(w.defined().all(|v| v == 0.0));

        let neg = vec![-10.0; 6];
        let (lo, mid, up) = bollinger(&neg, 3, 2.0).unwrap();
        assert!(matches!(
            bbw(&lo, &mid, &up),
            Err(IndicatorError::NonPositiveMiddle { .. })
        ));
    }

    #[test]
    fn rsi_monotone_limits() {
        let up: Vec<f64> = (0..30).map(|i| 10.0 + i as f64).collect();
        let r = rsi(&up, 14).unwrap();
        assert!(r.defined().all(|v| v == 100.0));
        assert_eq!(r.warmup_len(), 14);

        let down: Vec<f64> = (0..30).map(|i| 100.0 - i as f64).collect();
        let r = rsi(&down, 14).unwrap();
        assert!(r.defined().all(|v| v == 0.0));
    }

    #[test]
    fn typical_price_arithmetic() {
        let bars = mkbars(&[(9.0, 12.0, 8.0, 10.0, 1)]);
        let tp = typical_price(&bars);
        assert_close(tp.get(0).unwrap(), 10.0, 1e-15);
    }

    #[test]
    fn mfi_monotone_limits() {
        let rising: Vec<(f64, f64, f64, f64, u64)> =
            (0..20).map(|i| { let p = 10.0 + i as f64; (p, p + 1.0, p - 1.0, p, 100) }).collect();
        let m = mfi(&mkbars(&rising), 14).unwrap();
        assert!(m.defined().all(|v| v == 100.0));

        let falling: Vec<(f64, f64, f64, f64, u64)> =
            (0..20).map(|i| { let p = 100.0 - i as f64; (p, p + 1.0, p - 1.0, p, 100) }).collect();
        let m = mfi(&mkbars(&falling), 14).unwrap();
        assert!(m.defined().all(|v| v == 0.0));
    }

    #[test]
    fn sar_rising_stays_below_lows() {
        let rising: Vec<(f64, f64, f64, f64, u64)> =
            (0..30).map(|i| { let p = 10.0 + i as f64; (p, p + 1.0, p - 1.0, p + 0.5, 1) }).collect();
        let bars = mkbars(&rising);
        let s = sar(&bars, 0.02, 0.2).unwrap();
        for t in 1..bars.len() {
            assert!(s.get(t).unwrap() <= bars[t].low, "sar above low at {t}");
        }
        // Monotone extremes keep incrementing the factor, so late SAR values
        // chase the lows closely.
        assert!(s.get(29).unwrap() > s.get(1).unwrap());
    }

    #[test]
    fn sar_single_reversal_flips_once() {
        // 8-bar hand-traced fixture: five rising bars then a sharp drop that
        // penetrates the SAR level exactly once, at bar 5.
        let bars = mkbars(&[
            (10.0, 11.0, 9.0, 10.5, 1),
            (10.5, 11.5, 10.0, 11.0, 1),
            (11.0, 12.0, 10.5, 11.5, 1),
            (11.5, 12.5, 11.0, 12.0, 1),
            (12.0, 13.0, 11.5, 12.5, 1),
            (9.0, 9.5, 5.0, 6.0, 1), // crash through the trailing stop
            (6.0, 6.5, 5.5, 6.0, 1),
            (6.0, 6.4, 5.6, 6.1, 1),
        ]);
        let s = sar(&bars, 0.02, 0.2).unwrap();
        // Count flips: a bar where SAR jumps from below the prior close to
        // above the current close (or vice versa).
        let mut flips = 0;
        let mut flip_at = 0;
        for t in 2..bars.len() {
            let above_prev = s.get(t - 1).unwrap() > bars[t - 1].close;
            let above_now = s.get(t).unwrap() > bars[t].close;
            if above_prev != above_now {
                flips += 1;
                flip_at = t;
            }
        }
        assert_eq!(flips, 1);
        assert_eq!(flip_at, 5);
        // After the flip SAR sits at the old extreme, above the bar.
        assert_eq!(s.get(5), Some(13.0));
    }

    #[test]
    fn sar_too_short() {
        let bars = mkbars(&[(1.0, 2.0, 0.5, 1.5, 1)]);
        assert!(matches!(
            sar(&bars, 0.02, 0.2),
            Err(IndicatorError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn vwma_weighting() {
        let s = vwma(&[10.0, 20.0], &[1.0, 3.0], 2).unwrap();
        assert_close(s.get(1).unwrap(), 17.5, 1e-15);

        let c = vwma(&[5.0; 6], &[1.0, 9.0, 2.0, 7.0, 3.0, 1.0], 3).unwrap();
        assert!(c.defined().all(|v| (v - 5.0).abs() < 1e-12));

        assert!(matches!(
            vwma(&[1.0, 2.0], &[0.0, 0.0], 2),
            Err(IndicatorError::ZeroVolumeWindow { at: 1 })
        ));
    }

    #[test]
    fn daily_volatility_cases() {
        let flat = mkbars(&[(10.0, 10.0, 10.0, 10.0, 1)]);
        assert_eq!(daily_volatility(&flat[0]), 0.0);
        let spread = mkbars(&[(8.0, 12.0, 10.0, 10.0, 1)]);
        assert_close(daily_volatility(&spread[0]), 2.0_f64.sqrt(), 1e-15);
    }

    #[test]
    fn vpvma_flat_price_is_zero() {
        // Constant prices: DV = 0 annihilates both legs even with varying
        // volume.
        let rows: Vec<(f64, f64, f64, f64, u64)> =
            (0..80).map(|i| (10.0, 10.0, 10.0, 10.0, 100 + (i % 7) * 13)).collect();
        let bars = mkbars(&rows);
        let (line, sig) = vpvma(&bars, MacdParams::TRADITIONAL).unwrap();
        assert!(line.defined().all(|v| v.abs() < 1e-12));
        assert!(sig.defined().all(|v| v.abs() < 1e-12));
        assert_eq!(line.warmup_len(), 2 * 25);
        assert_eq!(sig.warmup_len(), 2 * 25 + 8);
    }

    #[test]
    fn warmups_have_no_undefined_gaps() {
        let close: Vec<f64> = (0..100).map(|i| 50.0 + (i as f64 * 0.7).sin()).collect();
        let (m, s, h) = macd(&close, MacdParams::TRADITIONAL).unwrap();
        for series in [&m, &s, &h] {
            let w = series.warmup_len();
            assert!(series.values()[..w].iter().all(Option::is_none));
            assert!(series.values()[w..].iter().all(Option::is_some));
        }
    }

    // Shift equivariance: an indicator computed on a suffix of the data
    // agrees with the suffix of the full computation once both are warm.
    #[test]
    fn shift_equivariance_sma_vwma() {
        let xs: Vec<f64> = (0..60).map(|i| 20.0 + ((i * 37) % 11) as f64).collect();
        let vol: Vec<f64> = (0..60).map(|i| 100.0 + ((i * 13) % 7) as f64).collect();
        let k = 9;
        let full = sma(&xs, 5).unwrap();
        let cut = sma(&xs[k..], 5).unwrap();
        for t in 4..cut.len() {
            assert_close(cut.get(t).unwrap(), full.get(t + k).unwrap(), 1e-12);
        }
        let full = vwma(&xs, &vol, 5).unwrap();
        let cut = vwma(&xs[k..], &vol[k..], 5).unwrap();
        for t in 4..cut.len() {
            assert_close(cut.get(t).unwrap(), full.get(t + k).unwrap(), 1e-12);
        }
    }

    #[test]
    fn validated_series_plumbing() {
        let bars = mkbars(&[(10.0, 11.0, 9.0, 10.0, 5), (10.0, 12.0, 9.5, 11.0, 6)]);
        let series = validate(BarSeries { symbol: "T".into(), bars }).unwrap();
        assert_eq!(series.closes(), vec![10.0, 11.0]);
    }
}

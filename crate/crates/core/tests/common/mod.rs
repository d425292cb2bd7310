//! Shared fixtures and brute-force oracles for the integration suites.
//!
//! Every oracle below recomputes its statistic directly from the defining
//! formula, window by window, without touching the library kernels. Slow on
//! purpose; correctness reference only.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use macdlab::backtest::{EquityPoint, Trade};
use macdlab::marketdata::{validate, Bar, BarSeries, ValidatedBarSeries};

pub fn base_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 2).unwrap()
}

/// Deterministic random-walk OHLCV bars satisfying every bar invariant.
pub fn gen_bars(seed: u64, n: usize) -> Vec<Bar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut close: f64 = 100.0 * rng.gen_range(0.5..2.0);
    let mut bars = Vec::with_capacity(n);
    for i in 0..n {
        let open = close * rng.gen_range(0.99..1.01);
        close = open * rng.gen_range(0.97..1.03);
        let body_hi = open.max(close);
        let body_lo = open.min(close);
        let high = body_hi * rng.gen_range(1.0..1.02);
        let low = body_lo * rng.gen_range(0.98..1.0);
        bars.push(Bar {
            date: base_date() + chrono::Days::new(i as u64),
            open,
            high,
            low,
            close,
            adj_close: None,
            volume: rng.gen_range(100..10_000),
        });
    }
    bars
}

pub fn gen_series(symbol: &str, seed: u64, n: usize) -> ValidatedBarSeries {
    validate(BarSeries {
        symbol: symbol.to_string(),
        bars: gen_bars(seed, n),
    })
    .expect("generated bars are valid")
}

/// The ten-symbol fixture used by the metrics and scale suites.
pub fn fixture_universe(n_symbols: usize, n_bars: usize) -> Vec<ValidatedBarSeries> {
    (0..n_symbols)
        .map(|i| gen_series(&format!("SYM{i:02}"), 1_000 + i as u64, n_bars))
        .collect()
}

// ---------------------------------------------------------------------------
// Indicator oracles. All return Vec<Option<f64>> aligned with the input.
// ---------------------------------------------------------------------------

pub fn o_sma(xs: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..xs.len())
        .map(|t| {
            if t + 1 < n {
                None
            } else {
                Some(xs[t + 1 - n..=t].iter().sum::<f64>() / n as f64)
            }
        })
        .collect()
}

pub fn o_ema(xs: &[f64], n: usize) -> Vec<Option<f64>> {
    let alpha = 2.0 / (n as f64 + 1.0);
    let mut out = vec![None; xs.len()];
    if xs.len() < n {
        return out;
    }
    let mut prev = xs[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = Some(prev);
    for t in n..xs.len() {
        prev = alpha * xs[t] + (1.0 - alpha) * prev;
        out[t] = Some(prev);
    }
    out
}

/// Runs `f` over the defined suffix of `xs` and re-prepends the warm-up.
fn over_defined(
    xs: &[Option<f64>],
    f: impl FnOnce(&[f64]) -> Vec<Option<f64>>,
) -> Vec<Option<f64>> {
    let warm = xs.iter().take_while(|v| v.is_none()).count();
    let dense: Vec<f64> = xs[warm..].iter().map(|v| v.unwrap()).collect();
    let mut out = vec![None; warm];
    out.extend(f(&dense));
    out
}

pub fn o_macd(
    xs: &[f64],
    fast: usize,
    slow: usize,
    signal: usize,
) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
    let f = o_ema(xs, fast);
    let s = o_ema(xs, slow);
    let line: Vec<Option<f64>> = f
        .iter()
        .zip(&s)
        .map(|(a, b)| match (a, b) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        })
        .collect();
    let sig = over_defined(&line, |d| o_ema(d, signal));
    let hist: Vec<Option<f64>> = line
        .iter()
        .zip(&sig)
        .map(|(a, b)| match (a, b) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        })
        .collect();
    (line, sig, hist)
}

pub fn o_bollinger(
    xs: &[f64],
    n: usize,
    k: f64,
) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
    let mut lo = vec![None; xs.len()];
    let mut mid = vec![None; xs.len()];
    let mut up = vec![None; xs.len()];
    for t in 0..xs.len() {
        if t + 1 < n {
            continue;
        }
        let win = &xs[t + 1 - n..=t];
        let m = win.iter().sum::<f64>() / n as f64;
        let sd = (win.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64).sqrt();
        lo[t] = Some(m - k * sd);
        mid[t] = Some(m);
        up[t] = Some(m + k * sd);
    }
    (lo, mid, up)
}

pub fn o_bbw(xs: &[f64], n: usize, k: f64) -> Vec<Option<f64>> {
    let (lo, mid, up) = o_bollinger(xs, n, k);
    lo.iter()
        .zip(&mid)
        .zip(&up)
        .map(|((l, m), u)| match (l, m, u) {
            (Some(l), Some(m), Some(u)) => Some((u - l) / m),
            _ => None,
        })
        .collect()
}

pub fn o_rsi(xs: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; xs.len()];
    if xs.len() <= n {
        return out;
    }
    let value = |g: f64, l: f64| {
        if l == 0.0 {
            100.0
        } else if g == 0.0 {
            0.0
        } else {
            100.0 - 100.0 / (1.0 + g / l)
        }
    };
    let mut g = (1..=n).map(|t| (xs[t] - xs[t - 1]).max(0.0)).sum::<f64>() / n as f64;
    let mut l = (1..=n).map(|t| (xs[t - 1] - xs[t]).max(0.0)).sum::<f64>() / n as f64;
    out[n] = Some(value(g, l));
    for t in n + 1..xs.len() {
        let d = xs[t] - xs[t - 1];
        g = (g * (n as f64 - 1.0) + d.max(0.0)) / n as f64;
        l = (l * (n as f64 - 1.0) + (-d).max(0.0)) / n as f64;
        out[t] = Some(value(g, l));
    }
    out
}

pub fn o_tp(bars: &[Bar]) -> Vec<f64> {
    bars.iter().map(|b| (b.high + b.low + b.close) / 3.0).collect()
}

pub fn o_mfi(bars: &[Bar], n: usize) -> Vec<Option<f64>> {
    let tp = o_tp(bars);
    let mut out = vec![None; bars.len()];
    for t in 0..bars.len() {
        if t < n {
            continue;
        }
        let mut pos = 0.0;
        let mut neg = 0.0;
        for i in t + 1 - n..=t {
            let flow = tp[i] * bars[i].volume as f64;
            if tp[i] > tp[i - 1] {
                pos += flow;
            } else if tp[i] < tp[i - 1] {
                neg += flow;
            }
        }
        out[t] = Some(if neg == 0.0 {
            100.0
        } else if pos == 0.0 {
            0.0
        } else {
            100.0 - 100.0 / (1.0 + pos / neg)
        });
    }
    out
}

pub fn o_sar(bars: &[Bar], af0: f64, afmax: f64) -> Vec<Option<f64>> {
    let mut out = vec![None; bars.len()];
    if bars.len() < 2 {
        return out;
    }
    let mut up = bars[1].close >= bars[0].close;
    let (mut sar, mut ep) = if up {
        (bars[0].low.min(bars[1].low), bars[0].high.max(bars[1].high))
    } else {
        (bars[0].high.max(bars[1].high), bars[0].low.min(bars[1].low))
    };
    let mut af = af0;
    out[1] = Some(sar);
    for t in 2..bars.len() {
        if up {
            let candidate = (sar + af * (ep - sar))
                .min(bars[t - 1].low)
                .min(bars[t - 2].low);
            if bars[t].low < candidate {
                up = false;
                sar = ep;
                ep = bars[t].low;
                af = af0;
            } else {
                sar = candidate;
                if bars[t].high > ep {
                    ep = bars[t].high;
                    af = (af + af0).min(afmax);
                }
            }
        } else {
            let candidate = (sar - af * (sar - ep))
                .max(bars[t - 1].high)
                .max(bars[t - 2].high);
            if bars[t].high > candidate {
                up = true;
                sar = ep;
                ep = bars[t].high;
                af = af0;
            } else {
                sar = candidate;
                if bars[t].low < ep {
                    ep = bars[t].low;
                    af = (af + af0).min(afmax);
                }
            }
        }
        out[t] = Some(sar);
    }
    out
}

pub fn o_vwma(tp: &[f64], vol: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..tp.len())
        .map(|t| {
            if t + 1 < n {
                None
            } else {
                let num: f64 = (t + 1 - n..=t).map(|i| tp[i] * vol[i]).sum();
                let den: f64 = vol[t + 1 - n..=t].iter().sum();
                Some(num / den)
            }
        })
        .collect()
}

pub fn o_dv(bar: &Bar) -> f64 {
    let p = [bar.open, bar.high, bar.low, bar.close];
    let m = p.iter().sum::<f64>() / 4.0;
    (p.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0).sqrt()
}

pub fn o_vpvma(
    bars: &[Bar],
    fast: usize,
    slow: usize,
    signal: usize,
) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let tp = o_tp(bars);
    let vol: Vec<f64> = bars.iter().map(|b| b.volume as f64).collect();
    let dv: Vec<f64> = bars.iter().map(o_dv).collect();
    let scale = |ma: Vec<Option<f64>>| -> Vec<Option<f64>> {
        ma.iter()
            .enumerate()
            .map(|(i, v)| v.map(|x| x * dv[i]))
            .collect()
    };
    let short = over_defined(&scale(o_vwma(&tp, &vol, fast)), |d| o_ema(d, fast));
    let long = over_defined(&scale(o_vwma(&tp, &vol, slow)), |d| o_ema(d, slow));
    let line: Vec<Option<f64>> = short
        .iter()
        .zip(&long)
        .map(|(a, b)| match (a, b) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        })
        .collect();
    let sig = over_defined(&line, |d| o_sma(d, signal));
    (line, sig)
}

// ---------------------------------------------------------------------------
// Metric oracles.
// ---------------------------------------------------------------------------

fn o_mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn o_pstd(xs: &[f64]) -> Option<f64> {
    let m = o_mean(xs)?;
    Some((xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt())
}

pub fn o_win_rate(trades: &[Trade]) -> Option<f64> {
    (!trades.is_empty())
        .then(|| trades.iter().filter(|t| t.pnl > 0.0).count() as f64 / trades.len() as f64)
}

pub fn o_pnl_ratio(trades: &[Trade]) -> Option<f64> {
    let w: Vec<f64> = trades.iter().filter(|t| t.pnl > 0.0).map(|t| t.pnl).collect();
    let l: Vec<f64> = trades.iter().filter(|t| t.pnl < 0.0).map(|t| -t.pnl).collect();
    Some(o_mean(&w)? / o_mean(&l)?)
}

fn o_returns(curve: &[EquityPoint]) -> Vec<f64> {
    (1..curve.len())
        .map(|t| curve[t].equity / curve[t - 1].equity - 1.0)
        .collect()
}

pub fn o_sharpe(curve: &[EquityPoint]) -> Option<f64> {
    let r = o_returns(curve);
    let m = o_mean(&r)?;
    let sd = o_pstd(&r)?;
    (sd != 0.0).then(|| m / sd * 252f64.sqrt())
}

pub fn o_sortino(curve: &[EquityPoint]) -> Option<f64> {
    let r = o_returns(curve);
    let m = o_mean(&r)?;
    let down: Vec<f64> = r.iter().copied().filter(|x| *x < 0.0).collect();
    let sd = o_pstd(&down)?;
    (sd != 0.0).then(|| m / sd * 252f64.sqrt())
}

pub fn o_mdd(curve: &[EquityPoint]) -> Option<f64> {
    if curve.is_empty() {
        return None;
    }
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for p in curve {
        peak = peak.max(p.equity);
        worst = worst.max((peak - p.equity) / peak);
    }
    Some(worst)
}

pub fn o_accumulated(trades: &[Trade]) -> (f64, f64, f64) {
    let gain: f64 = trades.iter().filter(|t| t.pnl > 0.0).map(|t| t.pnl).sum();
    let loss: f64 = trades.iter().filter(|t| t.pnl <= 0.0).map(|t| t.pnl).sum();
    (gain, loss, gain + loss)
}

/// (mean, skewness, raw kurtosis) of per-trade returns.
pub fn o_moments(trades: &[Trade]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let r: Vec<f64> = trades.iter().map(|t| t.ret).collect();
    let Some(m) = o_mean(&r) else {
        return (None, None, None);
    };
    let n = r.len() as f64;
    let mom = |k: i32| r.iter().map(|x| (x - m).powi(k)).sum::<f64>() / n;
    let m2 = mom(2);
    if m2 == 0.0 || r.len() < 2 {
        return (Some(m), None, None);
    }
    (Some(m), Some(mom(3) / m2.powf(1.5)), Some(mom(4) / (m2 * m2)))
}

pub fn assert_series_close(got: &[Option<f64>], want: &[Option<f64>], tol: f64, label: &str) {
    assert_eq!(got.len(), want.len(), "{label}: length mismatch");
    for (t, (g, w)) in got.iter().zip(want).enumerate() {
        match (g, w) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                assert!(
                    (a - b).abs() <= tol,
                    "{label}[{t}]: {a} vs {b} (tol {tol})"
                );
            }
            _ => panic!("{label}[{t}]: definedness mismatch ({g:?} vs {w:?})"),
        }
    }
}

pub fn assert_opt_close(got: Option<f64>, want: Option<f64>, tol: f64, label: &str) {
    match (got, want) {
        (None, None) => {}
        (Some(a), Some(b)) => {
            assert!((a - b).abs() <= tol, "{label}: {a} vs {b} (tol {tol})")
        }
        _ => panic!("{label}: definedness mismatch ({got:?} vs {want:?})"),
    }
}

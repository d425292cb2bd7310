//! Daily OHLCV ingestion: CSV parsing, validation, windowing, and an
//! optional cached remote fetcher.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One trading day of a single symbol.
///
/// `adj_close` is carried through parsing and serialization but never used
/// in any computation: it is a theoretical price, nobody trades at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: Option<f64>,
    pub volume: u64,
}

impl Bar {
    /// Checks the OHLC sanity invariants without consuming the bar.
    pub fn violations(&self) -> Vec<ViolationKind> {
        let mut v = Vec::new();
        if !(self.open.is_finite()
            && self.high.is_finite()
            && self.low.is_finite()
            && self.close.is_finite())
        {
            v.push(ViolationKind::NonFinitePrice);
            return v;
        }
        if self.open <= 0.0 || self.high <= 0.0 || self.low <= 0.0 || self.close <= 0.0 {
            v.push(ViolationKind::NonPositivePrice);
        }
        if self.low > self.high {
            v.push(ViolationKind::LowAboveHigh);
        }
        if self.low > self.open.min(self.close) {
            v.push(ViolationKind::LowAboveBody);
        }
        if self.high < self.open.max(self.close) {
            v.push(ViolationKind::HighBelowBody);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonFinitePrice,
    NonPositivePrice,
    LowAboveHigh,
    LowAboveBody,
    HighBelowBody,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ViolationKind::NonFinitePrice => "non-finite price",
            ViolationKind::NonPositivePrice => "price<=0",
            ViolationKind::LowAboveHigh => "high<low",
            ViolationKind::LowAboveBody => "low>min(open,close)",
            ViolationKind::HighBelowBody => "high<max(open,close)",
        };
        f.write_str(s)
    }
}

/// A bar invariant violation tied to the date it occurred on.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub date: NaiveDate,
    pub kind: ViolationKind,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.date, self.kind)
    }
}

/// Date-ordered bars for one symbol. Parsing guarantees strictly increasing
/// dates; per-bar price invariants are only guaranteed after [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarSeries {
    pub symbol: String,
    pub bars: Vec<Bar>,
}

/// A `BarSeries` whose every bar passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedBarSeries(BarSeries);

impl ValidatedBarSeries {
    pub fn symbol(&self) -> &str {
        &self.0.symbol
    }

    pub fn bars(&self) -> &[Bar] {
        &self.0.bars
    }

    pub fn len(&self) -> usize {
        self.0.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.0.bars.iter().map(|b| b.close).collect()
    }

    pub fn into_inner(self) -> BarSeries {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("empty series")]
    EmptySeries,
}

/// Validation failure: the offending series is kept for inspection.
#[derive(Debug)]
pub struct ValidationFailure {
    pub series: BarSeries,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Error)]
#[error("inverted range: start {start} > end {end}")]
pub struct InvertedRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

const CSV_HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume";

/// Parses a Yahoo-style OHLCV CSV. Rows are re-sorted into ascending date
/// order; a duplicate date or any unparsable field is an error, never a
/// silent drop.
pub fn parse_csv(text: &str, symbol: &str) -> Result<BarSeries, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| ParseError::MalformedHeader(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = ["Date", "Open", "High", "Low", "Close", "Volume"];
    let mut idx = [0usize; 6];
    for (i, name) in required.iter().enumerate() {
        idx[i] = col(name)
            .ok_or_else(|| ParseError::MalformedHeader(format!("missing column {name}")))?;
    }
    let adj_idx = col("Adj Close");

    let mut bars = Vec::new();
    for (rec_no, record) in reader.records().enumerate() {
        let line = rec_no + 2; // 1-based, after the header
        let record = record.map_err(|e| ParseError::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        let field = |i: usize| -> Result<&str, ParseError> {
            record.get(i).map(str::trim).ok_or(ParseError::MalformedRow {
                line,
                reason: format!("missing field {i}"),
            })
        };
        let date = NaiveDate::parse_from_str(field(idx[0])?, "%Y-%m-%d").map_err(|e| {
            ParseError::MalformedRow {
                line,
                reason: format!("bad date: {e}"),
            }
        })?;
        let num = |i: usize, name: &str| -> Result<f64, ParseError> {
            field(i)?.parse::<f64>().map_err(|_| ParseError::MalformedRow {
                line,
                reason: format!("bad {name}: {:?}", field(i).unwrap_or("")),
            })
        };
        let volume = field(idx[5])?
            .parse::<u64>()
            .map_err(|_| ParseError::MalformedRow {
                line,
                reason: format!("bad Volume: {:?}", field(idx[5]).unwrap_or("")),
            })?;
        // An empty Adj Close field means "not adjusted", matching to_csv.
        let adj_close = match adj_idx {
            Some(i) if !field(i)?.is_empty() => Some(num(i, "Adj Close")?),
            _ => None,
        };
        bars.push(Bar {
            date,
            open: num(idx[1], "Open")?,
            high: num(idx[2], "High")?,
            low: num(idx[3], "Low")?,
            close: num(idx[4], "Close")?,
            adj_close,
            volume,
        });
    }
    if bars.is_empty() {
        return Err(ParseError::EmptySeries);
    }
    bars.sort_by_key(|b| b.date);
    for pair in bars.windows(2) {
        if pair[0].date == pair[1].date {
            return Err(ParseError::DuplicateDate(pair[0].date));
        }
    }
    Ok(BarSeries {
        symbol: symbol.to_string(),
        bars,
    })
}

/// Serializes a series back into the canonical CSV layout. `parse_csv` of
/// the output reproduces the input bit-exactly (f64 `Display` round-trips).
pub fn to_csv(series: &BarSeries) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for b in &series.bars {
        let adj = b.adj_close.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            b.date, b.open, b.high, b.low, b.close, adj, b.volume
        );
    }
    out
}

/// Checks every bar invariant. On failure the series rides along with the
/// full violation list so callers can inspect the bad rows.
pub fn validate(series: BarSeries) -> Result<ValidatedBarSeries, ValidationFailure> {
    let mut violations = Vec::new();
    for bar in &series.bars {
        for kind in bar.violations() {
            violations.push(Violation {
                date: bar.date,
                kind,
            });
        }
    }
    if violations.is_empty() {
        Ok(ValidatedBarSeries(series))
    } else {
        Err(ValidationFailure { series, violations })
    }
}

/// Restricts a series to `start ..= end`. An empty result is legal.
pub fn window(
    series: &ValidatedBarSeries,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<ValidatedBarSeries, InvertedRange> {
    if start > end {
        return Err(InvertedRange { start, end });
    }
    let bars = series
        .bars()
        .iter()
        .filter(|b| b.date >= start && b.date <= end)
        .cloned()
        .collect();
    Ok(ValidatedBarSeries(BarSeries {
        symbol: series.symbol().to_string(),
        bars,
    }))
}

/// A universe file: an index label, its constituents, and the test period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Universe {
    pub name: String,
    pub symbols: Vec<String>,
    pub period: DateRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Error)]
pub enum UniverseError {
    #[error("universe period start {0} is not before end {1}")]
    InvertedPeriod(NaiveDate, NaiveDate),
    #[error("universe has no symbols")]
    NoSymbols,
    #[error("bad universe file: {0}")]
    Malformed(#[from] serde_json::Error),
}

impl Universe {
    pub fn from_json(text: &str) -> Result<Universe, UniverseError> {
        let mut u: Universe = serde_json::from_str(text)?;
        if u.period.start >= u.period.end {
            return Err(UniverseError::InvertedPeriod(u.period.start, u.period.end));
        }
        if u.symbols.is_empty() {
            return Err(UniverseError::NoSymbols);
        }
        // Dedup while keeping first-seen order.
        let mut seen = BTreeSet::new();
        u.symbols.retain(|s| seen.insert(s.clone()));
        Ok(u)
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("provider rejected {symbol}: {message}")]
    ProviderRejection { symbol: String, message: String },
    #[error("cache io: {0}")]
    CacheIo(#[from] std::io::Error),
}

/// Transport abstraction so the cache logic is testable without a network.
pub trait QuoteTransport {
    fn get(&self, url: &str) -> Result<String, FetchError>;
}

#[cfg(feature = "fetch")]
pub struct HttpTransport;

#[cfg(feature = "fetch")]
impl QuoteTransport for HttpTransport {
    fn get(&self, url: &str) -> Result<String, FetchError> {
        let resp = reqwest::blocking::get(url)
            .map_err(|e| FetchError::NetworkFailure(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(FetchError::ProviderRejection {
                symbol: String::new(),
                message: format!("HTTP {}", resp.status()),
            });
        }
        resp.text().map_err(|e| FetchError::NetworkFailure(e.to_string()))
    }
}

/// Cached CSV fetcher. The URL template uses `{symbol}`, `{start}`, `{end}`
/// placeholders; payloads are cached at `cache/<symbol>/<start>_<end>.csv`
/// with write-temp-then-rename so a failed fetch never corrupts the cache.
pub struct QuoteFetcher<T: QuoteTransport> {
    pub url_template: String,
    pub cache_dir: PathBuf,
    pub transport: T,
}

impl<T: QuoteTransport> QuoteFetcher<T> {
    pub fn cache_path(&self, symbol: &str, period: DateRange) -> PathBuf {
        self.cache_dir
            .join(symbol)
            .join(format!("{}_{}.csv", period.start, period.end))
    }

    pub fn fetch(&self, symbol: &str, period: DateRange) -> Result<String, FetchError> {
        let path = self.cache_path(symbol, period);
        if path.exists() {
            return Ok(fs::read_to_string(&path)?);
        }
        let url = self
            .url_template
            .replace("{symbol}", symbol)
            .replace("{start}", &period.start.to_string())
            .replace("{end}", &period.end.to_string());
        let payload = self.transport.get(&url).map_err(|e| match e {
            FetchError::ProviderRejection { message, .. } => FetchError::ProviderRejection {
                symbol: symbol.to_string(),
                message,
            },
            other => other,
        })?;
        write_atomic(&path, &payload)?;
        Ok(payload)
    }
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

//! The five subcommands: ingest, backtest, optimize, plotdata, report.
//!
//! Everything is deterministic for a fixed config and seed: symbol
//! iteration is sorted, no timestamps are written, and all floats are
//! emitted with Rust's shortest round-trip formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backtest::{run_backtest, run_universe, Diagnostic, TradeLedger};
use crate::marketdata::{parse_csv, to_csv, validate, window, Universe, ValidatedBarSeries};
use crate::metrics::{aggregate, max_drawdown, pnl_ratio, sharpe, sortino, win_rate, StrategyReport};
use crate::optimizer::{evolve_backtest, Chromosome, GaTrace};
use crate::signals::{evaluate, StrategySpec};

use super::config::RunConfig;
use super::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelMeta {
    pub config_hash: String,
    pub version: String,
    pub universe: String,
    pub data_start: Option<NaiveDate>,
    pub data_end: Option<NaiveDate>,
    pub aggregation: crate::metrics::AggregationPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub strategy: String,
    pub report: StrategyReport,
}

/// One strategy-comparison panel: the machine-readable form of a results
/// table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub meta: PanelMeta,
    pub rows: Vec<PanelRow>,
    pub diagnostics: Vec<Diagnostic>,
}

fn read_universe(cfg: &RunConfig) -> Result<Universe, CliError> {
    let text = fs::read_to_string(&cfg.universe).map_err(|e| {
        CliError::Config(format!("cannot read universe {}: {e}", cfg.universe.display()))
    })?;
    Universe::from_json(&text).map_err(|e| CliError::Config(e.to_string()))
}

/// Loads, validates, and windows every universe symbol. Failures become
/// diagnostics, not errors.
fn load_data(
    cfg: &RunConfig,
    universe: &Universe,
) -> (BTreeMap<String, ValidatedBarSeries>, Vec<Diagnostic>) {
    let mut data = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let mut symbols = universe.symbols.clone();
    symbols.sort();
    for symbol in symbols {
        let path = cfg.data_dir.join(format!("{symbol}.csv"));
        let result = fs::read_to_string(&path)
            .map_err(|e| format!("{}: {e}", path.display()))
            .and_then(|text| parse_csv(&text, &symbol).map_err(|e| e.to_string()))
            .and_then(|series| {
                validate(series).map_err(|f| {
                    let list: Vec<String> =
                        f.violations.iter().map(|v| v.to_string()).collect();
                    format!("invalid bars: {}", list.join("; "))
                })
            })
            .and_then(|series| {
                window(&series, universe.period.start, universe.period.end)
                    .map_err(|e| e.to_string())
            });
        match result {
            Ok(series) if series.is_empty() => diagnostics.push(Diagnostic {
                symbol,
                message: "no bars in universe period".into(),
            }),
            Ok(series) => {
                data.insert(symbol, series);
            }
            Err(message) => diagnostics.push(Diagnostic { symbol, message }),
        }
    }
    (data, diagnostics)
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("mkdir {}: {e}", dir.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Internal(format!("write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_out(path, &text)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn trades_csv(ledger: &TradeLedger) -> String {
    let mut out =
        String::from("entry_date,exit_date,entry_price,exit_price,shares,pnl,ret,forced_exit\n");
    for t in &ledger.trades {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            t.entry_date, t.exit_date, t.entry_price, t.exit_price, t.shares, t.pnl, t.ret,
            t.forced_exit
        );
    }
    out
}

fn equity_csv(ledger: &TradeLedger) -> String {
    let mut out = String::from("date,cash,shares,equity\n");
    for p in &ledger.equity_curve {
        let _ = writeln!(out, "{},{},{},{}", p.date, p.cash, p.shares, p.equity);
    }
    out
}

const PANEL_CSV_HEADER: &str = "strategy,nt,win_rate,pnl_ratio,sharpe,sortino,mdd,\
accumulated_gain,accumulated_loss,accumulated_profit,mean_ret,skewness,kurtosis";

fn panel_csv_row(row: &PanelRow) -> String {
    let r = &row.report;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.strategy,
        r.nt,
        fmt_opt(r.win_rate),
        fmt_opt(r.pnl_ratio),
        fmt_opt(r.sharpe),
        fmt_opt(r.sortino),
        fmt_opt(r.mdd),
        r.accumulated_gain,
        r.accumulated_loss,
        r.accumulated_profit,
        fmt_opt(r.mean_ret),
        fmt_opt(r.skewness),
        fmt_opt(r.kurtosis)
    )
}

fn panel_csv(panel: &PanelReport) -> String {
    let mut out = format!("# config_hash={}\n{PANEL_CSV_HEADER}\n", panel.meta.config_hash);
    for row in &panel.rows {
        out.push_str(&panel_csv_row(row));
        out.push('\n');
    }
    out
}

/// ingest: normalize every CSV in the data directory and write a
/// validation report. Bad files are named, good ones still emitted.
pub fn cmd_ingest(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct FileStatus {
        file: String,
        ok: bool,
        detail: String,
    }

    let entries = fs::read_dir(&cfg.data_dir)
        .map_err(|e| CliError::Config(format!("data_dir {}: {e}", cfg.data_dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "csv").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data("no CSV files in data_dir".into()));
    }

    let mut statuses = Vec::new();
    let mut normalized = Vec::new();
    for path in &paths {
        let symbol = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("UNKNOWN")
            .to_string();
        let file = path.display().to_string();
        let result = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_csv(&text, &symbol).map_err(|e| e.to_string()))
            .and_then(|series| {
                validate(series).map_err(|f| {
                    let list: Vec<String> =
                        f.violations.iter().map(|v| v.to_string()).collect();
                    format!("invalid bars: {}", list.join("; "))
                })
            });
        match result {
            Ok(series) => {
                normalized.push((symbol.clone(), to_csv(&series.clone().into_inner())));
                statuses.push(FileStatus {
                    file,
                    ok: true,
                    detail: format!("{} bars", series.len()),
                });
            }
            Err(detail) => statuses.push(FileStatus {
                file,
                ok: false,
                detail,
            }),
        }
    }

    let failures: Vec<&FileStatus> = statuses.iter().filter(|s| !s.ok).collect();
    if dry_run {
        if let Some(bad) = failures.first() {
            return Err(CliError::Data(format!("{}: {}", bad.file, bad.detail)));
        }
        return Ok(());
    }

    for (symbol, text) in &normalized {
        write_out(&cfg.out_dir.join("normalized").join(format!("{symbol}.csv")), text)?;
    }
    write_json(&cfg.out_dir.join("ingest_report.json"), &statuses)?;

    if let Some(bad) = failures.first() {
        return Err(CliError::Data(format!("{}: {}", bad.file, bad.detail)));
    }
    Ok(())
}

/// backtest: run every configured strategy over the universe, write the
/// panel (JSON + CSV) and per-symbol trade/equity CSVs.
pub fn cmd_backtest(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let universe = read_universe(cfg)?;
    let (data, mut diagnostics) = load_data(cfg, &universe);
    if data.is_empty() {
        return Err(CliError::Data(format!(
            "no usable data for universe {} ({} diagnostics)",
            universe.name,
            diagnostics.len()
        )));
    }
    if dry_run {
        return Ok(());
    }

    let data_start = data.values().filter_map(|s| s.bars().first()).map(|b| b.date).min();
    let data_end = data.values().filter_map(|s| s.bars().last()).map(|b| b.date).max();

    let mut rows = Vec::new();
    for spec in &cfg.strategies {
        let run = run_universe(&universe, spec, &cfg.execution, &data);
        diagnostics.extend(run.diagnostics);
        let report = aggregate(&run.ledgers, cfg.aggregation);
        let strategy_dir = cfg.out_dir.join(spec.kind.name());
        for ledger in &run.ledgers {
            write_out(
                &strategy_dir.join(format!("trades_{}.csv", ledger.symbol)),
                &trades_csv(ledger),
            )?;
            write_out(
                &strategy_dir.join(format!("equity_{}.csv", ledger.symbol)),
                &equity_csv(ledger),
            )?;
        }
        rows.push(PanelRow {
            strategy: spec.kind.name().to_string(),
            report,
        });
    }

    let panel = PanelReport {
        meta: PanelMeta {
            config_hash: cfg.hash(),
            version: VERSION.to_string(),
            universe: universe.name.clone(),
            data_start,
            data_end,
            aggregation: cfg.aggregation,
        },
        rows,
        diagnostics,
    };
    write_json(&cfg.out_dir.join("panel.json"), &panel)?;
    write_out(&cfg.out_dir.join("panel.csv"), &panel_csv(&panel))?;
    Ok(())
}

fn symbol_seed(base: u64, symbol: &str) -> u64 {
    let digest = Sha256::digest(symbol.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    base ^ u64::from_le_bytes(bytes)
}

fn trace_csv(trace: &GaTrace) -> String {
    let mut out =
        String::from("generation,best_fitness,mean_fitness,best_fast,best_slow,best_signal\n");
    for g in &trace.generations {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            g.generation, g.best_fitness, g.mean_fitness, g.best.fast, g.best.slow, g.best.signal
        );
    }
    out
}

fn comparison_row(
    symbol: &str,
    label: &str,
    chrom: Chromosome,
    series: &ValidatedBarSeries,
    cfg: &RunConfig,
    rule: crate::signals::StrategyKind,
) -> Result<String, CliError> {
    let mut spec = StrategySpec::new(rule);
    spec.macd = chrom.params();
    let signals = evaluate(&spec, series).map_err(|e| CliError::Data(e.to_string()))?;
    let ledger =
        run_backtest(series, &signals, &cfg.execution).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(format!(
        "{symbol},{label},({} {} {}),{},{},{},{},{},{}",
        chrom.fast,
        chrom.slow,
        chrom.signal,
        ledger.trades.len(),
        fmt_opt(win_rate(&ledger.trades)),
        fmt_opt(pnl_ratio(&ledger.trades)),
        fmt_opt(sharpe(&ledger.equity_curve)),
        fmt_opt(sortino(&ledger.equity_curve)),
        fmt_opt(max_drawdown(&ledger.equity_curve)),
    ))
}

/// optimize: GA per universe symbol, emitting best chromosomes, traces,
/// and optionally a traditional-vs-optimized comparison.
pub fn cmd_optimize(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let opt = cfg.ga.clone().unwrap_or_default();
    opt.ga.check().map_err(|e| CliError::Config(e.to_string()))?;
    let universe = read_universe(cfg)?;
    let (data, diagnostics) = load_data(cfg, &universe);
    if data.is_empty() {
        return Err(CliError::Data("no usable data to optimize on".into()));
    }
    if dry_run {
        return Ok(());
    }

    let out_dir = cfg.out_dir.join("optimize");
    let mut best_csv = String::from("symbol,fast,slow,signal,best_fitness,generations\n");
    let mut comparison =
        String::from("symbol,params_source,params,nt,win_rate,pnl_ratio,sharpe,sortino,mdd\n");
    let mut bests = BTreeMap::new();

    for (symbol, series) in &data {
        let mut ga = opt.ga;
        ga.seed = symbol_seed(cfg.seed.wrapping_add(ga.seed), symbol);
        let (best, trace) = evolve_backtest(series, opt.rule, &ga, &cfg.execution)
            .map_err(|e| CliError::Data(format!("{symbol}: {e}")))?;
        let final_fit = trace.generations.last().map(|g| g.best_fitness).unwrap_or(0.0);
        let _ = writeln!(
            best_csv,
            "{symbol},{},{},{},{},{}",
            best.fast,
            best.slow,
            best.signal,
            final_fit,
            trace.generations.len()
        );
        write_out(&out_dir.join(format!("trace_{symbol}.csv")), &trace_csv(&trace))?;
        bests.insert(symbol.clone(), best);

        if opt.compare_traditional {
            let traditional = Chromosome {
                fast: 12,
                slow: 26,
                signal: 9,
            };
            comparison.push_str(&comparison_row(
                symbol,
                "traditional",
                traditional,
                series,
                cfg,
                opt.rule,
            )?);
            comparison.push('\n');
            comparison.push_str(&comparison_row(symbol, "optimized", best, series, cfg, opt.rule)?);
            comparison.push('\n');
        }
    }

    #[derive(Serialize)]
    struct BestReport<'a> {
        config_hash: String,
        version: &'a str,
        rule: &'a str,
        best: &'a BTreeMap<String, Chromosome>,
        diagnostics: &'a [Diagnostic],
    }
    write_json(
        &out_dir.join("best.json"),
        &BestReport {
            config_hash: cfg.hash(),
            version: VERSION,
            rule: opt.rule.name(),
            best: &bests,
            diagnostics: &diagnostics,
        },
    )?;
    write_out(&out_dir.join("best.csv"), &best_csv)?;
    if opt.compare_traditional {
        write_out(&out_dir.join("comparison.csv"), &comparison)?;
    }
    Ok(())
}

/// plotdata: per-trade return scatter points and histogram bin counts per
/// strategy, for external plotting tools.
pub fn cmd_plotdata(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let universe = read_universe(cfg)?;
    let (data, _) = load_data(cfg, &universe);
    if data.is_empty() {
        return Err(CliError::Data("no usable data".into()));
    }
    if dry_run {
        return Ok(());
    }

    let out_dir = cfg.out_dir.join("plotdata");
    for spec in &cfg.strategies {
        let run = run_universe(&universe, spec, &cfg.execution, &data);
        let mut scatter = String::from("trade_index,ret,symbol\n");
        let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
        let mut index = 0usize;
        for ledger in &run.ledgers {
            for trade in &ledger.trades {
                let _ = writeln!(scatter, "{},{},{}", index, trade.ret, ledger.symbol);
                index += 1;
                *bins.entry((trade.ret / cfg.bin_width).floor() as i64).or_default() += 1;
            }
        }
        let mut hist = String::from("bin_lo,bin_hi,count\n");
        for (bin, count) in &bins {
            let lo = *bin as f64 * cfg.bin_width;
            let _ = writeln!(hist, "{},{},{}", lo, lo + cfg.bin_width, count);
        }
        let name = spec.kind.name();
        write_out(&out_dir.join(format!("{name}_scatter.csv")), &scatter)?;
        write_out(&out_dir.join(format!("{name}_hist.csv")), &hist)?;
    }
    Ok(())
}

fn fmt_cell(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_else(|| "-".into())
}

/// Aligned plain-text rendering of panel rows.
fn render_text(panels: &[PanelReport]) -> String {
    let header = ["strategy", "NT", "WR", "P&L", "SR", "Sortino", "MDD", "AP"];
    let mut out = String::new();
    for panel in panels {
        let _ = writeln!(out, "Panel: {} (config {})", panel.meta.universe,
                         &panel.meta.config_hash[..12]);
        let mut grid: Vec<[String; 8]> = vec![header.map(String::from)];
        for row in &panel.rows {
            let r = &row.report;
            grid.push([
                row.strategy.clone(),
                r.nt.to_string(),
                fmt_cell(r.win_rate, 2),
                fmt_cell(r.pnl_ratio, 2),
                fmt_cell(r.sharpe, 2),
                fmt_cell(r.sortino, 2),
                fmt_cell(r.mdd, 2),
                fmt_cell(Some(r.accumulated_profit), 2),
            ]);
        }
        let widths: Vec<usize> = (0..8)
            .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap())
            .collect();
        for row in &grid {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
        }
        out.push('\n');
    }
    out
}

/// report: renders stored panel JSONs as text and CSV plus an
/// accumulated-profit ranking. Refuses to merge mismatched config hashes.
pub fn cmd_report(cfg: &RunConfig, panels: &[PathBuf], dry_run: bool) -> Result<(), CliError> {
    let paths: Vec<PathBuf> = if panels.is_empty() {
        vec![cfg.out_dir.join("panel.json")]
    } else {
        panels.to_vec()
    };
    let mut loaded = Vec::new();
    for path in &paths {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let panel: PanelReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        loaded.push(panel);
    }
    let first_hash = &loaded[0].meta.config_hash;
    if loaded.iter().any(|p| &p.meta.config_hash != first_hash) {
        return Err(CliError::Data(
            "refusing to merge panels with mismatched config hashes".into(),
        ));
    }
    if dry_run {
        return Ok(());
    }

    let mut csv = format!("# config_hash={first_hash}\nuniverse,{PANEL_CSV_HEADER}\n");
    for panel in &loaded {
        for row in &panel.rows {
            let _ = writeln!(csv, "{},{}", panel.meta.universe, panel_csv_row(row));
        }
    }

    // Accumulated-profit ranking, descending, per universe.
    let mut ranking =
        String::from("universe,strategy,accumulated_gain,accumulated_loss,accumulated_profit\n");
    for panel in &loaded {
        let mut rows: Vec<&PanelRow> = panel.rows.iter().collect();
        rows.sort_by(|a, b| {
            b.report
                .accumulated_profit
                .partial_cmp(&a.report.accumulated_profit)
                .unwrap()
                .then(a.strategy.cmp(&b.strategy))
        });
        for row in rows {
            let r = &row.report;
            let _ = writeln!(
                ranking,
                "{},{},{},{},{}",
                panel.meta.universe,
                row.strategy,
                r.accumulated_gain,
                r.accumulated_loss,
                r.accumulated_profit
            );
        }
    }

    write_out(&cfg.out_dir.join("report.txt"), &render_text(&loaded))?;
    write_out(&cfg.out_dir.join("report.csv"), &csv)?;
    write_out(&cfg.out_dir.join("ap_ranking.csv"), &ranking)?;
    Ok(())
}

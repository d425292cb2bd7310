//! Run configuration: one JSON document driving every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backtest::ExecutionConfig;
use crate::metrics::AggregationPolicy;
use crate::optimizer::GaConfig;
use crate::signals::{StrategyKind, StrategySpec};

fn default_bin_width() -> f64 {
    0.05
}

fn default_rule() -> StrategyKind {
    StrategyKind::MacdCrossoverSigAbove0
}

fn default_true() -> bool {
    true
}

/// GA section of the run config: the search settings plus which rule the
/// fitness backtests and whether to emit the traditional-vs-optimized
/// comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    #[serde(flatten)]
    pub ga: GaConfig,
    #[serde(default = "default_rule")]
    pub rule: StrategyKind,
    #[serde(default = "default_true")]
    pub compare_traditional: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            ga: GaConfig::default(),
            rule: default_rule(),
            compare_traditional: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Universe JSON file (name, symbols, period).
    pub universe: PathBuf,
    /// Directory of `<symbol>.csv` files.
    pub data_dir: PathBuf,
    /// Strategies to run; at least one.
    pub strategies: Vec<StrategySpec>,
    #[serde(default)]
    pub execution: ExecutionConfig,
    #[serde(default)]
    pub aggregation: AggregationPolicy,
    #[serde(default)]
    pub ga: Option<OptimizeConfig>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("bad config: {e}"))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.strategies.is_empty() {
            return Err("config must name at least one strategy".into());
        }
        for spec in &self.strategies {
            spec.check()?;
        }
        if self.bin_width <= 0.0 {
            return Err("bin_width must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, after CLI overrides. Embedded
    /// in every output so reports from different configs never merge.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        format!("{digest:x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "universe": "u.json",
            "data_dir": "data",
            "strategies": [{"kind": "macd_hist"}],
            "out_dir": "out"
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(&minimal_json()).unwrap();
        cfg.check().unwrap();
        assert_eq!(cfg.execution.initial_cash, 80_000.0);
        assert_eq!(cfg.bin_width, 0.05);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.ga.is_none());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a: RunConfig = serde_json::from_str(&minimal_json()).unwrap();
        let b: RunConfig = serde_json::from_str(&minimal_json()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = b;
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn empty_strategy_list_is_rejected() {
        let text = minimal_json().replace(r#"[{"kind": "macd_hist"}]"#, "[]");
        let cfg: RunConfig = serde_json::from_str(&text).unwrap();
        assert!(cfg.check().is_err());
    }
}

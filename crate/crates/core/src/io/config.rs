//! TOML configuration with `[emulation]` and `[analysis]` sections.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::curve::{LearningCurve, ReliabilityThresholds};
use crate::emulator::{EmulationConfig, QueryMethod, TrainerConfig};
use crate::error::{Error, Result};
use crate::fitting::{derive_a_inf, FunctionFamily};
use crate::metrics::{AnalysisOptions, DEFAULT_N_LEVELS};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub emulation: EmulationSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmulationSection {
    pub n_samples: usize,
    pub positive_fraction: f64,
    pub data_seed: u64,
    pub eval_fraction: f64,
    pub initial_budget: usize,
    /// Defaults to `initial_budget`.
    pub query_size: Option<usize>,
    /// Labelled-set size at which to stop; defaults to the whole AL set.
    pub stop_budget: Option<usize>,
    pub query_methods: Vec<String>,
    pub random_mix: f64,
    pub seeds: Vec<u64>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub grad_tolerance: f64,
    pub l2: f64,
}

impl Default for EmulationSection {
    fn default() -> Self {
        let trainer = TrainerConfig::default();
        EmulationSection {
            n_samples: 4000,
            positive_fraction: 0.1,
            data_seed: 0,
            eval_fraction: 0.5,
            initial_budget: 20,
            query_size: None,
            stop_budget: None,
            query_methods: vec!["rand".into(), "ratio_max".into()],
            random_mix: 0.05,
            seeds: (0..10).collect(),
            learning_rate: trainer.learning_rate,
            max_epochs: trainer.max_epochs,
            grad_tolerance: trainer.grad_tolerance,
            l2: trainer.l2,
        }
    }
}

impl EmulationSection {
    pub fn trainer(&self) -> TrainerConfig {
        TrainerConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            grad_tolerance: self.grad_tolerance,
            l2: self.l2,
        }
    }

    pub fn query_methods(&self) -> Result<Vec<QueryMethod>> {
        if self.query_methods.is_empty() {
            return Err(Error::ConfigInvalid("no query methods configured".into()));
        }
        self.query_methods.iter().map(|s| s.parse()).collect()
    }

    /// One loop configuration per query method.
    pub fn loop_configs(&self) -> Result<Vec<EmulationConfig>> {
        Ok(self
            .query_methods()?
            .into_iter()
            .map(|qm| EmulationConfig {
                initial_budget: self.initial_budget,
                query_size: self.query_size.unwrap_or(self.initial_budget),
                stop_budget: self.stop_budget,
                qm,
                random_mix: self.random_mix,
                seeds: self.seeds.clone(),
                trainer: self.trainer(),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Shared full-data performance.
    pub ceiling: Option<f64>,
    /// Full-data performance per query method; `a_inf` is their mean.
    pub ceilings: Option<BTreeMap<String, f64>>,
    pub families: Vec<FunctionFamily>,
    pub n_levels: usize,
    pub stop_budgets: Vec<f64>,
    pub alpha: f64,
    pub min_gain: f64,
    pub max_violation_fraction: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let t = ReliabilityThresholds::default();
        AnalysisSection {
            ceiling: None,
            ceilings: None,
            families: FunctionFamily::ALL.to_vec(),
            n_levels: DEFAULT_N_LEVELS,
            stop_budgets: Vec::new(),
            alpha: 0.05,
            min_gain: t.min_gain,
            max_violation_fraction: t.max_violation_fraction,
            out_dir: None,
        }
    }
}

/// How the ceiling performance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeilingSource {
    Configured,
    /// Highest observed seed-mean performance; the log had no full-data runs.
    ObservedMaximum,
}

impl CeilingSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CeilingSource::Configured => "configured",
            CeilingSource::ObservedMaximum => "observed_maximum",
        }
    }
}

impl AnalysisSection {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::ConfigInvalid(
                "at least one function family must be enabled".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.n_levels == 0 {
            return Err(Error::ConfigInvalid("n_levels must be positive".into()));
        }
        if self.ceiling.is_some() && self.ceilings.is_some() {
            return Err(Error::ConfigInvalid(
                "set either 'ceiling' or 'ceilings', not both".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve_ceiling(
        &self,
        curves: &BTreeMap<String, LearningCurve>,
    ) -> Result<(f64, CeilingSource)> {
        if let Some(c) = self.ceiling {
            return Ok((derive_a_inf(&[c])?, CeilingSource::Configured));
        }
        if let Some(map) = &self.ceilings {
            let values: Vec<f64> = map.values().copied().collect();
            return Ok((derive_a_inf(&values)?, CeilingSource::Configured));
        }
        let max = curves
            .values()
            .flat_map(|c| c.mean().iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::InvalidCeiling(max));
        }
        Ok((max, CeilingSource::ObservedMaximum))
    }

    pub fn options(&self, ceiling: f64) -> AnalysisOptions {
        AnalysisOptions {
            ceiling,
            families: self.families.clone(),
            n_levels: self.n_levels,
            alpha: self.alpha,
            thresholds: ReliabilityThresholds {
                min_gain: self.min_gain,
                max_violation_fraction: self.max_violation_fraction,
            },
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile =
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.message().to_string()))?;
    cfg.analysis.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::ConfigInvalid(msg) => Error::ConfigInvalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_synthetic_setup() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.emulation.n_samples, 4000);
        assert_eq!(cfg.emulation.initial_budget, 20);
        let loops = cfg.emulation.loop_configs().unwrap();
        assert_eq!(loops.len(), 2);
        assert_eq!(loops[0].query_size, 20);
        assert_eq!(loops[0].random_mix, 0.05);
        assert_eq!(cfg.analysis.families, FunctionFamily::ALL.to_vec());
    }

    #[test]
    fn sections_parse() {
        let cfg = parse_config_str(
            "[emulation]\nseeds = [1, 2]\nquery_methods = [\"rand\", \"kmeans\"]\n\
             [analysis]\nceiling = 0.8\nfamilies = [\"logistic\"]\nstop_budgets = [200, 400]\n",
        )
        .unwrap();
        assert_eq!(cfg.emulation.seeds, vec![1, 2]);
        assert_eq!(
            cfg.emulation.query_methods().unwrap(),
            vec![QueryMethod::Random, QueryMethod::KMeans]
        );
        assert_eq!(cfg.analysis.families, vec![FunctionFamily::Logistic]);
        assert_eq!(cfg.analysis.stop_budgets, vec![200.0, 400.0]);
    }

    #[test]
    fn unknown_keys_fail_closed() {
        assert!(matches!(
            parse_config_str("[analysis]\nceilng = 0.8\n"),
            Err(Error::ConfigInvalid(_))
        ));
        assert!(parse_config_str("[other]\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_config_str("[analysis]\nalpha = 1.5\n").is_err());
        assert!(parse_config_str("[analysis]\nfamilies = []\n").is_err());
        assert!(
            parse_config_str("[analysis]\nceiling = 0.8\nceilings = { rand = 0.8 }\n").is_err()
        );
    }

    #[test]
    fn per_method_ceilings_average() {
        let cfg =
            parse_config_str("[analysis]\nceilings = { rand = 0.8, ratio_max = 1.0 }\n").unwrap();
        let (c, src) = cfg.analysis.resolve_ceiling(&BTreeMap::new()).unwrap();
        assert!((c - 0.9).abs() < 1e-15);
        assert_eq!(src, CeilingSource::Configured);
    }
}

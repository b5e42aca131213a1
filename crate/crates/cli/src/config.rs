//! The experiment file and its resolution against command-line overrides.

use std::path::{Path, PathBuf};

use bbmlab_core::params::{ModelConfig, ModelParams};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const WORKERS_ENV: &str = "BBMLAB_WORKERS";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalLineSection {
    pub y: Option<f64>,
    /// Thresholds for the tail statistic.
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakoutSection {
    /// Stop each replica once the threshold is crossed.
    pub early_stop: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    pub epochs: Option<usize>,
    /// Grid points of the rescaled path.
    pub points: Option<usize>,
    pub z_band: Option<f64>,
    /// Half-width of the band on `e^{−A}Z₀` for the initial population.
    pub initial_band: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbbmSection {
    #[serde(rename = "N")]
    pub n: Option<Vec<usize>>,
    pub dt: Option<f64>,
    pub statistic: Option<String>,
    pub burn_in: Option<f64>,
    pub record_every: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySection {
    pub delta: Option<f64>,
    pub points: Option<usize>,
    pub drift_const: Option<f64>,
}

/// Contents of an experiment file. Every key is optional; `seed` must come from here or the
/// command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub horizon: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub critical_line: CriticalLineSection,
    #[serde(default)]
    pub breakout: BreakoutSection,
    #[serde(default)]
    pub barrier: BarrierSection,
    #[serde(default)]
    pub nbbm: NbbmSection,
    #[serde(default)]
    pub levy: LevySection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// A configuration with the seed, worker count and parameters settled.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub file: ExperimentConfig,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub params: ModelParams<f64>,
}

impl Resolved {
    pub fn new(mut file: ExperimentConfig, ov: &Overrides) -> CliResult<Self> {
        let seed = ov.seed.or(file.seed).or(file.model.seed).ok_or_else(|| CliError::Config("a seed is required".into()))?;
        file.seed = Some(seed);
        file.model.seed = None;
        if let Some(r) = ov.replicas {
            file.replicas = Some(r);
        }
        if file.replicas == Some(0) {
            return Err(CliError::Config("replicas must be at least 1".into()));
        }
        let workers = match ov.workers.or(file.workers) {
            Some(w) => w,
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) => v.parse().map_err(|_| CliError::Config(format!("{WORKERS_ENV}={v:?} is not a count")))?,
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        if workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let output_dir = ov.out.clone().or_else(|| file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("bbmlab-out"));
        let params = file.model.to_params()?;
        Ok(Self { file, seed, workers, output_dir, params })
    }

    pub fn replicas(&self, default: usize) -> usize {
        self.file.replicas.unwrap_or(default)
    }

    /// The settled configuration as TOML, without the worker count and output directory so that
    /// it does not depend on where or how a run happened.
    pub fn echo(&self) -> String {
        let mut f = self.file.clone();
        f.workers = None;
        f.output_dir = None;
        toml::to_string(&f).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_required() {
        let f = ExperimentConfig::parse("replicas = 3").unwrap();
        assert!(matches!(Resolved::new(f, &Overrides::default()), Err(CliError::Config(_))));
    }

    #[test]
    fn overrides_win() {
        let f = ExperimentConfig::parse("seed = 1\nreplicas = 3\nworkers = 2\n[model]\na = 9.0").unwrap();
        let ov = Overrides { seed: Some(5), replicas: Some(7), workers: Some(1), out: None };
        let r = Resolved::new(f, &ov).unwrap();
        assert_eq!((r.seed, r.replicas(0), r.workers), (5, 7, 1));
        assert_eq!(r.params.a, 9.0);
        assert!(!r.echo().contains("workers"));
    }

    #[test]
    fn unknown_keys_and_ambiguous_width_are_config_errors() {
        assert!(ExperimentConfig::parse("sed = 1").is_err());
        let f = ExperimentConfig::parse("seed = 1\n[model]\na = 8.0\nN = 1000.0").unwrap();
        assert!(matches!(Resolved::new(f, &Overrides::default()), Err(CliError::Config(_))));
    }
}

//! Run configuration: a TOML file with nested sections, fully validated
//! before any computation starts. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{Aggregate, Distribution, GridSpec};
use crate::optimizers::Method;
use crate::problems::MomentMethod;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKindConfig {
    /// Simulated trials with the grid-search protocol.
    Empirical,
    /// Operator-spectrum rates.
    Spectral,
    /// A single trial of one method.
    Trial,
    /// Stability classification grid for heavy ball.
    StabilitySweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethodConfig {
    Exact,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatConfig {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionConfig {
    Discrete,
    Gaussian,
}

impl From<DistributionConfig> for Distribution {
    fn from(d: DistributionConfig) -> Self {
        match d {
            DistributionConfig::Discrete => Distribution::Discrete,
            DistributionConfig::Gaussian => Distribution::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    Sgd,
    Hb,
    Nag,
    Asgd,
    AsgdReference,
}

impl From<MethodConfig> for Method {
    fn from(m: MethodConfig) -> Self {
        match m {
            MethodConfig::Sgd => Method::Sgd,
            MethodConfig::Hb => Method::Hb,
            MethodConfig::Nag => Method::Nag,
            MethodConfig::Asgd => Method::Asgd,
            MethodConfig::AsgdReference => Method::AsgdReference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateConfig {
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKindConfig,
    pub master_seed: u64,
    pub output_dir: String,
    #[serde(default = "default_moment_method")]
    pub moment_method: MomentMethodConfig,
    #[serde(default = "default_moment_samples")]
    pub moment_samples: usize,
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_format")]
    pub format: FormatConfig,
}

fn default_moment_method() -> MomentMethodConfig {
    MomentMethodConfig::Exact
}

fn default_moment_samples() -> usize {
    1000
}

fn default_format() -> FormatConfig {
    FormatConfig::Csv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub distributions: Vec<DistributionConfig>,
    /// Target Hessian condition numbers lambda_max/lambda_min.
    pub condition_numbers: Vec<f64>,
    pub methods: Vec<MethodConfig>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_iterations_factor")]
    pub iterations_factor: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_spectral_grid_points")]
    pub spectral_grid_points: usize,
    #[serde(default = "default_record_points")]
    pub record_points: u64,
    #[serde(default = "default_aggregate")]
    pub aggregate: AggregateConfig,
}

fn default_trials() -> usize {
    100
}

fn default_iterations_factor() -> f64 {
    5.0
}

fn default_grid_points() -> usize {
    10
}

fn default_spectral_grid_points() -> usize {
    50
}

fn default_record_points() -> u64 {
    1000
}

fn default_aggregate() -> AggregateConfig {
    AggregateConfig::Mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSection {
    pub instance: InstanceConfig,
    pub method: MethodConfig,
    pub iterations: u64,
    #[serde(default)]
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub long_step: Option<f64>,
    #[serde(default)]
    pub advantage: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
}

fn default_record_every() -> u64 {
    1
}

/// Instance selector for single trials; covers every supported covariate
/// law. The sweep experiments use the (condition-number keyed) `discrete`
/// and `gaussian` families only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Two-point law with Hessian condition number `condition_number`.
    Discrete { condition_number: f64 },
    /// Diagonal Gaussian with condition number `condition_number`.
    Gaussian { condition_number: f64 },
    /// Two-direction discrete law with scales and kurtosis parameter.
    Scaled { sigma1: f64, sigma2: f64, kurtosis: f64 },
    /// d-dimensional discrete law with per-direction scales.
    Custom { sigma: Vec<f64>, kurtosis: f64 },
}

impl InstanceConfig {
    pub fn dimension(&self) -> usize {
        match self {
            InstanceConfig::Custom { sigma, .. } => sigma.len(),
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        match self {
            InstanceConfig::Discrete { condition_number }
            | InstanceConfig::Gaussian { condition_number } => {
                if !(*condition_number >= 1.0) {
                    return invalid("condition_number must be >= 1");
                }
            }
            InstanceConfig::Scaled { sigma1, sigma2, kurtosis } => {
                if !(*sigma1 > *sigma2 && *sigma2 > 0.0) {
                    return invalid("require sigma1 > sigma2 > 0");
                }
                if !(*kurtosis >= 2.0) {
                    return invalid("kurtosis must be >= 2");
                }
            }
            InstanceConfig::Custom { sigma, kurtosis } => {
                if sigma.is_empty() {
                    return invalid("custom instance needs at least one scale");
                }
                if !(*kurtosis >= 2.0) || *kurtosis < sigma.len() as f64 {
                    return invalid("kurtosis must be >= max(2, dimension)");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub kappas: Vec<f64>,
    #[serde(default = "default_prop1_grid")]
    pub grid_points: usize,
    #[serde(default = "default_kurtosis")]
    pub kurtosis: f64,
}

fn default_prop1_grid() -> usize {
    100
}

fn default_kurtosis() -> f64 {
    2.0
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<TrialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn moment_method(&self) -> MomentMethod {
        match self.experiment.moment_method {
            MomentMethodConfig::Exact => MomentMethod::Exact,
            MomentMethodConfig::Empirical => {
                MomentMethod::Empirical { samples: self.experiment.moment_samples }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        match self.experiment.kind {
            ExperimentKindConfig::Empirical | ExperimentKindConfig::Spectral => {
                let Some(sweep) = &self.sweep else {
                    return invalid("sweep section required for this experiment kind".into());
                };
                if sweep.distributions.is_empty() {
                    return invalid("sweep.distributions must be non-empty".into());
                }
                if sweep.condition_numbers.len() < 2 {
                    return invalid("sweep.condition_numbers needs at least two values".into());
                }
                if sweep.condition_numbers.iter().any(|k| !(*k >= 1.0) || !k.is_finite()) {
                    return invalid("condition numbers must be finite and >= 1".into());
                }
                if sweep.methods.is_empty() {
                    return invalid("sweep.methods must be non-empty".into());
                }
                if sweep.trials == 0 {
                    return invalid("sweep.trials must be positive".into());
                }
                if !(sweep.iterations_factor > 0.0) {
                    return invalid("sweep.iterations_factor must be positive".into());
                }
                if sweep.grid_points < 2 || sweep.spectral_grid_points < 1 {
                    return invalid("grid resolutions out of range".into());
                }
            }
            ExperimentKindConfig::Trial => {
                let Some(trial) = &self.trial else {
                    return invalid("trial section required for kind = \"trial\"".into());
                };
                if trial.iterations < 2 {
                    return invalid("trial.iterations must be at least 2".into());
                }
                trial.instance.validate()?;
                if trial.record_every == 0 {
                    return invalid("trial.record_every must be positive".into());
                }
            }
            ExperimentKindConfig::StabilitySweep => {
                let Some(p) = &self.stability else {
                    return invalid("stability section required for this kind".into());
                };
                if p.kappas.is_empty() {
                    return invalid("stability.kappas must be non-empty".into());
                }
                if p.kappas.iter().any(|k| !(*k > 1.0)) {
                    return invalid("stability kappas must exceed 1".into());
                }
                if p.grid_points < 2 {
                    return invalid("stability.grid_points must be at least 2".into());
                }
                if !(p.kurtosis >= 2.0) {
                    return invalid("stability.kurtosis must be >= 2".into());
                }
            }
        }
        if self.experiment.moment_samples == 0 {
            return invalid("moment_samples must be positive".into());
        }
        Ok(())
    }

    pub fn aggregate(&self) -> Aggregate {
        match self.sweep.as_ref().map(|s| s.aggregate).unwrap_or(AggregateConfig::Mean) {
            AggregateConfig::Mean => Aggregate::Mean,
            AggregateConfig::Median => Aggregate::Median,
        }
    }

    /// Grid for the empirical heavy-ball / NAG search.
    pub fn empirical_grid(&self) -> GridSpec {
        let n = self.sweep.as_ref().map(|s| s.grid_points).unwrap_or(default_grid_points());
        GridSpec::momentum_grid(n)
    }
}

//! JSON experiment configuration.
//!
//! Every section has documented defaults, so `{"experiment": "sweep"}` is a
//! complete config. Unknown fields are rejected. Validation runs before any
//! computation and names the offending field by its dotted path.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bifurcation::SweepSpec;
use crate::error::ModelError;
use crate::estimator::EstimatorConfig;
use crate::network::{reference_estimator, reference_sim, BurstScenario};
use crate::objective::RouterParams;
use crate::router::{pseudo_solar, NoiseSchedule, Segment, SimConfig, SolarConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Single,
    Sweep,
    Critical,
    Network,
    NetworkCritical,
    Landscape,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Single => "single",
            Self::Sweep => "sweep",
            Self::Critical => "critical",
            Self::Network => "network",
            Self::NetworkCritical => "network_critical",
            Self::Landscape => "landscape",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| format!("unknown experiment kind {s:?}"))
    }
}

/// Supply schedule for single-router runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { p_mean: f64, d: f64 },
    Piecewise { segments: Vec<Segment> },
    PseudoSolar(SolarConfig),
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self::PseudoSolar(SolarConfig::default())
    }
}

impl ScheduleConfig {
    /// Builds the schedule; a pseudo-solar envelope is extended to cover `t_end`.
    pub fn build(&self, sim: &SimConfig, seed: u64) -> Result<NoiseSchedule, ModelError> {
        match self {
            Self::Constant { p_mean, d } => NoiseSchedule::constant(*p_mean, *d),
            Self::Piecewise { segments } => NoiseSchedule::piecewise(segments.clone()),
            Self::PseudoSolar(cfg) => {
                let cfg = SolarConfig {
                    horizon: cfg.horizon.max(sim.t_end),
                    ..*cfg
                };
                pseudo_solar(&cfg, seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalConfig {
    pub d_lo: f64,
    pub d_hi: f64,
    pub tol: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            d_lo: 1.0,
            d_hi: 4.0,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeConfig {
    pub d_values: Vec<f64>,
    /// Points on the `u ∈ [0, 1]` grid per curve.
    pub n_u: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            d_values: vec![0.5, 1.5, 2.5],
            n_u: 1001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkRunConfig {
    pub scenario: BurstScenario,
    /// Burst noise at the scenario node; `null` runs without a burst.
    pub d_burst: Option<f64>,
    pub estimator: EstimatorConfig,
    pub sim: SimConfig,
}

impl Default for NetworkRunConfig {
    fn default() -> Self {
        Self {
            scenario: BurstScenario::default(),
            d_burst: Some(3.0),
            estimator: reference_estimator(),
            sim: SimConfig {
                t_end: 80.0,
                ..reference_sim()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkCriticalConfig {
    pub scenario: BurstScenario,
    /// Coupling constants to evaluate; each overrides `scenario.g`.
    pub g_values: Vec<f64>,
    pub d_lo: f64,
    pub d_hi: f64,
    pub tol: f64,
    pub estimator: EstimatorConfig,
    pub sim: SimConfig,
}

impl Default for NetworkCriticalConfig {
    fn default() -> Self {
        Self {
            scenario: BurstScenario::default(),
            g_values: vec![0.0, 0.1, 0.5],
            d_lo: 1.0,
            d_hi: 6.0,
            tol: 1e-3,
            estimator: reference_estimator(),
            sim: reference_sim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output: PathBuf,
    pub params: RouterParams,
    pub estimator: EstimatorConfig,
    pub sim: SimConfig,
    pub schedule: ScheduleConfig,
    pub sweep: SweepSpec,
    pub critical: CriticalConfig,
    pub landscape: LandscapeConfig,
    pub network: NetworkRunConfig,
    pub network_critical: NetworkCriticalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::default(),
            seed: 0,
            output: PathBuf::from("out"),
            params: RouterParams::default(),
            estimator: EstimatorConfig::default(),
            sim: SimConfig::default(),
            schedule: ScheduleConfig::default(),
            sweep: SweepSpec::default(),
            critical: CriticalConfig::default(),
            landscape: LandscapeConfig::default(),
            network: NetworkRunConfig::default(),
            network_critical: NetworkCriticalConfig::default(),
        }
    }
}

/// Prefixes a model validation error with the section it came from.
fn at(section: &str, err: ModelError) -> ConfigError {
    match err {
        ModelError::Domain { name, value, reason } => ConfigError::Invalid {
            field: format!("{section}.{name}"),
            message: format!("{value} ({reason})"),
        },
        ModelError::NodeIndex { index, n_nodes } => ConfigError::Invalid {
            field: format!("{section}.node"),
            message: format!("node {index} out of range for {n_nodes} nodes"),
        },
        other => ConfigError::Invalid {
            field: section.to_owned(),
            message: other.to_string(),
        },
    }
}

fn require(ok: bool, field: &str, message: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            field: field.to_owned(),
            message: message.into(),
        })
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact effective config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Checks every section, whether or not the selected experiment uses it.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| at("params", e))?;
        self.estimator.validate().map_err(|e| at("estimator", e))?;
        self.sim.validate().map_err(|e| at("sim", e))?;
        self.sim.sample_stride(&self.estimator).map_err(|e| at("estimator", e))?;
        self.schedule
            .build(&self.sim, self.seed)
            .map_err(|e| at("schedule", e))?;

        let sweep = SweepSpec {
            params: self.params,
            ..self.sweep
        };
        sweep.validate().map_err(|e| at("sweep", e))?;

        let c = &self.critical;
        require(c.tol.is_finite() && c.tol > 0.0, "critical.tol", "must be positive")?;
        require(
            c.d_lo.is_finite() && c.d_lo >= 0.0 && c.d_hi > c.d_lo,
            "critical.d_hi",
            "bracket must satisfy 0 <= d_lo < d_hi",
        )?;

        let l = &self.landscape;
        require(!l.d_values.is_empty(), "landscape.d_values", "must not be empty")?;
        require(
            l.d_values.iter().all(|d| d.is_finite() && *d >= 0.0),
            "landscape.d_values",
            "noise intensities must be non-negative",
        )?;
        require(l.n_u >= 2, "landscape.n_u", "must be at least 2")?;

        let n = &self.network;
        n.scenario.validate().map_err(|e| at("network.scenario", e))?;
        n.scenario
            .network(&self.params, n.d_burst.unwrap_or(n.scenario.d_base))
            .map_err(|e| at("network.scenario", e))?;
        n.estimator.validate().map_err(|e| at("network.estimator", e))?;
        n.sim.validate().map_err(|e| at("network.sim", e))?;
        n.sim
            .sample_stride(&n.estimator)
            .map_err(|e| at("network.estimator", e))?;

        let nc = &self.network_critical;
        nc.scenario
            .validate()
            .map_err(|e| at("network_critical.scenario", e))?;
        nc.scenario
            .network(&self.params, nc.d_lo)
            .map_err(|e| at("network_critical.scenario", e))?;
        require(
            !nc.g_values.is_empty() && nc.g_values.iter().all(|g| g.is_finite() && *g >= 0.0),
            "network_critical.g_values",
            "need at least one non-negative coupling",
        )?;
        require(
            nc.tol.is_finite() && nc.tol > 0.0,
            "network_critical.tol",
            "must be positive",
        )?;
        require(
            nc.d_lo.is_finite() && nc.d_lo >= 0.0 && nc.d_hi > nc.d_lo,
            "network_critical.d_hi",
            "bracket must satisfy 0 <= d_lo < d_hi",
        )?;
        nc.estimator
            .validate()
            .map_err(|e| at("network_critical.estimator", e))?;
        nc.sim.validate().map_err(|e| at("network_critical.sim", e))?;
        nc.sim
            .sample_stride(&nc.estimator)
            .map_err(|e| at("network_critical.estimator", e))?;
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment":"sweep"}"#).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Sweep);
        assert_eq!(cfg.params, RouterParams::default());
        assert_eq!(cfg.sweep.n_points, 401);
        assert_eq!(cfg.sim, SimConfig::default());
    }

    #[test]
    fn negative_gamma_names_field() {
        let err = ExperimentConfig::from_json(r#"{"params":{"gamma":-1.0}}"#).unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "params.gamma"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_field_rejected_with_path() {
        let err = ExperimentConfig::from_json(r#"{"params":{"gama":1.0}}"#).unwrap_err();
        match err {
            ConfigError::Schema { path, message } => {
                assert!(path.starts_with("params"), "{path}");
                assert!(message.contains("gama"));
            }
            other => panic!("unexpected {other}"),
        }
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn wrong_type_reports_path() {
        let err = ExperimentConfig::from_json(r#"{"sim":{"dt":"fast"}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { ref path, .. } if path == "sim.dt"), "{err}");
    }

    #[test]
    fn nested_validation_paths() {
        let err = ExperimentConfig::from_json(r#"{"network":{"scenario":{"node":7}}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "network.scenario.node"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"estimator":{"dt":0.0015}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field.starts_with("estimator")), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"single","seed":42,"schedule":{"kind":"constant","p_mean":1.0,"d":0.7}}"#,
        )
        .unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = ExperimentConfig::default();
        let mut other = base.clone();
        assert_eq!(base.hash(), other.hash());
        other.network_critical.scenario.floor = 2e-3;
        assert_ne!(base.hash(), other.hash());
        let mut other = base.clone();
        other.seed = 1;
        assert_ne!(base.hash(), other.hash());
    }

    #[test]
    fn kind_parses_from_str() {
        assert_eq!("network_critical".parse::<ExperimentKind>().unwrap(), ExperimentKind::NetworkCritical);
        assert!("nope".parse::<ExperimentKind>().is_err());
        assert_eq!(ExperimentKind::Landscape.to_string(), "landscape");
    }
}

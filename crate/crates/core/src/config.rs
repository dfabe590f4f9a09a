//! Run configurations, the shipped presets and the config hash.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, FieldError, Result};
use crate::externality::{self, OpenResourceScenario, ResourceCaps};
use crate::sim::{OperatorConfig, Scenario, SharingRegime, SimSettings};

/// A configuration that one subcommand runs.
pub trait RunConfig: Serialize + DeserializeOwned + Clone {
    const KIND: &'static str;

    fn name(&self) -> &str;
    fn seed(&self) -> u64;
    fn set_seed(&mut self, seed: u64);
    fn field_errors(&self, errors: &mut Vec<FieldError>);

    fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.field_errors(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }
}

fn all_regimes() -> Vec<SharingRegime> {
    SharingRegime::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub name: String,
    #[serde(default = "all_regimes")]
    pub regimes: Vec<SharingRegime>,
    pub operators: Vec<OperatorConfig>,
    #[serde(default)]
    pub sim: SimSettings,
}

impl SimulateConfig {
    pub fn scenarios(&self) -> Vec<Scenario> {
        self.regimes
            .iter()
            .map(|&regime| Scenario {
                regime,
                operators: self.operators.clone(),
                sim: self.sim.clone(),
            })
            .collect()
    }
}

impl RunConfig for SimulateConfig {
    const KIND: &'static str = "simulate";

    fn name(&self) -> &str {
        &self.name
    }
    fn seed(&self) -> u64 {
        self.sim.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
    }

    fn field_errors(&self, errors: &mut Vec<FieldError>) {
        if self.regimes.is_empty() {
            errors.push(FieldError::new("regimes", "at least one regime is required"));
        }
        let probe = Scenario {
            regime: SharingRegime::NoSharing,
            operators: self.operators.clone(),
            sim: self.sim.clone(),
        };
        if let Err(Error::Validation(e)) = probe.validate() {
            errors.extend(e);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalityConfig {
    pub name: String,
    #[serde(default = "all_scenarios")]
    pub scenarios: Vec<OpenResourceScenario>,
    #[serde(default)]
    pub caps: ResourceCaps,
    #[serde(default = "externality::default_grid")]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub sim: SimSettings,
}

fn all_scenarios() -> Vec<OpenResourceScenario> {
    OpenResourceScenario::ALL.to_vec()
}

impl RunConfig for ExternalityConfig {
    const KIND: &'static str = "externality";

    fn name(&self) -> &str {
        &self.name
    }
    fn seed(&self) -> u64 {
        self.sim.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
    }

    fn field_errors(&self, errors: &mut Vec<FieldError>) {
        if self.scenarios.is_empty() {
            errors.push(FieldError::new("scenarios", "at least one scenario is required"));
        }
        if let Err(e) = self.caps.validate() {
            errors.push(FieldError::new("caps", e.to_string()));
        }
        if let Err(e) = externality::validate_grid(&self.grid) {
            errors.push(FieldError::new("grid", e.to_string()));
        }
        self.sim.validate(errors);
    }
}

/// Where the demand model gets its externality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandSource {
    /// `h(n) = n`.
    Analytic,
    /// A curve CSV written by the externality command.
    CurveFile { path: PathBuf },
    /// Curves simulated on demand (and cached).
    Simulated { externality: ExternalityConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    pub name: String,
    /// Only stamped on outputs; demand is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub omega_hat: f64,
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
    #[serde(default = "default_intervals")]
    pub grid_intervals: usize,
    pub source: DemandSource,
}

fn one() -> f64 {
    1.0
}
fn default_costs() -> Vec<f64> {
    vec![0.1]
}
fn default_intervals() -> usize {
    crate::demand::DEFAULT_GRID_INTERVALS
}

impl RunConfig for DemandConfig {
    const KIND: &'static str = "demand";

    fn name(&self) -> &str {
        &self.name
    }
    fn seed(&self) -> u64 {
        match &self.source {
            DemandSource::Simulated { externality } => externality.seed(),
            _ => self.seed,
        }
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let DemandSource::Simulated { externality } = &mut self.source {
            externality.set_seed(seed);
        }
    }

    fn field_errors(&self, errors: &mut Vec<FieldError>) {
        if self.costs.is_empty() {
            errors.push(FieldError::new("costs", "at least one cost is required"));
        }
        for (i, c) in self.costs.iter().enumerate() {
            if !(*c >= 0.0 && c.is_finite()) {
                errors.push(FieldError::new(format!("costs[{i}]"), "must be finite and nonnegative"));
            }
        }
        if self.grid_intervals < 2 {
            errors.push(FieldError::new("grid_intervals", "must be at least 2"));
        }
        if let DemandSource::Simulated { externality } = &self.source {
            let mut inner = Vec::new();
            externality.field_errors(&mut inner);
            errors.extend(
                inner
                    .into_iter()
                    .map(|e| FieldError::new(format!("source.externality.{}", e.field), e.message)),
            );
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuopolyConfig {
    pub name: String,
    /// Only stamped on outputs; the sweep is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub q_hat: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_step: f64,
    pub mu: Vec<f64>,
}

impl DuopolyConfig {
    pub fn omega_axis(&self) -> Result<Vec<f64>> {
        crate::duopoly::axis(self.omega_min, self.omega_max, self.omega_step)
    }
}

impl RunConfig for DuopolyConfig {
    const KIND: &'static str = "duopoly";

    fn name(&self) -> &str {
        &self.name
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn field_errors(&self, errors: &mut Vec<FieldError>) {
        if self.omega_axis().is_err() {
            errors.push(FieldError::new("omega_min/omega_max/omega_step", "need omega_min <= omega_max and a positive step"));
        }
        if self.mu.is_empty() {
            errors.push(FieldError::new("mu", "at least one intensity is required"));
        }
    }
}

/// Parses and validates a TOML config.
pub fn parse<C: RunConfig>(text: &str) -> Result<C> {
    let config: C = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Shipped presets: name, subcommand, TOML text.
pub const PRESETS: &[(&str, &str, &str)] = &[
    ("fig4_symmetric", "simulate", include_str!("../presets/fig4_symmetric.toml")),
    ("fig5_asymmetric", "simulate", include_str!("../presets/fig5_asymmetric.toml")),
    ("networksize_noopen", "externality", include_str!("../presets/networksize_noopen.toml")),
    ("networksize_openbs", "externality", include_str!("../presets/networksize_openbs.toml")),
    ("networksize_openspectrum", "externality", include_str!("../presets/networksize_openspectrum.toml")),
    ("fig7", "demand", include_str!("../presets/fig7.toml")),
    ("figs8_9", "duopoly", include_str!("../presets/figs8_9.toml")),
];

pub fn preset<C: RunConfig>(name: &str) -> Result<C> {
    let Some(&(_, kind, text)) = PRESETS.iter().find(|p| p.0 == name) else {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
        return Err(Error::Validation(vec![FieldError::new(
            "preset",
            format!("unknown preset `{name}`; known: {}", known.join(", ")),
        )]));
    };
    if kind != C::KIND {
        return Err(Error::Validation(vec![FieldError::new(
            "preset",
            format!("`{name}` is a {kind} preset, not {}", C::KIND),
        )]));
    }
    parse(text)
}

/// Short stable digest of a config (seed included).
pub fn config_hash<C: RunConfig>(config: &C) -> String {
    let json = serde_json::to_string(config).expect("configs serialize");
    let mut h = Sha256::new();
    h.update(C::KIND.as_bytes());
    h.update(b"\n");
    h.update(json.as_bytes());
    hex::encode(&h.finalize()[..8])
}

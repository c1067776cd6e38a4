//! Experiment configuration: a JSON document fully mirrored by command
//! line flags, flags taking precedence.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Toric,
    Cluster,
    History,
    Search,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Toric => "toric",
            ModelKind::Cluster => "cluster",
            ModelKind::History => "history",
            ModelKind::Search => "search",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    Local,
}

/// Schedule section of the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    /// Total protocol time for linear schedules.
    pub time: f64,
    /// Rate prefactor for local schedules.
    pub epsilon: f64,
    pub coupling_floor: f64,
    /// Stage-boundary rate ramping for local schedules. Unset means
    /// automatic: on for the lattice protocols, off for the search sweep
    /// whose own rate already collapses inside the small-gap window.
    pub smoothing: Option<bool>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Local,
            time: 10.0,
            epsilon: crate::schedule::DEFAULT_EPSILON,
            coupling_floor: crate::schedule::DEFAULT_COUPLING_FLOOR,
            smoothing: None,
        }
    }
}

/// Full experiment description. Defaults are documented on each field;
/// unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelKind>,
    /// Torus / grid extents.
    pub lx: usize,
    pub ly: usize,
    /// Clock-register steps.
    pub l: usize,
    /// History path: linear | stepwise | single_rotation.
    pub path: String,
    /// Search overlap; `n` sets `a0 = 1/√n` when `a0` is absent.
    pub a0: Option<f64>,
    pub n: Option<u64>,
    /// Topological sector loops: none | h | v | hv.
    pub sector: String,
    pub schedule: ScheduleConfig,
    /// θ grid points per stage for traces.
    pub grid: usize,
    /// Recorded samples per stage.
    pub samples: usize,
    /// Cap on the angle swept per propagation sub-step.
    pub max_dtheta: f64,
    /// Seed for the randomized property suites.
    pub seed: u64,
    /// Trace CSV output path.
    pub out: Option<PathBuf>,
    /// Optional SVG plot path.
    pub plot: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: None,
            lx: 2,
            ly: 2,
            l: 6,
            path: "stepwise".to_string(),
            a0: None,
            n: None,
            sector: "none".to_string(),
            schedule: ScheduleConfig::default(),
            grid: 401,
            samples: 64,
            max_dtheta: 1e-3,
            seed: 7,
            out: None,
            plot: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Effective search overlap: explicit `a0` wins, otherwise `1/√n`.
    pub fn effective_a0(&self) -> Option<f64> {
        self.a0.or_else(|| self.n.map(|n| 1.0 / (n as f64).sqrt()))
    }
}

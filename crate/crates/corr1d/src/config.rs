//! Run configuration files.
//!
//! Configs are TOML. Unknown keys are rejected, and every value a preset
//! fills in is recorded so the manifest can flag it as defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "fig2")]
    Fig2,
    #[serde(rename = "fig3a")]
    Fig3a,
    #[serde(rename = "fig3b")]
    Fig3b,
    #[serde(rename = "figA1a")]
    FigA1a,
    #[serde(rename = "figA1b")]
    FigA1b,
    #[serde(rename = "spectrum")]
    Spectrum,
    #[serde(rename = "two-atom")]
    TwoAtom,
    #[serde(rename = "custom-sweep")]
    CustomSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::FigA1a => "figA1a",
            Self::FigA1b => "figA1b",
            Self::Spectrum => "spectrum",
            Self::TwoAtom => "two-atom",
            Self::CustomSweep => "custom-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Classical,
    Fermionic,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    #[default]
    Auto,
    Dipole,
    Transfer,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub gamma_w_over_gamma_t: Option<f64>,
}

/// Lengths are in units of `1/k`, rates and detunings in units of `γ_t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub kind: Option<Kind>,
    pub n_atoms: Option<usize>,
    /// Poisson-distributed atom number with this mean.
    pub nbar: Option<f64>,
    pub box_length: Option<f64>,
    pub box_length_over_lambda: Option<f64>,
    pub rho_over_k: Option<f64>,
    pub positions: Option<Vec<f64>>,
    pub doppler_width: Option<f64>,
    pub base_detuning: Option<f64>,
    pub n_realizations: Option<usize>,
    pub backend: Option<BackendName>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub delta_count: Option<usize>,
    pub kl_min: Option<f64>,
    pub kl_max: Option<f64>,
    pub kl_count: Option<usize>,
}

/// Lists of values to sweep; each experiment accepts only some of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma_w_over_gamma_t: Option<Vec<f64>>,
    pub rho_over_k: Option<Vec<f64>>,
    pub n_atoms: Option<Vec<usize>>,
    pub doppler_width: Option<Vec<f64>>,
    pub kinds: Option<Vec<Kind>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn preset(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: None,
            output_dir: None,
            physics: PhysicsConfig::default(),
            ensemble: EnsembleConfig::default(),
            grid: GridConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

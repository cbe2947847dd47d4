//! Experiment configuration files.

use std::path::{Path, PathBuf};

use ris_coverage::sinr::IntensityConvention;
use ris_coverage::street::TauBoundary;
use ris_coverage::{EnvParams, ExpoEnvParams, RadioParams, StreetGeometry};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Wall distance used when a config does not give one.
pub const DEFAULT_L: f64 = 10.0;
/// Obstacle rate used when a config does not give one.
pub const DEFAULT_GAMMA2: f64 = 0.5;
/// Transmitter position for the SINR sweep.
pub const DEFAULT_X: f64 = 10.0;

/// Geometry section. `l` may be left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    pub d: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub delta: f64,
}

/// Environment section: exponential rates (with `gamma2` optional) or
/// general length laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSection {
    Exponential {
        gamma1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma2: Option<f64>,
    },
    General {
        free: ris_coverage::LengthDistribution,
        obstacle: ris_coverage::LengthDistribution,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_trials")]
    pub n_trials: u64,
    /// Dependent-MC configurations; `n_trials` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_configs: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Simulation window override (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    /// Count the free stretch at the origin in the simulated covered length.
    #[serde(default = "yes")]
    pub include_gap0: bool,
}

fn yes() -> bool {
    true
}

fn default_trials() -> u64 {
    100_000
}

impl Default for McSection {
    fn default() -> Self {
        Self { n_trials: default_trials(), n_configs: None, seed: 0, window: None, include_gap0: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// `gamma2 / gamma1`, with `gamma1` held fixed.
    Alpha,
    Theta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinrSection {
    #[serde(default = "default_x")]
    pub x: f64,
    #[serde(default)]
    pub intensity_convention: IntensityConvention,
    #[serde(default)]
    pub resample_phi: bool,
    #[serde(default)]
    pub tau_boundary: TauBoundary,
}

fn default_x() -> f64 {
    DEFAULT_X
}

impl Default for SinrSection {
    fn default() -> Self {
        Self {
            x: DEFAULT_X,
            intensity_convention: IntensityConvention::Raw,
            resample_phi: false,
            tau_boundary: TauBoundary::Origin,
        }
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySection,
    pub env: EnvSection,
    #[serde(default = "RadioParams::reference")]
    pub radio: RadioParams,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub sinr: SinrSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub geometry: StreetGeometry,
    pub env: EnvParams,
    /// Which artifact defaults were filled in.
    pub defaulted_l: bool,
    pub defaulted_gamma2: bool,
}

impl ExperimentConfig {
    /// `a = 0`, `delta = 0`, `rho = 20` (`l = 10`, `d = 0.5`),
    /// `gamma1 = 0.5`, `lambda = 0.2`, powers of 20 dBm and noise of -90 dBm.
    pub fn reference() -> Self {
        Self {
            geometry: GeometrySection { l: None, d: 0.5, a: 0.0, delta: 0.0 },
            env: EnvSection::Exponential { gamma1: 0.5, gamma2: None },
            radio: RadioParams::reference(),
            mc: McSection::default(),
            sweep: None,
            sinr: SinrSection::default(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical JSON used for the provenance hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let g = &self.geometry;
        let geometry = StreetGeometry::new(g.l.unwrap_or(DEFAULT_L), g.d, g.a, g.delta)?;
        let (env, defaulted_gamma2): (EnvParams, bool) = match self.env {
            EnvSection::Exponential { gamma1, gamma2 } => {
                (ExpoEnvParams::new(gamma1, gamma2.unwrap_or(DEFAULT_GAMMA2))?.into(), gamma2.is_none())
            }
            EnvSection::General { free, obstacle } => {
                let p = ris_coverage::GeneralEnvParams { free, obstacle };
                p.validate()?;
                (p.into(), false)
            }
        };
        self.radio.validate()?;
        let mc = &self.mc;
        if mc.n_trials == 0 || mc.n_configs == Some(0) {
            return Err(CliError::Config("n_trials and n_configs must be >= 1".into()));
        }
        if let Some(w) = mc.window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(CliError::Config(format!("window must be > 0, got {w}")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.grid.is_empty() || sweep.grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(CliError::Config("sweep grid must be non-empty and positive".into()));
            }
        }
        if !self.sinr.x.is_finite() || self.sinr.x < 0.0 {
            return Err(CliError::Config(format!("sinr.x must be >= 0, got {}", self.sinr.x)));
        }
        Ok(Resolved {
            config: self.clone(),
            geometry,
            env,
            defaulted_l: g.l.is_none(),
            defaulted_gamma2,
        })
    }
}

impl Resolved {
    pub fn exponential(&self) -> Result<ExpoEnvParams, CliError> {
        match self.env {
            EnvParams::Exponential(p) => Ok(p),
            EnvParams::General(_) => Err(CliError::Config("this command needs an exponential environment".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips() {
        let c = ExperimentConfig::reference();
        let back = ExperimentConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(c, back);
        let r = c.resolve().unwrap();
        assert!(r.defaulted_l && r.defaulted_gamma2);
        assert_eq!(r.geometry.rho(), 20.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"geometry":{"d":0.5,"bogus":1},"env":{"kind":"exponential","gamma1":0.5}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let text = r#"{"geometry":{"d":0.5},"env":{"kind":"exponential","gamma1":0.5,"x":2}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let text = r#"{"geometry":{"d":0.5},"env":{"kind":"exponential","gamma1":0.5},"extra":{}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn general_env_parses() {
        let text = r#"{"geometry":{"l":10,"d":0.5},"env":{"kind":"general",
            "free":{"kind":"uniform","lo":0,"hi":4},"obstacle":{"kind":"deterministic","value":2}}}"#;
        let r = ExperimentConfig::from_json(text).unwrap().resolve().unwrap();
        assert!(matches!(r.env, EnvParams::General(_)));
        assert!(r.exponential().is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let text = r#"{"geometry":{"l":0.4,"d":0.5},"env":{"kind":"exponential","gamma1":0.5}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap().resolve().is_err());
        let text = r#"{"geometry":{"d":0.5},"env":{"kind":"exponential","gamma1":-1}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap().resolve().is_err());
    }
}

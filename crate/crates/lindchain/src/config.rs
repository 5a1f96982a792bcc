//! Run configuration: a serializable bundle of every knob a single run
//! needs. Persisted alongside outputs so any run can be reproduced exactly.
//!
//! Precedence: command-line flag > config file > built-in default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::EvolveConfig;
use crate::observables::VarianceWindow;
use crate::params::ChainParams;
use crate::spectral::ClassifierConfig;
use crate::state::InitialStateSpec;

/// Environment variable holding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "LINDCHAIN_OUTPUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub params: ChainParams,
    pub init: InitialStateSpec,
    pub evolve: EvolveConfig,
    pub window: VarianceWindow,
    pub classifier: ClassifierConfig,
    /// Start of the spectral/classification analysis window (ends at t_max).
    pub analysis_start: f64,
    /// Residual target for steady-state searches.
    pub tol_rhs: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ChainParams::default(),
            init: InitialStateSpec::default(),
            evolve: EvolveConfig::default(),
            window: VarianceWindow::default(),
            classifier: ClassifierConfig::default(),
            analysis_start: 300.0,
            tol_rhs: 1e-8,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::InvalidParams(format!("config parse: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.init.validate()?;
        self.evolve.validate()?;
        self.classifier.validate()?;
        if self.analysis_start < 0.0 || self.analysis_start >= self.evolve.t_max {
            return Err(Error::InvalidParams(
                "analysis_start must lie inside [0, t_max)".into(),
            ));
        }
        if self.tol_rhs <= 0.0 {
            return Err(Error::InvalidParams("tol_rhs must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&cfg).unwrap(), serde_json::to_string(&back).unwrap());
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg: RunConfig = toml::from_str("[params]\nn = 4\ndelta = 1.0\nomega = 1.5\nv = 5.0\ngamma = 1.0\nlambda = 0.2\n").unwrap();
        assert_eq!(cfg.params.n, 4);
        assert_eq!(cfg.evolve.t_max, 500.0);
    }

    #[test]
    fn validation_catches_bad_window() {
        let mut cfg = RunConfig::default();
        cfg.analysis_start = 600.0;
        assert!(cfg.validate().is_err());
    }
}

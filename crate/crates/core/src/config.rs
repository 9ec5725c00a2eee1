//! Run configuration files (TOML) and preset resolution.
//!
//! ```toml
//! model = "hermitian"
//!
//! [system]
//! coupling = 1e-4
//! t_max = 5026.5
//! dt_sample = 6.28
//!
//! [system.reservoir1]
//! n_modes = 40
//! freq_step = 5e-3
//! coupling = 1.5e-3
//!
//! [system.reservoir2]
//! n_modes = 40
//! freq_step = 3.5355e-3
//! coupling = 1.5e-3
//!
//! [ensemble]
//! n_states = 300
//! seed = 7
//!
//! [analysis]
//! observation_time = 650.0
//! dt = 0.5
//!
//! [sweep]
//! start = 0.1
//! stop = 3.0
//! steps = 30
//! relative_to_ep = true
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{EnsembleSpec, GridSpec, OrderSettings, RevivalSettings};
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::presets;
use crate::ratio::PortraitSpec;

pub const DEFAULT_MODEL: &str = "hermitian";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Initial oscillator amplitudes `[[re a1, im a1], [re a2, im a2]]` for
    /// single trajectories; defaults to `a1 = a2 = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<[[f64; 2]; 2]>,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<OrderSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portrait: Option<PortraitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<RevivalSettings>,
}

impl RunConfig {
    pub fn from_system(system: SystemConfig) -> Self {
        Self {
            model: None,
            initial: None,
            system,
            ensemble: None,
            analysis: None,
            sweep: None,
            portrait: None,
            diagnostics: None,
        }
    }

    pub fn model_name(&self) -> &str {
        self.model.as_deref().unwrap_or(DEFAULT_MODEL)
    }

    pub fn initial_pair(&self) -> [Complex64; 2] {
        let [a, b] = self.initial.unwrap_or([[1.0, 0.0], [1.0, 0.0]]);
        [Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1])]
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if let Some(init) = &self.initial {
            let v = self.initial_pair();
            if init.iter().flatten().any(|x| !x.is_finite()) || v[0].norm_sqr() + v[1].norm_sqr() == 0.0 {
                return Err(Error::config("initial", "amplitudes must be finite and not all zero"));
            }
        }
        if let Some(e) = &self.ensemble {
            e.validate()?;
        }
        if let Some(a) = &self.analysis {
            a.validate()?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if let Some(p) = &self.portrait {
            p.validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Single-line JSON of the resolved configuration, for output headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("run config serializes")
    }
}

/// Where a configuration comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigSource<'a> {
    File(&'a Path),
    Preset(&'a str),
}

pub fn load_config(source: ConfigSource<'_>) -> Result<RunConfig> {
    match source {
        ConfigSource::File(path) => {
            let text = std::fs::read_to_string(path)?;
            RunConfig::from_toml(&text, &path.display().to_string())
        }
        ConfigSource::Preset(name) => {
            let cfg = presets::run(name)?;
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

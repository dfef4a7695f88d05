//! Config file layer. Files are TOML restricted to flat key paths like
//! `drive.omega_p_mhz = 6.48`; every frequency-like key carries an `_mhz`
//! suffix and is multiplied by 2*pi on load. Unknown keys are a hard error,
//! so a typo can never silently fall back to a default.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::model::{
    CellParams, DecayParams, DopplerParams, DriveParams, LevelScheme, MeanFieldParams,
    ModelConfig, RydbergCount, LEVEL_LABELS,
};
use crate::units::{mhz_to_rad_per_us, rad_per_us_to_mhz};

pub use crate::model::ModelConfig as Resolved;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// On-disk form, plain MHz everywhere. This struct is the snapshot embedded
/// in run manifests; keeping it separate from the rad/us working form makes
/// replay bit-exact (the same decimal text is parsed the same way twice).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub levels: RawLevels,
    pub drive: RawDrive,
    pub decay: RawDecay,
    pub mean_field: RawMeanField,
    pub doppler: RawDoppler,
    pub cell: RawCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawLevels {
    pub probe_wavelength_nm: f64,
    pub coupling_wavelength_nm: f64,
    pub probe_direction: i8,
    pub coupling_direction: i8,
}

impl Default for RawLevels {
    fn default() -> Self {
        let s = LevelScheme::default();
        Self {
            probe_wavelength_nm: s.probe_wavelength_nm,
            coupling_wavelength_nm: s.coupling_wavelength_nm,
            probe_direction: s.probe_direction,
            coupling_direction: s.coupling_direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawDrive {
    pub omega_p_mhz: f64,
    pub omega_c_mhz: f64,
    pub omega_mw_mhz: f64,
    pub delta_p_mhz: f64,
    pub delta_c_mhz: f64,
    pub delta_mw_mhz: f64,
}

impl Default for RawDrive {
    fn default() -> Self {
        Self {
            omega_p_mhz: 0.0,
            omega_c_mhz: 0.0,
            omega_mw_mhz: 0.0,
            delta_p_mhz: 0.0,
            delta_c_mhz: 0.0,
            delta_mw_mhz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawDecay {
    pub gamma_i_mhz: f64,
    pub gamma_r1_mhz: f64,
    pub gamma_r2_mhz: f64,
    pub deph_gi_mhz: f64,
    pub deph_gr1_mhz: f64,
    pub deph_gr2_mhz: f64,
}

impl Default for RawDecay {
    fn default() -> Self {
        Self {
            gamma_i_mhz: 5.2,
            gamma_r1_mhz: 0.01,
            gamma_r2_mhz: 0.01,
            deph_gi_mhz: 0.1,
            deph_gr1_mhz: 0.1,
            deph_gr2_mhz: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawMeanField {
    pub shift_mhz: f64,
    pub broadening_mhz: f64,
    /// "r1" or "r1+r2".
    pub count: String,
}

impl Default for RawMeanField {
    fn default() -> Self {
        Self {
            shift_mhz: 0.0,
            broadening_mhz: 0.0,
            count: "r1+r2".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawDoppler {
    pub enabled: bool,
    pub most_probable_speed_m_per_s: f64,
    pub velocity_classes: usize,
    pub cutoff: f64,
}

impl Default for RawDoppler {
    fn default() -> Self {
        let d = DopplerParams::default();
        Self {
            enabled: d.enabled,
            most_probable_speed_m_per_s: d.most_probable_speed,
            velocity_classes: d.classes,
            cutoff: d.cutoff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawCell {
    pub optical_depth: f64,
}

impl Default for RawCell {
    fn default() -> Self {
        Self { optical_depth: 2.0 }
    }
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RawConfig serializes")
    }

    /// Convert to the rad/us working form, validating every field.
    pub fn resolve(&self) -> Result<ModelConfig, ConfigError> {
        let inv = |msg: String| ConfigError::Invalid(msg);
        let nonneg = |name: &str, v: f64| -> Result<f64, ConfigError> {
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(inv(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        let finite = |name: &str, v: f64| -> Result<f64, ConfigError> {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(inv(format!("{name} must be finite, got {v}")))
            }
        };

        if self.levels.probe_wavelength_nm <= 0.0 || self.levels.coupling_wavelength_nm <= 0.0 {
            return Err(inv("wavelengths must be positive".into()));
        }
        for (name, s) in [
            ("levels.probe_direction", self.levels.probe_direction),
            ("levels.coupling_direction", self.levels.coupling_direction),
        ] {
            if s != 1 && s != -1 {
                return Err(inv(format!("{name} must be +1 or -1, got {s}")));
            }
        }

        let w = mhz_to_rad_per_us;
        let drive = DriveParams {
            omega_p: w(nonneg("drive.omega_p_mhz", self.drive.omega_p_mhz)?),
            omega_c: w(nonneg("drive.omega_c_mhz", self.drive.omega_c_mhz)?),
            omega_mw: w(nonneg("drive.omega_mw_mhz", self.drive.omega_mw_mhz)?),
            delta_p: w(finite("drive.delta_p_mhz", self.drive.delta_p_mhz)?),
            delta_c: w(finite("drive.delta_c_mhz", self.drive.delta_c_mhz)?),
            delta_mw: w(finite("drive.delta_mw_mhz", self.drive.delta_mw_mhz)?),
        };
        let decay = DecayParams {
            gamma_i: w(nonneg("decay.gamma_i_mhz", self.decay.gamma_i_mhz)?),
            gamma_r1: w(nonneg("decay.gamma_r1_mhz", self.decay.gamma_r1_mhz)?),
            gamma_r2: w(nonneg("decay.gamma_r2_mhz", self.decay.gamma_r2_mhz)?),
            deph_gi: w(nonneg("decay.deph_gi_mhz", self.decay.deph_gi_mhz)?),
            deph_gr1: w(nonneg("decay.deph_gr1_mhz", self.decay.deph_gr1_mhz)?),
            deph_gr2: w(nonneg("decay.deph_gr2_mhz", self.decay.deph_gr2_mhz)?),
        };
        // Drive phase noise accumulates up the ladder, so the named coherence
        // rates must be nondecreasing for the dephasing generator to stay
        // completely positive (density matrices keep nonnegative eigenvalues).
        if self.decay.deph_gr1_mhz < self.decay.deph_gi_mhz
            || self.decay.deph_gr2_mhz < self.decay.deph_gr1_mhz
        {
            return Err(inv(format!(
                "dephasing rates must satisfy deph_gi_mhz <= deph_gr1_mhz <= deph_gr2_mhz \
                 (got {}, {}, {}); each drive field's phase noise also dephases every \
                 coherence higher up the ladder",
                self.decay.deph_gi_mhz, self.decay.deph_gr1_mhz, self.decay.deph_gr2_mhz
            )));
        }
        let count = match self.mean_field.count.as_str() {
            "r1" => RydbergCount::R1Only,
            "r1+r2" => RydbergCount::R1AndR2,
            other => {
                return Err(inv(format!(
                    "mean_field.count must be \"r1\" or \"r1+r2\", got \"{other}\""
                )))
            }
        };
        let mean_field = MeanFieldParams {
            shift: w(finite("mean_field.shift_mhz", self.mean_field.shift_mhz)?),
            broadening: w(nonneg(
                "mean_field.broadening_mhz",
                self.mean_field.broadening_mhz,
            )?),
            count,
        };
        if self.doppler.velocity_classes == 0 || self.doppler.velocity_classes % 2 == 0 {
            return Err(inv(format!(
                "doppler.velocity_classes must be odd and >= 1, got {}",
                self.doppler.velocity_classes
            )));
        }
        let doppler = DopplerParams {
            enabled: self.doppler.enabled,
            most_probable_speed: nonneg(
                "doppler.most_probable_speed_m_per_s",
                self.doppler.most_probable_speed_m_per_s,
            )?,
            classes: self.doppler.velocity_classes,
            cutoff: {
                let c = nonneg("doppler.cutoff", self.doppler.cutoff)?;
                if c == 0.0 && self.doppler.velocity_classes > 1 {
                    return Err(inv("doppler.cutoff must be > 0 with several classes".into()));
                }
                c
            },
        };
        let cell = CellParams {
            optical_depth: nonneg("cell.optical_depth", self.cell.optical_depth)?,
        };
        Ok(ModelConfig {
            scheme: LevelScheme {
                labels: LEVEL_LABELS.map(str::to_owned),
                probe_wavelength_nm: self.levels.probe_wavelength_nm,
                coupling_wavelength_nm: self.levels.coupling_wavelength_nm,
                probe_direction: self.levels.probe_direction,
                coupling_direction: self.levels.coupling_direction,
            },
            drive,
            decay,
            mean_field,
            doppler,
            cell,
        })
    }
}

/// Rebuild the on-disk form from a working config (divides by 2*pi).
pub fn to_raw(config: &ModelConfig) -> RawConfig {
    let f = rad_per_us_to_mhz;
    RawConfig {
        levels: RawLevels {
            probe_wavelength_nm: config.scheme.probe_wavelength_nm,
            coupling_wavelength_nm: config.scheme.coupling_wavelength_nm,
            probe_direction: config.scheme.probe_direction,
            coupling_direction: config.scheme.coupling_direction,
        },
        drive: RawDrive {
            omega_p_mhz: f(config.drive.omega_p),
            omega_c_mhz: f(config.drive.omega_c),
            omega_mw_mhz: f(config.drive.omega_mw),
            delta_p_mhz: f(config.drive.delta_p),
            delta_c_mhz: f(config.drive.delta_c),
            delta_mw_mhz: f(config.drive.delta_mw),
        },
        decay: RawDecay {
            gamma_i_mhz: f(config.decay.gamma_i),
            gamma_r1_mhz: f(config.decay.gamma_r1),
            gamma_r2_mhz: f(config.decay.gamma_r2),
            deph_gi_mhz: f(config.decay.deph_gi),
            deph_gr1_mhz: f(config.decay.deph_gr1),
            deph_gr2_mhz: f(config.decay.deph_gr2),
        },
        mean_field: RawMeanField {
            shift_mhz: f(config.mean_field.shift),
            broadening_mhz: f(config.mean_field.broadening),
            count: match config.mean_field.count {
                RydbergCount::R1Only => "r1".to_owned(),
                RydbergCount::R1AndR2 => "r1+r2".to_owned(),
            },
        },
        doppler: RawDoppler {
            enabled: config.doppler.enabled,
            most_probable_speed_m_per_s: config.doppler.most_probable_speed,
            velocity_classes: config.doppler.classes,
            cutoff: config.doppler.cutoff,
        },
        cell: RawCell {
            optical_depth: config.cell.optical_depth,
        },
    }
}

/// Load and resolve in one step.
pub fn load(path: &Path) -> Result<ModelConfig, ConfigError> {
    RawConfig::load(path)?.resolve()
}

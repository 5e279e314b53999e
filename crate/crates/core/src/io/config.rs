//! Experiment configuration (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exciton::ExcitonParams;
use crate::polariton::{CavityParams, CouplingParams};
use crate::spectrum::{uniform_grid, Emphasis, NoiseModel, SynthOptions, TemperatureTuning};

/// Default configuration, shipped with the crate.
pub const PAPER_DEFAULTS: &str = include_str!("../../fixtures/paper_defaults.toml");

/// `start, start + step, …, stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        uniform_grid(self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Magnetic-field sweep, T.
    pub field: GridSpec,
    /// Fields of the branch-energy table, T.
    pub zeeman: GridSpec,
    /// Temperature sweep, K.
    pub temperature: GridSpec,
    /// Photon energy relative to the cavity line, µeV.
    pub energy_offset: GridSpec,
}

/// Fixed coordinates of the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    /// Field held during temperature sweeps, T.
    pub field: f64,
    /// Temperature held during field sweeps, K.
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSettings {
    pub emphasis: Emphasis,
    /// Instrument resolution, µeV FWHM.
    pub resolution_fwhm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSettings {
    pub enabled: bool,
    pub model: NoiseModel,
    /// Fraction of the map maximum.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    pub max_peaks: usize,
    /// Peak height and prominence floor, fraction of the spectrum maximum.
    pub floor: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Working wavelength for nm ↔ µeV conversion of detunings, nm.
    pub reference_wavelength_nm: f64,
    pub exciton: ExcitonParams<f64>,
    pub cavity: CavityParams<f64>,
    pub coupling: CouplingParams<f64>,
    pub temperature: TemperatureTuning<f64>,
    pub sweep: SweepSettings,
    pub synthesis: SynthesisSettings,
    pub noise: NoiseSettings,
    pub fit: FitSettings,
    pub grids: Grids,
}

fn field_err(field: &str, e: Error) -> Error {
    let msg = match e {
        Error::Domain(m) | Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn paper_defaults() -> Self {
        Self::from_toml(PAPER_DEFAULTS).expect("shipped defaults are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks every contained invariant; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        self.exciton.validate().map_err(|e| field_err("exciton", e))?;
        self.cavity.validate().map_err(|e| field_err("cavity", e))?;
        self.coupling.validate().map_err(|e| field_err("coupling", e))?;
        self.temperature.validate().map_err(|e| field_err("temperature", e))?;
        if !(self.reference_wavelength_nm > 0.0) {
            return Err(Error::Config("reference_wavelength_nm: must be positive".into()));
        }
        if !(self.sweep.field >= 0.0) || !self.sweep.temperature.is_finite() {
            return Err(Error::Config(
                "sweep: field must be non-negative and temperature finite".into(),
            ));
        }
        if !(self.synthesis.resolution_fwhm >= 0.0) {
            return Err(Error::Config("synthesis.resolution_fwhm: must be non-negative".into()));
        }
        if !(self.noise.scale >= 0.0) {
            return Err(Error::Config("noise.scale: must be non-negative".into()));
        }
        if self.fit.max_peaks == 0 || !(self.fit.floor > 0.0 && self.fit.floor < 1.0) {
            return Err(Error::Config(
                "fit: max_peaks must be positive and floor in (0, 1)".into(),
            ));
        }
        for (name, g) in [
            ("grids.field", &self.grids.field),
            ("grids.zeeman", &self.grids.zeeman),
            ("grids.temperature", &self.grids.temperature),
            ("grids.energy_offset", &self.grids.energy_offset),
        ] {
            g.values().map_err(|e| field_err(name, e))?;
        }
        if self.grids.field.start < 0.0 || self.grids.zeeman.start < 0.0 {
            return Err(Error::Config("grids.field / grids.zeeman: fields must be non-negative".into()));
        }
        Ok(())
    }

    /// Absolute photon-energy grid, µeV.
    pub fn energy_grid(&self) -> Result<Vec<f64>> {
        Ok(self
            .grids
            .energy_offset
            .values()?
            .into_iter()
            .map(|d| self.cavity.energy + d)
            .collect())
    }

    pub fn synth_options(&self) -> SynthOptions<f64> {
        SynthOptions {
            emphasis: self.synthesis.emphasis,
            resolution_fwhm: self.synthesis.resolution_fwhm,
        }
    }
}

//! Inverse problems: peaks, branch tracking, anti-crossing detection and
//! parameter estimation.

pub mod anticrossing;
pub mod dipole;
pub mod linalg;
pub mod lm;
pub mod peaks;
pub mod track;
pub mod zeeman;

pub use anticrossing::{fit_anticrossing, fit_anticrossing_peaks, AntiCrossingModel, AntiCrossingOptions};
pub use dipole::{infer_dipole_angle, rabi_vs_field, RabiRow, RabiTable};
pub use peaks::{extract_map_peaks, extract_peaks, Peak, PeakOptions, PeakSet};
pub use track::{detect_anticrossing, detect_anticrossings, track_branches, AntiCrossing, BranchLabel, DetectOptions, Track};
pub use zeeman::{fit_zeeman, ZeemanPoint};

use crate::scalar::Real;

/// Estimated parameters of one fit, in canonical units (µeV, T, K).
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub names: Vec<String>,
    pub values: Vec<T>,
    pub standard_errors: Vec<T>,
    pub residual_norm: T,
    pub converged: bool,
    pub iterations: usize,
    /// Strong-coupling classification of the fitted couplings, when the
    /// model has any.
    pub strong_coupling: Option<bool>,
}

impl<T: Real> FitResult<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn error_of(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.standard_errors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T, T)> + '_ {
        self.names
            .iter()
            .zip(&self.values)
            .zip(&self.standard_errors)
            .map(|((n, v), e)| (n.as_str(), *v, *e))
    }
}

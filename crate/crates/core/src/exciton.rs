//! Exciton spin-branch energies in a Faraday-geometry magnetic field.
//!
//! Branch energies follow `E_m(B) = E0 - m·(γ1·B + δ/2) + γ2·B²` with
//! `m = +1` for the low-energy branch and `m = -1` for the high-energy one,
//! `γ1 = (g_e - g_h)·μB/2` and `δ` an optional zero-field fine-structure
//! offset (zero by default). The diamagnetic term is common to both branches.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::units::bohr_magneton;

/// Exciton angular-momentum branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinBranch {
    /// Low-energy branch (red-shifts with field for `g_diff > 0`).
    PlusOne,
    /// High-energy branch.
    MinusOne,
}

impl SpinBranch {
    pub const BOTH: [SpinBranch; 2] = [SpinBranch::PlusOne, SpinBranch::MinusOne];

    /// Angular momentum `m` as a signed scalar.
    pub fn m<T: Real>(self) -> T {
        match self {
            SpinBranch::PlusOne => T::one(),
            SpinBranch::MinusOne => -T::one(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpinBranch::PlusOne => "plus_one",
            SpinBranch::MinusOne => "minus_one",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ExcitonParams<T> {
    /// Zero-field exciton energy, µeV.
    pub e0: T,
    /// Electron minus hole g-factor.
    pub g_diff: T,
    /// Diamagnetic coefficient, µeV/T².
    pub gamma2: T,
    /// Homogeneous exciton linewidth (FWHM), µeV.
    pub gamma_x: T,
    /// Zero-field fine-structure offset between the branches, µeV.
    #[serde(default = "zero")]
    pub fine_structure: T,
}

fn zero<T: Real>() -> T {
    T::zero()
}

impl<T: Real> ExcitonParams<T> {
    pub fn new(e0: T, g_diff: T, gamma2: T, gamma_x: T) -> Self {
        Self {
            e0,
            g_diff,
            gamma2,
            gamma_x,
            fine_structure: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 > T::zero()) {
            return Err(domain(format!("exciton e0 must be positive, got {}", self.e0)));
        }
        if !(self.gamma2 >= T::zero()) {
            return Err(domain(format!("exciton gamma2 must be non-negative, got {}", self.gamma2)));
        }
        if !(self.gamma_x > T::zero()) {
            return Err(domain(format!("exciton gamma_x must be positive, got {}", self.gamma_x)));
        }
        if !self.g_diff.is_finite() || !self.fine_structure.is_finite() {
            return Err(domain("exciton g_diff and fine_structure must be finite"));
        }
        Ok(())
    }

    /// Same parameters with a different zero-field energy.
    pub fn with_e0(&self, e0: T) -> Self {
        Self { e0, ..*self }
    }
}

/// Linear Zeeman rate `γ1 = g_diff·μB/2` in µeV/T.
pub fn zeeman_rate<T: Real>(params: &ExcitonParams<T>) -> T {
    params.g_diff * bohr_magneton::<T>() / T::lit(2.0)
}

pub fn branch_energy<T: Real>(params: &ExcitonParams<T>, branch: SpinBranch, field: T) -> Result<T> {
    if !(field >= T::zero()) {
        return Err(domain(format!("magnetic field must be non-negative, got {field} T")));
    }
    let half = T::lit(0.5);
    let linear = zeeman_rate(params) * field + half * params.fine_structure;
    Ok(params.e0 - branch.m::<T>() * linear + params.gamma2 * field * field)
}

/// `E_minus_one - E_plus_one`.
pub fn branch_splitting<T: Real>(params: &ExcitonParams<T>, field: T) -> Result<T> {
    let hi = branch_energy(params, SpinBranch::MinusOne, field)?;
    let lo = branch_energy(params, SpinBranch::PlusOne, field)?;
    Ok(hi - lo)
}

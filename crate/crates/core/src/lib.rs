//! Magneto-optical polaritons of a quantum dot in a photonic-crystal cavity:
//! exciton Zeeman branches, non-Hermitian coupled-mode eigenstructure,
//! synthesized spectral sweeps, and the fits that recover couplings from
//! them.
//!
//! Energies are in µeV, fields in T, temperatures in K, wavelengths in nm.
//! The models are generic over the float type; the aliases below fix it
//! to `f64`.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod exciton;
pub mod fit;
pub mod io;
pub mod polariton;
pub mod scalar;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
pub use exciton::{branch_energy, branch_splitting, SpinBranch};
pub use fit::{
    detect_anticrossing, detect_anticrossings, extract_peaks, fit_anticrossing, fit_zeeman, infer_dipole_angle,
    rabi_vs_field, AntiCrossingModel, BranchLabel,
};
pub use io::ExperimentConfig;
pub use polariton::{g_from_splitting, rabi_splitting, resonance_field};
pub use scalar::Real;
pub use spectrum::{sweep_magnetic, sweep_temperature, SweepAxis};

pub type Exciton = exciton::ExcitonParams<f64>;
pub type Cavity = polariton::CavityParams<f64>;
pub type Coupling = polariton::CouplingParams<f64>;
pub type Mode = polariton::ComplexMode<f64>;
pub type Tuning = spectrum::TemperatureTuning<f64>;
pub type Spectrum = spectrum::Spectrum<f64>;
pub type SweepMap = spectrum::SweepMap<f64>;
pub type Peak = fit::Peak<f64>;
pub type AntiCrossing = fit::AntiCrossing<f64>;
pub type FitResult = fit::FitResult<f64>;
pub type ZeemanPoint = fit::ZeemanPoint<f64>;
pub type AntiCrossingOptions = fit::AntiCrossingOptions<f64>;

//! Photoluminescence spectra and tuning sweeps synthesized from the
//! coupled-mode eigenstructure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exciton::{branch_energy, ExcitonParams, SpinBranch};
use crate::polariton::{
    cavity_linewidth, polariton_modes_2x2, polariton_modes_3x3, CavityParams, ComplexMode, CouplingParams,
};
use crate::scalar::Real;

/// Intensity versus photon energy (µeV), on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub energies: Vec<T>,
    pub intensities: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(energies: Vec<T>, intensities: Vec<T>) -> Result<Self> {
        let s = Self { energies, intensities };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.energies)?;
        if self.energies.len() != self.intensities.len() {
            return Err(domain("energy grid and intensities differ in length"));
        }
        if self.intensities.iter().any(|i| !(*i >= T::zero())) {
            return Err(domain("intensities must be non-negative"));
        }
        Ok(())
    }

    pub fn max_intensity(&self) -> T {
        self.intensities.iter().copied().fold(T::zero(), T::max)
    }
}

pub(crate) fn validate_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(domain("grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(domain("grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// `start, start + step, …` up to and including `stop` (within 1e-9 steps).
pub fn uniform_grid<T: Real>(start: T, stop: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) {
        return Err(domain(format!("grid step must be positive, got {step}")));
    }
    if !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(domain(format!("empty grid: start {start} > stop {stop}")));
    }
    let n = ((stop - start) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    Ok((0..n).map(|i| start + step * T::from_usize_lossy(i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Tuning values in T.
    MagneticField,
    /// Tuning values in K.
    Temperature,
}

/// Stack of spectra sharing one energy grid, one per tuning value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMap<T> {
    pub axis: SweepAxis,
    pub tuning: Vec<T>,
    pub energies: Vec<T>,
    /// `frames[i]` holds the intensities at `tuning[i]`.
    pub frames: Vec<Vec<T>>,
}

impl<T: Real> SweepMap<T> {
    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.energies)?;
        if self.tuning.is_empty() {
            return Err(domain("sweep has no frames"));
        }
        let increasing = self.tuning.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.tuning.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(domain("tuning axis must be strictly monotonic"));
        }
        if self.frames.len() != self.tuning.len() {
            return Err(domain("frame count differs from tuning axis length"));
        }
        for f in &self.frames {
            if f.len() != self.energies.len() {
                return Err(domain("frame length differs from the energy grid"));
            }
            if f.iter().any(|i| !(*i >= T::zero())) {
                return Err(domain("intensities must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tuning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuning.is_empty()
    }

    pub fn frame(&self, i: usize) -> Spectrum<T> {
        Spectrum {
            energies: self.energies.clone(),
            intensities: self.frames[i].clone(),
        }
    }

    pub fn max_intensity(&self) -> T {
        self.frames
            .iter()
            .flat_map(|f| f.iter().copied())
            .fold(T::zero(), T::max)
    }

    /// Frames whose tuning value lies in `[lo, hi]`.
    pub fn window(&self, lo: T, hi: T) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.tuning[i] >= lo && self.tuning[i] <= hi)
            .collect();
        if keep.is_empty() {
            return Err(domain(format!("window [{lo}, {hi}] selects no frames")));
        }
        Ok(Self {
            axis: self.axis,
            tuning: keep.iter().map(|&i| self.tuning[i]).collect(),
            energies: self.energies.clone(),
            frames: keep.iter().map(|&i| self.frames[i].clone()).collect(),
        })
    }

    /// Uniformly rescaled intensities.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(|&x| x * factor).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Linear (optionally quadratic) temperature shift of the zero-field
/// exciton energy; positive `slope` red-shifts the line as T increases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct TemperatureTuning<T> {
    /// Reference temperature, K.
    pub t_ref: T,
    /// Zero-field exciton energy at `t_ref`, µeV.
    pub e_ref: T,
    /// Red-shift rate, µeV/K.
    pub slope: T,
    /// Optional curvature, µeV/K², off by default.
    #[serde(default = "zero")]
    pub quadratic: T,
}

fn zero<T: Real>() -> T {
    T::zero()
}

impl<T: Real> TemperatureTuning<T> {
    pub fn energy_at(&self, temperature: T) -> T {
        let dt = temperature - self.t_ref;
        self.e_ref - self.slope * dt - self.quadratic * dt * dt
    }

    /// Temperature at which the zero-field energy equals `energy`
    /// (linear model only).
    pub fn temperature_for(&self, energy: T) -> Result<T> {
        if self.quadratic != T::zero() {
            return Err(domain("temperature inversion needs the linear model"));
        }
        if self.slope == T::zero() {
            return Err(domain("temperature tuning slope is zero"));
        }
        Ok(self.t_ref + (self.e_ref - energy) / self.slope)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope >= T::zero()) {
            return Err(domain("temperature slope must be non-negative (red shift with T)"));
        }
        if !(self.e_ref > T::zero()) || !self.t_ref.is_finite() || !self.quadratic.is_finite() {
            return Err(domain("temperature tuning needs a positive e_ref and finite t_ref"));
        }
        Ok(())
    }
}

/// Which basis component sets the brightness of each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emphasis {
    /// Emission detected through the cavity channel.
    #[default]
    CavityWeighted,
    ExcitonWeighted,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions<T> {
    pub emphasis: Emphasis,
    /// Instrument resolution, µeV FWHM. Narrower lines are broadened to it.
    pub resolution_fwhm: T,
}

pub fn lorentzian<T: Real>(energy: T, center: T, fwhm: T, amplitude: T) -> T {
    let hw = fwhm / T::lit(2.0);
    let d = energy - center;
    amplitude * hw * hw / (d * d + hw * hw)
}

/// Sum of one Lorentzian per mode, centred at the mode energy with
/// FWHM `max(2·half_linewidth, resolution)` and peak height equal to the
/// selected weight squared.
pub fn synth_spectrum<T: Real>(modes: &[ComplexMode<T>], grid: &[T], opts: &SynthOptions<T>) -> Result<Spectrum<T>> {
    if modes.is_empty() {
        return Err(domain("no modes to synthesize"));
    }
    validate_grid(grid)?;
    let lines: Vec<(T, T, T)> = modes
        .iter()
        .map(|m| {
            let fwhm = m.fwhm().max(opts.resolution_fwhm);
            let amplitude = match opts.emphasis {
                Emphasis::CavityWeighted => m.cavity_weight_sq(),
                Emphasis::ExcitonWeighted => m.exciton_weight_sq(),
                Emphasis::Equal => T::one(),
            };
            (m.energy, fwhm, amplitude)
        })
        .collect();
    if lines.iter().any(|(_, fwhm, _)| !(*fwhm > T::zero())) {
        return Err(domain("zero-width mode with no resolution floor"));
    }
    let intensities = grid
        .iter()
        .map(|&e| {
            lines
                .iter()
                .map(|&(c, w, a)| lorentzian(e, c, w, a))
                .sum::<T>()
                .max(T::zero())
        })
        .collect();
    Ok(Spectrum {
        energies: grid.to_vec(),
        intensities,
    })
}

/// Coupled modes of the exciton-cavity system at one field value.
///
/// With zero field and no fine structure the two spin branches are degenerate
/// and the exciton is a single linear dipole coupled with `g0` (two-mode
/// model); otherwise both branches couple through `g_plus`, `g_minus`
/// (three-mode V-system).
pub fn modes_at_field<T: Real>(
    exc: &ExcitonParams<T>,
    cav: &CavityParams<T>,
    cpl: &CouplingParams<T>,
    field: T,
) -> Result<Vec<ComplexMode<T>>> {
    let gamma_c = cavity_linewidth(cav);
    if field == T::zero() && exc.fine_structure == T::zero() {
        return Ok(polariton_modes_2x2(exc.e0, exc.gamma_x, cav.energy, gamma_c, cpl.g0).to_vec());
    }
    let e_plus = branch_energy(exc, SpinBranch::PlusOne, field)?;
    let e_minus = branch_energy(exc, SpinBranch::MinusOne, field)?;
    Ok(polariton_modes_3x3(
        e_plus,
        e_minus,
        exc.gamma_x,
        cav.energy,
        gamma_c,
        cpl.branch(SpinBranch::PlusOne)?,
        cpl.branch(SpinBranch::MinusOne)?,
    )
    .to_vec())
}

fn check_inputs<T: Real>(exc: &ExcitonParams<T>, cav: &CavityParams<T>, cpl: &CouplingParams<T>) -> Result<()> {
    exc.validate()?;
    cav.validate()?;
    cpl.validate()
}

pub fn sweep_magnetic<T: Real>(
    exc: &ExcitonParams<T>,
    cav: &CavityParams<T>,
    cpl: &CouplingParams<T>,
    fields: &[T],
    energies: &[T],
    opts: &SynthOptions<T>,
) -> Result<SweepMap<T>> {
    check_inputs(exc, cav, cpl)?;
    validate_grid(fields)?;
    validate_grid(energies)?;
    let frames = fields
        .par_iter()
        .map(|&b| {
            let modes = modes_at_field(exc, cav, cpl, b)?;
            Ok(synth_spectrum(&modes, energies, opts)?.intensities)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepMap {
        axis: SweepAxis::MagneticField,
        tuning: fields.to_vec(),
        energies: energies.to_vec(),
        frames,
    })
}

/// Temperature sweep at a fixed field. `exc.e0` is replaced by the
/// temperature-dependent zero-field energy of `tuning`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_temperature<T: Real>(
    exc: &ExcitonParams<T>,
    tuning: &TemperatureTuning<T>,
    cav: &CavityParams<T>,
    cpl: &CouplingParams<T>,
    temperatures: &[T],
    energies: &[T],
    field: T,
    opts: &SynthOptions<T>,
) -> Result<SweepMap<T>> {
    check_inputs(exc, cav, cpl)?;
    tuning.validate()?;
    validate_grid(temperatures)?;
    validate_grid(energies)?;
    let frames = temperatures
        .par_iter()
        .map(|&t| {
            let at_t = exc.with_e0(tuning.energy_at(t));
            let modes = modes_at_field(&at_t, cav, cpl, field)?;
            Ok(synth_spectrum(&modes, energies, opts)?.intensities)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepMap {
        axis: SweepAxis::Temperature,
        tuning: temperatures.to_vec(),
        energies: energies.to_vec(),
        frames,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Additive white noise with σ = scale × map maximum.
    #[default]
    Gaussian,
    /// Counting noise, σ = scale × sqrt(I × map maximum); equals the
    /// Gaussian σ at the brightest point.
    Shot,
}

/// Noisy copy of `map`, reproducible from `seed`. Each frame draws from its
/// own ChaCha stream so the result does not depend on evaluation order.
pub fn add_noise<T: Real>(map: &SweepMap<T>, model: NoiseModel, scale: T, seed: u64) -> Result<SweepMap<T>> {
    if !(scale >= T::zero()) {
        return Err(domain(format!("noise scale must be non-negative, got {scale}")));
    }
    if scale == T::zero() {
        return Ok(map.clone());
    }
    let peak = map.max_intensity();
    let unit = Normal::new(0.0f64, 1.0).expect("unit normal");
    let frames = map
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, frame)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            frame
                .iter()
                .map(|&x| {
                    let sigma = match model {
                        NoiseModel::Gaussian => scale * peak,
                        NoiseModel::Shot => scale * (x * peak).sqrt(),
                    };
                    (x + sigma * T::lit(unit.sample(&mut rng))).max(T::zero())
                })
                .collect()
        })
        .collect();
    Ok(SweepMap {
        frames,
        ..map.clone()
    })
}

/// Indices of strict interior local maxima above `floor × max`.
pub fn local_maxima<T: Real>(intensities: &[T], floor: T) -> Vec<usize> {
    let max = intensities.iter().copied().fold(T::zero(), T::max);
    let threshold = floor * max;
    let n = intensities.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let y = intensities[i];
        if y > intensities[i - 1] && y >= threshold && max > T::zero() {
            // walk across a flat top
            let mut j = i;
            while j + 1 < n && intensities[j + 1] == y {
                j += 1;
            }
            if j + 1 < n && intensities[j + 1] < y {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

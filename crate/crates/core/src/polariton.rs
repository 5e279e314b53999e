//! Exciton-cavity coupled-mode model.
//!
//! Loss enters as an imaginary diagonal `-iγ/2` (γ = FWHM), coupling as a
//! real symmetric off-diagonal `g`. The resulting complex eigenvalues give
//! polariton energies (real part) and half-linewidths (minus imaginary part).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::eigen::{eig2, eig3, Eigenpair, C};
use crate::error::{domain, Error, Result};
use crate::exciton::{zeeman_rate, ExcitonParams, SpinBranch};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams<T> {
    /// Cavity mode energy, µeV.
    pub energy: T,
    /// Quality factor.
    pub q: T,
}

impl<T: Real> CavityParams<T> {
    pub fn new(energy: T, q: T) -> Self {
        Self { energy, q }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy > T::zero()) {
            return Err(domain(format!("cavity energy must be positive, got {}", self.energy)));
        }
        if !(self.q > T::zero()) {
            return Err(domain(format!("cavity q must be positive, got {}", self.q)));
        }
        Ok(())
    }

    pub fn linewidth(&self) -> T {
        cavity_linewidth(self)
    }
}

/// Cavity FWHM `E_c / Q` in µeV.
pub fn cavity_linewidth<T: Real>(cav: &CavityParams<T>) -> T {
    cav.energy / cav.q
}

/// Exciton-cavity couplings.
///
/// `g0` is the zero-field coupling of the (linearly polarized) exciton dipole
/// oriented at `theta` from the cavity polarization axis. The high-field
/// circular-state couplings are either given explicitly or derived through
/// [`reduced_coupling`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CouplingParams<T> {
    pub g0: T,
    #[serde(default = "zero")]
    pub theta: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_plus: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_minus: Option<T>,
}

fn zero<T: Real>() -> T {
    T::zero()
}

impl<T: Real> CouplingParams<T> {
    /// Couplings derived from `g0` and the dipole angle.
    pub fn derived(g0: T, theta: T) -> Self {
        Self {
            g0,
            theta,
            g_plus: None,
            g_minus: None,
        }
    }

    pub fn explicit(g0: T, g_plus: T, g_minus: T) -> Self {
        Self {
            g0,
            theta: T::zero(),
            g_plus: Some(g_plus),
            g_minus: Some(g_minus),
        }
    }

    pub fn uncoupled() -> Self {
        Self::explicit(T::zero(), T::zero(), T::zero())
    }

    pub fn branch(&self, branch: SpinBranch) -> Result<T> {
        let given = match branch {
            SpinBranch::PlusOne => self.g_plus,
            SpinBranch::MinusOne => self.g_minus,
        };
        match given {
            Some(g) => Ok(g),
            None => reduced_coupling(self.g0, self.theta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![self.g0];
        all.extend(self.g_plus);
        all.extend(self.g_minus);
        if all.iter().any(|g| !(*g >= T::zero())) {
            return Err(domain("couplings must be non-negative"));
        }
        if self.g_plus.is_none() || self.g_minus.is_none() {
            self.branch(SpinBranch::PlusOne)?;
        }
        Ok(())
    }
}

/// Normalized basis-state amplitudes of a mode.
///
/// Entries are ordered as the matrix basis: excitons first, cavity last.
/// A single-exciton model has two entries, the V-system three.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMode<T> {
    pub energy: T,
    pub half_linewidth: T,
    pub weights: Vec<T>,
}

impl<T: Real> ComplexMode<T> {
    fn from_pair<const N: usize>(pair: &Eigenpair<T, N>) -> Self {
        Self {
            energy: pair.value.re,
            half_linewidth: -pair.value.im,
            weights: pair.vector.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn eigenvalue(&self) -> Complex<T> {
        Complex::new(self.energy, -self.half_linewidth)
    }

    pub fn fwhm(&self) -> T {
        self.half_linewidth * T::lit(2.0)
    }

    pub fn cavity_weight_sq(&self) -> T {
        let w = *self.weights.last().expect("at least one basis state");
        w * w
    }

    pub fn exciton_weight_sq(&self) -> T {
        let n = self.weights.len();
        self.weights[..n - 1].iter().map(|w| *w * *w).sum()
    }
}

/// Vacuum Rabi splitting classification from the coupled-mode radicand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RabiSplitting<T> {
    /// `g > |γc - γx|/4`: two resolvable polaritons with this gap.
    Strong(T),
    /// Radicand `g² - (γc-γx)²/16` is zero or negative; no real splitting.
    Weak { radicand: T },
}

impl<T: Real> RabiSplitting<T> {
    pub fn is_strong(&self) -> bool {
        matches!(self, RabiSplitting::Strong(_))
    }

    pub fn value(&self) -> Option<T> {
        match self {
            RabiSplitting::Strong(v) => Some(*v),
            RabiSplitting::Weak { .. } => None,
        }
    }

    /// Splitting, with zero in the weak regime.
    pub fn value_or_zero(&self) -> T {
        self.value().unwrap_or_else(T::zero)
    }
}

fn loss_term<T: Real>(gamma_c: T, gamma_x: T) -> T {
    (gamma_c - gamma_x) / T::lit(4.0)
}

/// On-resonance splitting `2·sqrt(g² - (γc-γx)²/16)`.
pub fn rabi_splitting<T: Real>(g: T, gamma_c: T, gamma_x: T) -> Result<RabiSplitting<T>> {
    if !(g >= T::zero() && gamma_c >= T::zero() && gamma_x >= T::zero()) {
        return Err(domain("coupling and linewidths must be non-negative"));
    }
    let loss = loss_term(gamma_c, gamma_x);
    let radicand = g * g - loss * loss;
    if radicand > T::zero() {
        Ok(RabiSplitting::Strong(T::lit(2.0) * radicand.sqrt()))
    } else {
        Ok(RabiSplitting::Weak { radicand })
    }
}

pub fn is_strong_coupling<T: Real>(g: T, gamma_c: T, gamma_x: T) -> bool {
    g > loss_term(gamma_c, gamma_x).abs()
}

/// Coupling recovered from a measured on-resonance splitting,
/// `sqrt((ΔE/2)² + ((γc-γx)/4)²)`.
pub fn g_from_splitting<T: Real>(delta_e: T, gamma_c: T, gamma_x: T) -> Result<T> {
    if !(delta_e >= T::zero()) {
        return Err(domain(format!("splitting must be non-negative, got {delta_e}")));
    }
    let half = delta_e / T::lit(2.0);
    let loss = loss_term(gamma_c, gamma_x);
    Ok((half * half + loss * loss).sqrt())
}

fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

/// Coupled-mode matrix for one exciton and one cavity mode.
pub fn matrix_2x2<T: Real>(ex: T, gamma_x: T, ec: T, gamma_c: T, g: T) -> [[C<T>; 2]; 2] {
    let half = T::lit(0.5);
    let z = T::zero();
    [[c(ex, -gamma_x * half), c(g, z)], [c(g, z), c(ec, -gamma_c * half)]]
}

/// V-system matrix: two exciton branches sharing one cavity mode, no direct
/// exciton-exciton coupling.
pub fn matrix_3x3<T: Real>(
    e_plus: T,
    e_minus: T,
    gamma_x: T,
    ec: T,
    gamma_c: T,
    g_plus: T,
    g_minus: T,
) -> [[C<T>; 3]; 3] {
    let half = T::lit(0.5);
    let z = T::zero();
    [
        [c(e_plus, -gamma_x * half), c(z, z), c(g_plus, z)],
        [c(z, z), c(e_minus, -gamma_x * half), c(g_minus, z)],
        [c(g_plus, z), c(g_minus, z), c(ec, -gamma_c * half)],
    ]
}

pub fn polariton_modes_2x2<T: Real>(ex: T, gamma_x: T, ec: T, gamma_c: T, g: T) -> [ComplexMode<T>; 2] {
    eig2(&matrix_2x2(ex, gamma_x, ec, gamma_c, g)).map(|p| ComplexMode::from_pair(&p))
}

pub fn polariton_modes_3x3<T: Real>(
    e_plus: T,
    e_minus: T,
    gamma_x: T,
    ec: T,
    gamma_c: T,
    g_plus: T,
    g_minus: T,
) -> [ComplexMode<T>; 3] {
    eig3(&matrix_3x3(e_plus, e_minus, gamma_x, ec, gamma_c, g_plus, g_minus)).map(|p| ComplexMode::from_pair(&p))
}

/// Smallest field `B ≥ 0` at which `branch` is degenerate with the cavity line.
///
/// Solves `γ2·B² - m·γ1·B + (E0 - m·δ/2 - Ec) = 0` in closed form.
pub fn resonance_field<T: Real>(exc: &ExcitonParams<T>, branch: SpinBranch, cav: &CavityParams<T>) -> Result<T> {
    let m = branch.m::<T>();
    let half = T::lit(0.5);
    let a = exc.gamma2;
    let b = -m * zeeman_rate(exc);
    let c0 = exc.e0 - m * half * exc.fine_structure - cav.energy;
    let roots: Vec<T> = if a == T::zero() {
        if b == T::zero() {
            if c0 == T::zero() {
                vec![T::zero()]
            } else {
                vec![]
            }
        } else {
            vec![-c0 / b]
        }
    } else {
        let disc = b * b - T::lit(4.0) * a * c0;
        if disc < T::zero() {
            vec![]
        } else {
            // cancellation-free pair of roots
            let sq = disc.sqrt();
            let qq = -half * (b + if b >= T::zero() { sq } else { -sq });
            if qq == T::zero() {
                vec![T::zero()]
            } else {
                vec![qq / a, c0 / qq]
            }
        }
    };
    roots
        .into_iter()
        .filter(|r| r.is_finite() && *r >= T::zero())
        .fold(None, |best: Option<T>, r| Some(best.map_or(r, |b| b.min(r))))
        .ok_or(Error::UnreachableResonance)
}

/// High-field circular-state coupling `g0 / (sqrt(2)·cos θ)` of a linear
/// dipole measured at `g0` with angle `theta` to the cavity axis.
pub fn reduced_coupling<T: Real>(g0: T, theta: T) -> Result<T> {
    let cos = theta.cos();
    // cos(π/2) rounds to ~6e-17, not zero
    if !(cos > T::epsilon()) {
        return Err(domain(format!("dipole angle must satisfy cos θ > 0, got θ = {theta}")));
    }
    Ok(g0 / (T::SQRT_2() * cos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::wavelength_to_energy;

    #[test]
    fn cavity_linewidth_examples() {
        let ec = wavelength_to_energy(931.0f64).unwrap();
        let gc = cavity_linewidth(&CavityParams::new(ec, 9000.0));
        assert!((gc - 148.0).abs() < 0.1, "{gc}");
        assert!((gc - 150.0).abs() / 150.0 < 0.02);
        assert!(cavity_linewidth(&CavityParams::new(ec, 1e12)) < 1e-5);
        assert_eq!(cavity_linewidth(&CavityParams::new(9000.0, 9000.0)), 1.0);
    }

    #[test]
    fn rabi_splitting_examples() {
        let s = rabi_splitting(72.0f64, 150.0, 1.0).unwrap();
        assert!((s.value().unwrap() - 123.0).abs() < 0.5);
        let b = rabi_splitting(149.0f64 / 4.0, 150.0, 1.0).unwrap();
        assert!(!b.is_strong());
        assert_eq!(b.value_or_zero(), 0.0);
        let w = rabi_splitting(30.0f64, 150.0, 1.0).unwrap();
        assert!(matches!(w, RabiSplitting::Weak { radicand } if radicand < 0.0));
        assert!(rabi_splitting(-1.0f64, 150.0, 1.0).is_err());
        assert!(rabi_splitting(1.0f64, -150.0, 1.0).is_err());
    }

    #[test]
    fn g_from_splitting_examples() {
        assert!((g_from_splitting(123.0f64, 150.0, 1.0).unwrap() - 72.0).abs() < 0.5);
        assert!((g_from_splitting(102.0f64, 150.0, 1.0).unwrap() - 63.0).abs() < 0.5);
        assert!((g_from_splitting(94.0f64, 150.0, 1.0).unwrap() - 60.0).abs() < 0.5);
        assert!(g_from_splitting(-1.0f64, 150.0, 1.0).is_err());
    }

    #[test]
    fn two_mode_on_resonance_gap() {
        let e = 1.3317e6;
        let modes = polariton_modes_2x2(e, 1.0, e, 150.0, 72.0f64);
        let gap = modes[1].energy - modes[0].energy;
        let closed = 2.0 * (72.0f64 * 72.0 - (149.0f64 / 4.0).powi(2)).sqrt();
        assert!((gap - closed).abs() < 1e-6);
        assert!((gap - 123.2).abs() < 0.5);
    }

    #[test]
    fn two_mode_uncoupled_is_bare() {
        let modes = polariton_modes_2x2(1000.0f64, 1.0, 1200.0, 150.0, 0.0);
        assert_eq!(modes[0].eigenvalue(), Complex::new(1000.0, -0.5));
        assert_eq!(modes[1].eigenvalue(), Complex::new(1200.0, -75.0));
        assert_eq!(modes[0].cavity_weight_sq(), 0.0);
    }

    #[test]
    fn two_mode_far_detuned() {
        let g = 72.0f64;
        let ec = 1.3317e6;
        let ex = ec + 100.0 * g;
        let modes = polariton_modes_2x2(ex, 1.0, ec, 150.0, g);
        // second-order shift g²/Δ = 0.72 µeV
        let shift = g * g / (100.0 * g);
        assert!((modes[0].energy - (ec - shift)).abs() < 0.01 * shift);
        assert!((modes[1].energy - (ex + shift)).abs() < 0.01 * shift);
        assert!((modes[0].energy - ec).abs() < 0.01 * 100.0 * g);
    }

    #[test]
    fn equal_loss_resonance_weights_equal() {
        let modes = polariton_modes_2x2(0.0f64, 40.0, 0.0, 40.0, 30.0);
        for m in &modes {
            assert!((m.weights[0] - m.weights[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn three_mode_block_reduction() {
        let (ep, em, ec) = (1.0e6 - 80.0, 1.0e6 + 90.0, 1.0e6);
        let three = polariton_modes_3x3(ep, em, 1.0, ec, 148.0, 63.0f64, 0.0);
        let two = polariton_modes_2x2(ep, 1.0, ec, 148.0, 63.0f64);
        let bare = Complex::new(em, -0.5);
        let (dark, rest): (Vec<_>, Vec<_>) = three
            .iter()
            .partition(|m| (m.eigenvalue() - bare).norm() < 1e-9 * 1.0e6);
        assert_eq!(dark.len(), 1);
        for (a, b) in rest.iter().zip(two.iter()) {
            assert!((a.eigenvalue() - b.eigenvalue()).norm() < 1e-9 * 1.0e6);
        }
    }

    #[test]
    fn three_mode_device_scale_trace() {
        let ec = 1.3317e6;
        let modes = polariton_modes_3x3(ec - 84.0, ec + 84.0, 1.0, ec, 148.0, 63.0f64, 60.0);
        assert!(modes[0].energy < modes[1].energy && modes[1].energy < modes[2].energy);
        let trace_re = 3.0 * ec;
        let trace_im = -(1.0 + 148.0) / 2.0 - 0.5;
        let sum: Complex<f64> = modes.iter().map(|m| m.eigenvalue()).sum();
        assert!((sum.re - trace_re).abs() < 1e-10 * trace_re);
        assert!((sum.im - trace_im).abs() < 1e-10 * trace_re);
    }

    #[test]
    fn resonance_field_examples() {
        let ec = 1.3317e6f64;
        let cav = CavityParams::new(ec, 9000.0);
        let blue = ExcitonParams::new(ec + 172.0, 2.9, 6.0, 1.0);
        // roots of 6B² - 83.9315B + 172 = 0: 2.4939 and 11.4947
        let b = resonance_field(&blue, SpinBranch::PlusOne, &cav).unwrap();
        assert!((b - 2.4939).abs() < 1e-3, "{b}");
        assert!((b - 2.1).abs() / 2.1 < 0.25);
        let red = ExcitonParams::new(ec - 315.0, 2.9, 6.0, 1.0);
        let b = resonance_field(&red, SpinBranch::MinusOne, &cav).unwrap();
        assert!((b - 3.0765).abs() < 1e-3, "{b}");
        assert!((b - 2.7).abs() / 2.7 < 0.25);
        let tuned = ExcitonParams::new(ec, 2.9, 6.0, 1.0);
        assert_eq!(resonance_field(&tuned, SpinBranch::PlusOne, &cav).unwrap(), 0.0);
    }

    #[test]
    fn resonance_field_unreachable() {
        let ec = 1.3317e6f64;
        let cav = CavityParams::new(ec, 9000.0);
        // the +1 branch cannot reach a cavity far below it (minimum of the parabola is above)
        let exc = ExcitonParams::new(ec + 1000.0, 2.9, 6.0, 1.0);
        assert!(matches!(
            resonance_field(&exc, SpinBranch::PlusOne, &cav),
            Err(Error::UnreachableResonance)
        ));
        // the -1 branch only moves up
        let exc = ExcitonParams::new(ec + 10.0, 2.9, 6.0, 1.0);
        assert!(resonance_field(&exc, SpinBranch::MinusOne, &cav).is_err());
        // linear case with no diamagnetic term
        let exc = ExcitonParams::new(ec + 2.9 * 57.883818 / 2.0, 2.9, 0.0, 1.0);
        let b = resonance_field(&exc, SpinBranch::PlusOne, &cav).unwrap();
        assert!((b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reduced_coupling_examples() {
        let g = reduced_coupling(72.0f64, 0.0).unwrap();
        assert!((g - 72.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((1.0 - g / 72.0 - 0.2929).abs() < 1e-4);
        let g = reduced_coupling(72.0f64, core::f64::consts::FRAC_PI_4).unwrap();
        assert!((g - 72.0).abs() < 1e-12);
        assert!(reduced_coupling(72.0f64, core::f64::consts::FRAC_PI_2).is_err());
        assert!(reduced_coupling(72.0f64, 2.0).is_err());
    }

    #[test]
    fn coupling_params_resolution() {
        let d = CouplingParams::derived(72.0f64, 0.0);
        assert!((d.branch(SpinBranch::PlusOne).unwrap() - 50.911).abs() < 1e-3);
        let e = CouplingParams::explicit(72.0f64, 63.0, 60.0);
        assert_eq!(e.branch(SpinBranch::MinusOne).unwrap(), 60.0);
        assert!(CouplingParams::explicit(72.0f64, -1.0, 60.0).validate().is_err());
        assert!(CouplingParams::derived(72.0f64, 2.0).validate().is_err());
    }
}

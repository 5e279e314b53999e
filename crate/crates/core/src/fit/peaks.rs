//! Peak extraction: prominent local maxima refined by a joint
//! multi-Lorentzian least-squares fit.

use rayon::prelude::*;

use crate::fit::linalg::Matrix;
use crate::fit::lm::{minimize, LeastSquaresProblem, LmConfig, LmReport};
use crate::scalar::Real;
use crate::spectrum::{local_maxima, Spectrum, SweepMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub center: T,
    pub fwhm: T,
    pub amplitude: T,
    pub center_uncertainty: T,
    /// False when the Lorentzian refinement failed and the peak carries
    /// grid-level values.
    pub refined: bool,
}

/// Peaks of one spectrum, ordered by center.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet<T> {
    pub peaks: Vec<Peak<T>>,
}

impl<T> Default for PeakSet<T> {
    fn default() -> Self {
        Self { peaks: Vec::new() }
    }
}

impl<T: Real> PeakSet<T> {
    pub fn centers(&self) -> Vec<T> {
        self.peaks.iter().map(|p| p.center).collect()
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions<T> {
    pub max_peaks: usize,
    /// Minimum height and prominence, as a fraction of the spectrum maximum.
    pub floor: T,
}

impl<T: Real> Default for PeakOptions<T> {
    fn default() -> Self {
        Self {
            max_peaks: 4,
            floor: T::lit(0.05),
        }
    }
}

/// Topographic prominence of the maximum at `i`.
fn prominence<T: Real>(y: &[T], i: usize) -> T {
    let h = y[i];
    let mut left_min = h;
    let mut j = i;
    while j > 0 {
        j -= 1;
        if y[j] > h {
            break;
        }
        left_min = left_min.min(y[j]);
    }
    let mut right_min = h;
    let mut j = i;
    while j + 1 < y.len() {
        j += 1;
        if y[j] > h {
            break;
        }
        right_min = right_min.min(y[j]);
    }
    h - left_min.max(right_min)
}

/// Width at half height around `i`, linearly interpolated.
fn half_width_estimate<T: Real>(x: &[T], y: &[T], i: usize) -> Option<T> {
    let half = y[i] / T::lit(2.0);
    let mut l = i;
    while l > 0 && y[l] > half {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < y.len() && y[r] > half {
        r += 1;
    }
    if y[l] > half || y[r] > half {
        return None;
    }
    let interp = |a: usize, b: usize| {
        let (ya, yb) = (y[a], y[b]);
        if yb == ya {
            x[a]
        } else {
            x[a] + (half - ya) * (x[b] - x[a]) / (yb - ya)
        }
    };
    let left = interp(l, l + 1);
    let right = interp(r, r - 1);
    Some(right - left)
}

struct LorentzSum<'a, T> {
    x: &'a [T],
    y: &'a [T],
    n: usize,
}

impl<T: Real> LorentzSum<'_, T> {
    fn eval(p: &[T], e: T) -> T {
        p.chunks(3)
            .map(|c| {
                let hw = c[1] / T::lit(2.0);
                let d = e - c[0];
                c[2] * hw * hw / (d * d + hw * hw)
            })
            .sum()
    }
}

impl<T: Real> LeastSquaresProblem<T> for LorentzSum<'_, T> {
    fn num_params(&self) -> usize {
        3 * self.n
    }

    fn residuals(&self, p: &[T]) -> Vec<T> {
        self.x.iter().zip(self.y).map(|(&e, &y)| Self::eval(p, e) - y).collect()
    }

    fn jacobian(&self, p: &[T]) -> Matrix<T> {
        let mut j = Matrix::zeros(self.x.len(), p.len());
        for (r, &e) in self.x.iter().enumerate() {
            for (k, c) in p.chunks(3).enumerate() {
                let (center, width, amp) = (c[0], c[1], c[2]);
                let hw = width / T::lit(2.0);
                let d = e - center;
                let den = d * d + hw * hw;
                let den2 = den * den;
                j[(r, 3 * k)] = amp * hw * hw * T::lit(2.0) * d / den2;
                j[(r, 3 * k + 1)] = amp * hw * d * d / den2;
                j[(r, 3 * k + 2)] = hw * hw / den;
            }
        }
        j
    }
}

/// Gaussian-equivalent noise level from the median absolute second difference.
fn noise_sigma<T: Real>(y: &[T]) -> T {
    let mut d: Vec<T> = y.windows(3).map(|w| (w[0] - w[1] - w[1] + w[2]).abs()).collect();
    if d.is_empty() {
        return T::zero();
    }
    let mid = d.len() / 2;
    d.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    d[mid] * T::lit(1.4826) / T::lit(6.0).sqrt()
}

/// Centered moving average over `2h + 1` points, shrinking at the edges.
fn smooth<T: Real>(y: &[T], h: usize) -> Vec<T> {
    (0..y.len())
        .map(|i| {
            let (a, b) = (i.saturating_sub(h), (i + h + 1).min(y.len()));
            y[a..b].iter().copied().sum::<T>() / T::from_usize_lossy(b - a)
        })
        .collect()
}

/// Joint Lorentzian fit of the seeds in `p`, restricted to a window of four
/// widths around them.
fn refine<T: Real>(x: &[T], y: &[T], p: &[T]) -> LmReport<T> {
    let widest = p.chunks(3).map(|c| c[1].abs()).fold(T::zero(), T::max);
    let lo_c = p.chunks(3).map(|c| c[0]).fold(T::infinity(), T::min);
    let hi_c = p.chunks(3).map(|c| c[0]).fold(T::neg_infinity(), T::max);
    let lo = x.partition_point(|&e| e < lo_c - widest * T::lit(4.0));
    let hi = x.partition_point(|&e| e <= hi_c + widest * T::lit(4.0)).max(lo + 1);
    let problem = LorentzSum {
        x: &x[lo..hi],
        y: &y[lo..hi],
        n: p.len() / 3,
    };
    minimize(&problem, p, &LmConfig::default())
}

/// Extracts up to `max_peaks` peaks whose height and prominence exceed
/// `floor × max`. An empty or flat spectrum yields an empty set.
pub fn extract_peaks<T: Real>(s: &Spectrum<T>, max_peaks: usize, floor: T) -> PeakSet<T> {
    let (x, y) = (&s.energies, &s.intensities);
    let n = x.len();
    let max = s.max_intensity();
    if n < 3 || !(max > T::zero()) || max_peaks == 0 {
        return PeakSet::default();
    }
    // seeds come from a smoothed copy when the spectrum is visibly noisy
    let sigma = noise_sigma(y);
    let threshold = (floor * max).max(sigma * T::lit(5.0));
    let ys = if sigma > max * T::lit(1e-3) { smooth(y, 5) } else { y.clone() };
    let mut seeds: Vec<usize> = local_maxima(&ys, floor)
        .into_iter()
        .filter(|&i| prominence(&ys, i) >= threshold)
        .collect();
    seeds.sort_by(|&a, &b| ys[b].partial_cmp(&ys[a]).unwrap_or(core::cmp::Ordering::Equal));
    seeds.truncate(max_peaks);
    seeds.sort_unstable();
    if seeds.is_empty() {
        return PeakSet::default();
    }

    let spacing = (x[n - 1] - x[0]) / T::from_usize_lossy(n - 1);
    let mut p0 = Vec::with_capacity(3 * max_peaks);
    for &i in &seeds {
        let w = half_width_estimate(x, &ys, i).unwrap_or(spacing * T::lit(4.0));
        p0.extend([x[i], w.max(spacing), ys[i]]);
    }
    let mut report = refine(x, y, &p0);
    // lines hidden in a shoulder are not local maxima; seed them from the
    // largest positive residual until the fit explains the spectrum
    while report.params.len() < 3 * max_peaks && report.converged() {
        let residual: Vec<T> = x
            .iter()
            .zip(y)
            .map(|(&e, &yi)| yi - LorentzSum::<T>::eval(&report.params, e))
            .collect();
        let (k, r) = residual
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (k, &r)| if r > acc.1 { (k, r) } else { acc });
        if !(r >= threshold) || k == 0 || k + 1 == n {
            break;
        }
        let narrowest = report.params.chunks(3).map(|c| c[1].abs()).fold(T::infinity(), T::min);
        let mut p1 = report.params.clone();
        p1.extend([x[k], narrowest.max(spacing), r]);
        let trial = refine(x, y, &p1);
        if !trial.converged() || trial.residual_norm() >= report.residual_norm() {
            break;
        }
        p0 = p1;
        report = trial;
    }

    let span = (x[0], x[n - 1]);
    let fitted_ok = report.converged()
        && report.params.chunks(3).all(|c| {
            c[0] >= span.0 && c[0] <= span.1 && c[1].abs() > T::zero() && c[2] > T::zero() && c.iter().all(|v| v.is_finite())
        });
    let mut peaks: Vec<Peak<T>> = if fitted_ok {
        report
            .params
            .chunks(3)
            .enumerate()
            .map(|(k, c)| {
                let err = report.standard_errors[3 * k];
                Peak {
                    center: c[0],
                    fwhm: c[1].abs(),
                    amplitude: c[2],
                    center_uncertainty: if err.is_finite() { err } else { spacing },
                    refined: true,
                }
            })
            .collect()
    } else {
        p0.chunks(3)
            .map(|c| Peak {
                center: c[0],
                fwhm: c[1],
                amplitude: c[2],
                center_uncertainty: spacing,
                refined: false,
            })
            .collect()
    };
    peaks.sort_by(|a, b| a.center.partial_cmp(&b.center).unwrap_or(core::cmp::Ordering::Equal));
    PeakSet { peaks }
}

/// Peaks of every frame of a sweep.
pub fn extract_map_peaks<T: Real>(map: &SweepMap<T>, opts: &PeakOptions<T>) -> Vec<PeakSet<T>> {
    map.frames
        .par_iter()
        .map(|f| {
            let s = Spectrum {
                energies: map.energies.clone(),
                intensities: f.clone(),
            };
            extract_peaks(&s, opts.max_peaks, opts.floor)
        })
        .collect()
}

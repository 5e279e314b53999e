//! Coupled-mode fit of an anti-crossing.
//!
//! Residuals are extracted peak centers minus real parts of the model
//! eigenvalues. The exciton is tuned linearly through the cavity line,
//! `Ex(t) = Ec + rate·(t - t0)`, so `t0` is the tuning value at resonance.
//! Peaks are assigned to model modes by an order-preserving matching that is
//! recomputed between least-squares runs until it stops changing.
//!
//! Two models are available: one exciton and one cavity mode, or two spin
//! branches a fixed `split` apart (centred on `Ex(t)`) sharing the cavity.

use crate::eigen::{eig2, eig3, symmetric_eigenvalue_derivative, C};
use crate::error::{Error, Result};
use crate::fit::linalg::Matrix;
use crate::fit::lm::{minimize, LeastSquaresProblem, LmConfig};
use crate::fit::peaks::extract_map_peaks;
use crate::fit::track::{detect_anticrossings, track_branches, AntiCrossing, BranchLabel, DetectOptions};
use crate::fit::FitResult;
use crate::polariton::{g_from_splitting, is_strong_coupling, matrix_2x2, matrix_3x3};
use crate::scalar::Real;
use crate::spectrum::SweepMap;

const MAX_REASSIGN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AntiCrossingModel<T> {
    /// Parameters `g, ec, gamma_c, rate, t0`.
    TwoMode,
    /// Parameters `g_plus, g_minus, ec, gamma_c, rate, t0`; the -1 branch
    /// lies `split` µeV above the +1 branch.
    VSystem { split: T },
}

impl<T: Real> AntiCrossingModel<T> {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            AntiCrossingModel::TwoMode => &["g", "ec", "gamma_c", "rate", "t0"],
            AntiCrossingModel::VSystem { .. } => &["g_plus", "g_minus", "ec", "gamma_c", "rate", "t0"],
        }
    }

    /// Branch energies at tuning `t`, ascending, each with its gradient
    /// with respect to `params`.
    pub fn branches(&self, gamma_x: T, params: &[T], t: T) -> Result<Vec<(T, Vec<T>)>> {
        if params.len() != self.param_names().len() {
            return Err(crate::error::domain(format!(
                "model needs {} parameters, got {}",
                self.param_names().len(),
                params.len()
            )));
        }
        Ok(model_modes(self, gamma_x, params, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiCrossingOptions<T> {
    pub model: AntiCrossingModel<T>,
    /// Exciton linewidth, held fixed.
    pub gamma_x: T,
    /// Starting cavity linewidth; estimated from the peak widths when absent.
    pub gamma_c_init: Option<T>,
    pub detect: DetectOptions<T>,
    pub lm: LmConfig<T>,
}

impl<T: Real> Default for AntiCrossingOptions<T> {
    fn default() -> Self {
        Self {
            model: AntiCrossingModel::TwoMode,
            gamma_x: T::one(),
            gamma_c_init: None,
            detect: DetectOptions::default(),
            lm: LmConfig::default(),
        }
    }
}

/// Real parts of the model eigenvalues at tuning `t` with their gradients
/// with respect to the parameters.
fn model_modes<T: Real>(model: &AntiCrossingModel<T>, gamma_x: T, p: &[T], t: T) -> Vec<(T, Vec<T>)> {
    let zero = C::new(T::zero(), T::zero());
    let one = C::new(T::one(), T::zero());
    let half_i = C::new(T::zero(), -T::lit(0.5));
    match *model {
        AntiCrossingModel::TwoMode => {
            let (g, ec, gc, rate, t0) = (p[0], p[1], p[2], p[3], p[4]);
            let ex = ec + rate * (t - t0);
            let m = matrix_2x2(ex, gamma_x, ec, gc, g);
            let dt = C::new(t - t0, T::zero());
            let d: [[[C<T>; 2]; 2]; 5] = [
                [[zero, one], [one, zero]],
                [[one, zero], [zero, one]],
                [[zero, zero], [zero, half_i]],
                [[dt, zero], [zero, zero]],
                [[C::new(-rate, T::zero()), zero], [zero, zero]],
            ];
            eig2(&m)
                .iter()
                .map(|pair| {
                    let grad = d.iter().map(|dm| symmetric_eigenvalue_derivative(&pair.vector, dm).re).collect();
                    (pair.value.re, grad)
                })
                .collect()
        }
        AntiCrossingModel::VSystem { split } => {
            let (gp, gm, ec, gc, rate, t0) = (p[0], p[1], p[2], p[3], p[4], p[5]);
            let center = ec + rate * (t - t0);
            let half = split / T::lit(2.0);
            let m = matrix_3x3(center - half, center + half, gamma_x, ec, gc, gp, gm);
            let dt = C::new(t - t0, T::zero());
            let dr = C::new(-rate, T::zero());
            let d: [[[C<T>; 3]; 3]; 6] = [
                [[zero, zero, one], [zero, zero, zero], [one, zero, zero]],
                [[zero, zero, zero], [zero, zero, one], [zero, one, zero]],
                [[one, zero, zero], [zero, one, zero], [zero, zero, one]],
                [[zero, zero, zero], [zero, zero, zero], [zero, zero, half_i]],
                [[dt, zero, zero], [zero, dt, zero], [zero, zero, zero]],
                [[dr, zero, zero], [zero, dr, zero], [zero, zero, zero]],
            ];
            eig3(&m)
                .iter()
                .map(|pair| {
                    let grad = d.iter().map(|dm| symmetric_eigenvalue_derivative(&pair.vector, dm).re).collect();
                    (pair.value.re, grad)
                })
                .collect()
        }
    }
}

/// Order-preserving assignment of sorted peaks to sorted mode energies,
/// as many links as possible at the least total distance.
fn assign<T: Real>(peaks: &[T], modes: &[T]) -> Vec<Option<usize>> {
    let (n, m) = (peaks.len(), modes.len());
    let better = |a: (usize, T), b: (usize, T)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    let mut best = vec![vec![(0usize, T::zero()); m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let d = peaks[i] - modes[j];
            let (l, c) = best[i + 1][j + 1];
            let mut cand = (l + 1, c + d * d);
            for alt in [best[i + 1][j], best[i][j + 1]] {
                if better(alt, cand) {
                    cand = alt;
                }
            }
            best[i][j] = cand;
        }
    }
    let mut out = vec![None; n];
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        let d = peaks[i] - modes[j];
        let (l, c) = best[i + 1][j + 1];
        if best[i][j] == (l + 1, c + d * d) {
            out[i] = Some(j);
            i += 1;
            j += 1;
        } else if best[i][j] == best[i + 1][j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

struct Problem<'a, T> {
    model: AntiCrossingModel<T>,
    gamma_x: T,
    tuning: &'a [T],
    peaks: &'a [Vec<T>],
    /// Mode index of each peak, `None` for peaks left out.
    assignment: Vec<Vec<Option<usize>>>,
}

impl<T: Real> Problem<'_, T> {
    fn reassign(&self, p: &[T]) -> Vec<Vec<Option<usize>>> {
        self.tuning
            .iter()
            .zip(self.peaks)
            .map(|(&t, centers)| {
                let modes: Vec<T> = model_modes(&self.model, self.gamma_x, p, t).into_iter().map(|m| m.0).collect();
                assign(centers, &modes)
            })
            .collect()
    }

    fn rows(&self) -> usize {
        self.assignment.iter().flatten().filter(|a| a.is_some()).count()
    }
}

impl<T: Real> LeastSquaresProblem<T> for Problem<'_, T> {
    fn num_params(&self) -> usize {
        self.model.param_names().len()
    }

    fn residuals(&self, p: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows());
        for ((&t, centers), assigned) in self.tuning.iter().zip(self.peaks).zip(&self.assignment) {
            let modes = model_modes(&self.model, self.gamma_x, p, t);
            for (c, a) in centers.iter().zip(assigned) {
                if let Some(j) = a {
                    out.push(modes[*j].0 - *c);
                }
            }
        }
        out
    }

    fn jacobian(&self, p: &[T]) -> Matrix<T> {
        let mut jac = Matrix::zeros(self.rows(), p.len());
        let mut r = 0;
        for ((&t, centers), assigned) in self.tuning.iter().zip(self.peaks).zip(&self.assignment) {
            let modes = model_modes(&self.model, self.gamma_x, p, t);
            for a in assigned.iter().take(centers.len()).flatten() {
                jac.row_mut(r).copy_from_slice(&modes[*a].1);
                r += 1;
            }
        }
        jac
    }
}

/// Maps parameters onto their canonical branch: couplings non-negative and
/// `gamma_c ≥ gamma_x` (the real parts only depend on `|gamma_c - gamma_x|`).
fn canonical<T: Real>(model: &AntiCrossingModel<T>, gamma_x: T, p: &mut [T]) {
    let gc = match model {
        AntiCrossingModel::TwoMode => {
            p[0] = p[0].abs();
            2
        }
        AntiCrossingModel::VSystem { .. } => {
            p[0] = p[0].abs();
            p[1] = p[1].abs();
            3
        }
    };
    if p[gc] < gamma_x {
        p[gc] = T::lit(2.0) * gamma_x - p[gc];
    }
}

/// Fits the model to per-frame peak centers, starting from `init`.
pub fn fit_anticrossing_peaks<T: Real>(
    tuning: &[T],
    peaks: &[Vec<T>],
    init: &[T],
    opts: &AntiCrossingOptions<T>,
) -> Result<FitResult<T>> {
    let names = opts.model.param_names();
    if init.len() != names.len() {
        return Err(crate::error::domain(format!(
            "initial guess has {} values, model needs {}",
            init.len(),
            names.len()
        )));
    }
    if tuning.len() != peaks.len() {
        return Err(crate::error::domain("tuning axis and peak lists differ in length"));
    }
    let mut problem = Problem {
        model: opts.model,
        gamma_x: opts.gamma_x,
        tuning,
        peaks,
        assignment: Vec::new(),
    };
    let mut params = init.to_vec();
    problem.assignment = problem.reassign(&params);
    let mut iterations = 0;
    let mut report = None;
    for _ in 0..MAX_REASSIGN {
        if problem.rows() < names.len() {
            return Err(Error::RankDeficient(format!(
                "{} assigned peaks for {} parameters",
                problem.rows(),
                names.len()
            )));
        }
        let rep = minimize(&problem, &params, &opts.lm);
        iterations += rep.iterations;
        params = rep.params.clone();
        report = Some(rep);
        let next = problem.reassign(&params);
        if next == problem.assignment {
            break;
        }
        problem.assignment = next;
    }
    let rep = report.expect("at least one least-squares run");
    canonical(&opts.model, opts.gamma_x, &mut params);
    let gc = params[names.iter().position(|n| *n == "gamma_c").expect("gamma_c")];
    let strong = match opts.model {
        AntiCrossingModel::TwoMode => is_strong_coupling(params[0], gc, opts.gamma_x),
        AntiCrossingModel::VSystem { .. } => {
            is_strong_coupling(params[0], gc, opts.gamma_x) && is_strong_coupling(params[1], gc, opts.gamma_x)
        }
    };
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        values: params,
        standard_errors: rep.standard_errors.iter().map(|e| e.abs()).collect(),
        residual_norm: rep.residual_norm(),
        converged: rep.converged(),
        iterations,
        strong_coupling: Some(strong),
    })
}

fn initial_gamma_c<T: Real>(opts: &AntiCrossingOptions<T>, mean_fwhm: T) -> T {
    // on resonance each polariton carries half of each linewidth
    opts.gamma_c_init
        .unwrap_or_else(|| (T::lit(2.0) * mean_fwhm - opts.gamma_x).max(opts.gamma_x))
}

/// Starting points derived from the detections. A lone V-system gap whose
/// branch could not be labelled yields one candidate per branch.
fn guess_from_detections<T: Real>(found: &[AntiCrossing<T>], opts: &AntiCrossingOptions<T>) -> Result<Vec<Vec<T>>> {
    let first = &found[0];
    let gc = initial_gamma_c(opts, first.mean_fwhm);
    let g_of = |a: &AntiCrossing<T>| g_from_splitting(a.min_gap, gc, opts.gamma_x);
    match opts.model {
        AntiCrossingModel::TwoMode => {
            let a = found
                .iter()
                .min_by(|a, b| a.min_gap.partial_cmp(&b.min_gap).unwrap_or(core::cmp::Ordering::Equal))
                .expect("non-empty");
            Ok(vec![vec![
                g_of(a)?,
                a.center_energy,
                gc,
                T::lit(2.0) * a.mean_slope,
                a.tuning_at_min,
            ]])
        }
        AntiCrossingModel::VSystem { split } => {
            let plus = found.iter().find(|a| a.branch == BranchLabel::PlusOne);
            let minus = found.iter().find(|a| a.branch == BranchLabel::MinusOne);
            let half = split / T::lit(2.0);
            match (plus, minus) {
                (Some(p), Some(m)) if m.tuning_at_min != p.tuning_at_min => {
                    let rate = -split / (m.tuning_at_min - p.tuning_at_min);
                    Ok(vec![vec![
                        g_of(p)?,
                        g_of(m)?,
                        (p.center_energy + m.center_energy) / T::lit(2.0),
                        gc,
                        rate,
                        (p.tuning_at_min + m.tuning_at_min) / T::lit(2.0),
                    ]])
                }
                _ => {
                    let a = plus.or(minus).unwrap_or(first);
                    let rate = T::lit(2.0) * a.mean_slope;
                    if rate == T::zero() {
                        return Err(Error::NoAntiCrossing("branch pair does not move with tuning".into()));
                    }
                    let g = g_of(a)?;
                    let as_plus = vec![g, g, a.center_energy, gc, rate, a.tuning_at_min - half / rate];
                    let as_minus = vec![g, g, a.center_energy, gc, rate, a.tuning_at_min + half / rate];
                    Ok(match a.branch {
                        BranchLabel::PlusOne => vec![as_plus],
                        BranchLabel::MinusOne => vec![as_minus],
                        _ => vec![as_plus, as_minus],
                    })
                }
            }
        }
    }
}

/// Starting point when no gap minimum is visible (lines crossing without
/// resolvable splitting): the flattest track is the cavity, the steepest
/// the exciton.
fn guess_without_detection<T: Real>(map: &SweepMap<T>, opts: &AntiCrossingOptions<T>) -> Result<Vec<T>> {
    let sets = extract_map_peaks(map, &opts.detect.peaks);
    let tracks = track_branches(&sets);
    let fits: Vec<(T, T, T, T)> = tracks
        .iter()
        .filter(|tr| tr.points.len() >= 3)
        .map(|tr| {
            let n = T::from_usize_lossy(tr.points.len());
            let xs: Vec<T> = tr.points.iter().map(|(f, _)| map.tuning[*f]).collect();
            let ys: Vec<T> = tr.points.iter().map(|(_, p)| p.center).collect();
            let mx = xs.iter().copied().sum::<T>() / n;
            let my = ys.iter().copied().sum::<T>() / n;
            let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
            let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
            let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
            let fwhm = tr.points.iter().map(|(_, p)| p.fwhm).sum::<T>() / n;
            (slope, mx, my, fwhm)
        })
        .collect();
    let by_slope = |a: &&(T, T, T, T), b: &&(T, T, T, T)| {
        a.0.abs().partial_cmp(&b.0.abs()).unwrap_or(core::cmp::Ordering::Equal)
    };
    let (cav, exc) = match (fits.iter().min_by(by_slope), fits.iter().max_by(by_slope)) {
        (Some(c), Some(e)) if e.0 != T::zero() && c != e => (c, e),
        _ => return Err(Error::NoAntiCrossing("fewer than two tracked branches".into())),
    };
    let ec = cav.2;
    let gc = opts.gamma_c_init.unwrap_or(cav.3);
    let rate = exc.0;
    let t0 = exc.1 + (ec - exc.2) / rate;
    let g = (gc - opts.gamma_x).abs() / T::lit(4.0);
    Ok(match opts.model {
        AntiCrossingModel::TwoMode => vec![g, ec, gc, rate, t0],
        AntiCrossingModel::VSystem { .. } => vec![g, g, ec, gc, rate, t0],
    })
}

/// Fits the coupled-mode model to a sweep map. Initial values come from the
/// detected anti-crossing(s): `g` from the minimum gap, `ec` from the
/// energy at the minimum, `t0` from its position and `rate` from the drift
/// of the pair mean.
pub fn fit_anticrossing<T: Real>(map: &SweepMap<T>, opts: &AntiCrossingOptions<T>) -> Result<FitResult<T>> {
    map.validate()?;
    let found = detect_anticrossings(map, &opts.detect)?;
    let inits = if found.is_empty() {
        vec![guess_without_detection(map, opts)?]
    } else {
        guess_from_detections(&found, opts)?
    };
    let sets = extract_map_peaks(map, &opts.detect.peaks);
    let peaks: Vec<Vec<T>> = sets.iter().map(|s| s.centers()).collect();
    let mut best: Option<FitResult<T>> = None;
    let mut last_err = None;
    for init in &inits {
        match fit_anticrossing_peaks(&map.tuning, &peaks, init, opts) {
            Ok(fit) => {
                let better = best.as_ref().map_or(true, |b| {
                    (fit.converged, -fit.residual_norm) > (b.converged, -b.residual_norm)
                });
                if better {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one starting point"))
}

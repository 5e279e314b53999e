//! Branch tracking across a sweep and anti-crossing detection.
//!
//! Peaks of consecutive frames are linked by an order-preserving matching
//! (branches never swap places) with a bounded per-step jump. The gap between
//! every pair of energetically adjacent branches is followed along the
//! tuning axis; an anti-crossing is an interior minimum of such a gap,
//! refined by a parabola through the minimum and its two neighbours.

use crate::error::{Error, Result};
use crate::fit::peaks::{extract_map_peaks, Peak, PeakOptions, PeakSet};
use crate::scalar::Real;
use crate::spectrum::{SweepAxis, SweepMap};

/// Frames a branch may go unseen before it is retired.
const MAX_MISSING: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Track<T> {
    /// `(frame index, peak)` in frame order.
    pub points: Vec<(usize, Peak<T>)>,
}

impl<T: Real> Track<T> {
    pub fn at(&self, frame: usize) -> Option<&Peak<T>> {
        self.points
            .binary_search_by_key(&frame, |(f, _)| *f)
            .ok()
            .map(|i| &self.points[i].1)
    }

    fn last(&self) -> (usize, T) {
        let (f, p) = self.points.last().expect("tracks are never empty");
        (*f, p.center)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    PlusOne,
    MinusOne,
    /// Both spin branches coincide (zero field).
    Degenerate,
    Unassigned,
}

impl BranchLabel {
    pub fn label(self) -> &'static str {
        match self {
            BranchLabel::PlusOne => "plus_one",
            BranchLabel::MinusOne => "minus_one",
            BranchLabel::Degenerate => "degenerate",
            BranchLabel::Unassigned => "unassigned",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntiCrossing<T> {
    pub tuning_at_min: T,
    pub min_gap: T,
    pub branch: BranchLabel,
    /// Mean energy of the two branches at the minimum, µeV.
    pub center_energy: T,
    /// Frame index closest to the minimum.
    pub frame: usize,
    /// Mean FWHM of the two peaks at the minimum frame.
    pub mean_fwhm: T,
    /// Slope of the pair-mean energy along the tuning axis, µeV per unit.
    pub mean_slope: T,
    /// Indices into the tracks returned by [`track_branches`].
    pub lower: usize,
    pub upper: usize,
}

impl<T: Real> AntiCrossing<T> {
    /// False when the gap does not exceed the mean linewidth, i.e. the lines
    /// may simply cross below resolution.
    pub fn resolved(&self) -> bool {
        self.min_gap > self.mean_fwhm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions<T> {
    pub peaks: PeakOptions<T>,
    /// Fixed magnetic field of a temperature sweep, used for branch labels.
    pub field: Option<T>,
}

impl<T: Real> Default for DetectOptions<T> {
    fn default() -> Self {
        Self {
            peaks: PeakOptions::default(),
            field: None,
        }
    }
}

fn median<T: Real>(mut v: Vec<T>) -> Option<T> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Some(v[v.len() / 2])
}

/// Order-preserving assignment of sorted `targets` to sorted `sources`
/// maximizing the number of links, then minimizing the summed distance.
/// Links longer than `max_jump` are not allowed.
fn ordered_matching<T: Real>(sources: &[T], targets: &[T], max_jump: T) -> Vec<Option<usize>> {
    let (n, m) = (sources.len(), targets.len());
    // best[i][j]: (links, -cost) using sources[i..], targets[j..]
    let mut best = vec![vec![(0usize, T::zero()); m + 1]; n + 1];
    let better = |a: (usize, T), b: (usize, T)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let mut cand = best[i + 1][j];
            if better(best[i][j + 1], cand) {
                cand = best[i][j + 1];
            }
            let d = (sources[i] - targets[j]).abs();
            if d <= max_jump {
                let (l, c) = best[i + 1][j + 1];
                let linked = (l + 1, c + d);
                if better(linked, cand) {
                    cand = linked;
                }
            }
            best[i][j] = cand;
        }
    }
    let mut out = vec![None; n];
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        let d = (sources[i] - targets[j]).abs();
        if d <= max_jump {
            let (l, c) = best[i + 1][j + 1];
            if best[i][j] == (l + 1, c + d) {
                out[i] = Some(j);
                i += 1;
                j += 1;
                continue;
            }
        }
        if best[i][j] == best[i + 1][j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Largest allowed per-frame move: three times the median nearest-peak shift
/// between consecutive frames, but never below half the narrowest line.
fn max_jump<T: Real>(sets: &[PeakSet<T>]) -> T {
    let mut shifts = Vec::new();
    for w in sets.windows(2) {
        for p in &w[1].peaks {
            let nearest = w[0]
                .peaks
                .iter()
                .map(|q| (q.center - p.center).abs())
                .fold(T::infinity(), T::min);
            if nearest.is_finite() {
                shifts.push(nearest);
            }
        }
    }
    let narrowest = sets
        .iter()
        .flat_map(|s| s.peaks.iter().map(|p| p.fwhm))
        .fold(T::infinity(), T::min);
    let floor = if narrowest.is_finite() { narrowest / T::lit(2.0) } else { T::zero() };
    (median(shifts).unwrap_or_else(T::zero) * T::lit(3.0)).max(floor)
}

/// Links peaks of consecutive frames into branches.
pub fn track_branches<T: Real>(sets: &[PeakSet<T>]) -> Vec<Track<T>> {
    let jump = max_jump(sets);
    let mut tracks: Vec<Track<T>> = Vec::new();
    for (k, set) in sets.iter().enumerate() {
        let mut active: Vec<usize> = (0..tracks.len())
            .filter(|&t| k - tracks[t].last().0 <= MAX_MISSING)
            .collect();
        active.sort_by(|&a, &b| {
            tracks[a]
                .last()
                .1
                .partial_cmp(&tracks[b].last().1)
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let sources: Vec<T> = active.iter().map(|&t| tracks[t].last().1).collect();
        let targets = set.centers();
        let links = ordered_matching(&sources, &targets, jump);
        let mut taken = vec![false; targets.len()];
        for (s, link) in links.iter().enumerate() {
            if let Some(j) = link {
                taken[*j] = true;
                tracks[active[s]].points.push((k, set.peaks[*j]));
            }
        }
        for (j, used) in taken.iter().enumerate() {
            if !used {
                tracks.push(Track {
                    points: vec![(k, set.peaks[j])],
                });
            }
        }
    }
    tracks
}

struct GapPoint<T> {
    frame: usize,
    gap: T,
    center: T,
    fwhm: T,
}

/// Vertex of the parabola through three points, with the abscissa clamped
/// to their span and the ordinate never above the middle point.
fn parabolic_min<T: Real>(x: [T; 3], y: [T; 3]) -> (T, T) {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > T::zero()) {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let c = y0 - a * x0 * x0 - b * x0;
    let (lo, hi) = (x0.min(x2), x0.max(x2));
    let xv = (-b / (T::lit(2.0) * a)).max(lo).min(hi);
    let yv = a * xv * xv + b * xv + c;
    (xv, yv.min(y1))
}

fn slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len());
    if xs.len() < 2 {
        return T::zero();
    }
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    if sxx > T::zero() {
        sxy / sxx
    } else {
        T::zero()
    }
}

fn label<T: Real>(
    axis: SweepAxis,
    opts: &DetectOptions<T>,
    spectator_above: Option<bool>,
    mean_slope: T,
) -> BranchLabel {
    match axis {
        // the +1 branch moves down in energy with field, the -1 branch up
        SweepAxis::MagneticField => {
            if mean_slope < T::zero() {
                BranchLabel::PlusOne
            } else if mean_slope > T::zero() {
                BranchLabel::MinusOne
            } else {
                BranchLabel::Unassigned
            }
        }
        SweepAxis::Temperature => match (opts.field, spectator_above) {
            (Some(b), _) if b == T::zero() => BranchLabel::Degenerate,
            (_, Some(true)) => BranchLabel::PlusOne,
            (_, Some(false)) => BranchLabel::MinusOne,
            _ => BranchLabel::Unassigned,
        },
    }
}

/// Every anti-crossing in the map, ordered by energy of the branch pair.
pub fn detect_anticrossings<T: Real>(map: &SweepMap<T>, opts: &DetectOptions<T>) -> Result<Vec<AntiCrossing<T>>> {
    map.validate()?;
    let sets = extract_map_peaks(map, &opts.peaks);
    let tracks = track_branches(&sets);

    // gap series of each adjacent pair, keyed by (lower, upper) track index
    let mut series: Vec<((usize, usize), Vec<GapPoint<T>>)> = Vec::new();
    for k in 0..map.len() {
        let mut present: Vec<(usize, Peak<T>)> = tracks
            .iter()
            .enumerate()
            .filter_map(|(t, tr)| tr.at(k).map(|p| (t, *p)))
            .collect();
        present.sort_by(|a, b| a.1.center.partial_cmp(&b.1.center).unwrap_or(core::cmp::Ordering::Equal));
        for w in present.windows(2) {
            let key = (w[0].0, w[1].0);
            let point = GapPoint {
                frame: k,
                gap: w[1].1.center - w[0].1.center,
                center: (w[0].1.center + w[1].1.center) / T::lit(2.0),
                fwhm: (w[0].1.fwhm + w[1].1.fwhm) / T::lit(2.0),
            };
            match series.iter_mut().find(|(k2, _)| *k2 == key) {
                Some((_, s)) => s.push(point),
                None => series.push((key, vec![point])),
            }
        }
    }

    let mut found = Vec::new();
    for ((lower, upper), pts) in &series {
        if pts.len() < 3 {
            continue;
        }
        let i = (0..pts.len())
            .min_by(|&a, &b| pts[a].gap.partial_cmp(&pts[b].gap).unwrap_or(core::cmp::Ordering::Equal))
            .expect("non-empty");
        if i == 0 || i + 1 == pts.len() {
            continue;
        }
        let near = [&pts[i - 1], &pts[i], &pts[i + 1]];
        let x = near.map(|p| map.tuning[p.frame]);
        let (t_min, g_min) = parabolic_min(x, near.map(|p| p.gap));
        let frame = pts[i].frame;
        let xs: Vec<T> = pts.iter().map(|p| map.tuning[p.frame]).collect();
        let cs: Vec<T> = pts.iter().map(|p| p.center).collect();
        let mean_slope = slope(&xs, &cs);
        let spectator_above = tracks
            .iter()
            .enumerate()
            .filter(|(t, _)| t != lower && t != upper)
            .filter_map(|(_, tr)| tr.at(frame))
            .map(|p| p.center > pts[i].center)
            .next();
        found.push(AntiCrossing {
            tuning_at_min: t_min,
            min_gap: g_min.max(T::zero()),
            branch: label(map.axis, opts, spectator_above, mean_slope),
            center_energy: pts[i].center,
            frame,
            mean_fwhm: pts[i].fwhm,
            mean_slope,
            lower: *lower,
            upper: *upper,
        });
    }
    found.sort_by(|a, b| a.center_energy.partial_cmp(&b.center_energy).unwrap_or(core::cmp::Ordering::Equal));
    // in a temperature sweep with both branches visible, the lower pair
    // belongs to the +1 exciton and the upper pair to the -1 exciton
    if map.axis == SweepAxis::Temperature && found.len() == 2 && opts.field.map_or(true, |b| b > T::zero()) {
        found[0].branch = BranchLabel::PlusOne;
        found[1].branch = BranchLabel::MinusOne;
    }
    Ok(found)
}

/// The anti-crossing with the smallest gap.
pub fn detect_anticrossing<T: Real>(map: &SweepMap<T>, opts: &DetectOptions<T>) -> Result<AntiCrossing<T>> {
    detect_anticrossings(map, opts)?
        .into_iter()
        .min_by(|a, b| a.min_gap.partial_cmp(&b.min_gap).unwrap_or(core::cmp::Ordering::Equal))
        .ok_or_else(|| Error::NoAntiCrossing("no pair of branches has an interior gap minimum".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_preserves_order_and_respects_jump() {
        let links = ordered_matching(&[0.0, 10.0, 20.0], &[1.0, 19.0], 3.0);
        assert_eq!(links, vec![Some(0), None, Some(1)]);
        let links = ordered_matching(&[0.0, 10.0], &[9.0], 100.0);
        assert_eq!(links, vec![None, Some(0)]);
        assert_eq!(ordered_matching::<f64>(&[], &[1.0], 1.0), vec![]);
    }

    #[test]
    fn parabola_vertex() {
        let f = |x: f64| 2.0 * (x - 0.3) * (x - 0.3) + 5.0;
        let (x, y) = parabolic_min([0.0, 0.5, 1.0], [f(0.0), f(0.5), f(1.0)]);
        assert!((x - 0.3).abs() < 1e-12 && (y - 5.0).abs() < 1e-12);
        let (x, y) = parabolic_min([0.0, 1.0, 3.0], [f(0.0), f(1.0), f(3.0)]);
        assert!((x - 0.3).abs() < 1e-12 && (y - 5.0).abs() < 1e-12);
    }

    fn set(centers: &[f64]) -> PeakSet<f64> {
        PeakSet {
            peaks: centers
                .iter()
                .map(|&c| Peak {
                    center: c,
                    fwhm: 10.0,
                    amplitude: 1.0,
                    center_uncertainty: 0.0,
                    refined: true,
                })
                .collect(),
        }
    }

    #[test]
    fn tracks_survive_a_missing_frame() {
        let sets = vec![set(&[0.0, 100.0]), set(&[1.0, 101.0]), set(&[2.0]), set(&[3.0, 103.0])];
        let tracks = track_branches(&sets);
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[1].points.len(), 3);
        assert!(tracks[1].at(2).is_none());
    }
}

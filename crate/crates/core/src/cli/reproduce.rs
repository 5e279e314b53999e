//! One-command regeneration of the figure data with a pass/fail table.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use super::{anticrossing_options, simulate_sweep, simulate_zeeman, Axis};
use crate::error::{Error, Result};
use crate::exciton::{branch_energy, branch_splitting, zeeman_rate, SpinBranch};
use crate::fit::{
    detect_anticrossings, fit_anticrossing, fit_zeeman, infer_dipole_angle, AntiCrossing, AntiCrossingModel,
    BranchLabel, FitResult, RabiRow, RabiTable,
};
use crate::io::{write_atomic, write_sweep, write_zeeman, EnergyUnit, ExperimentConfig, GridSpec, Report};
use crate::polariton::resonance_field;
use crate::spectrum::{sweep_temperature, uniform_grid};
use crate::units::detuning_energy_to_nm;

/// Checked-in target table.
pub const TARGETS: &str = include_str!("../../fixtures/targets.toml");

/// Half width of the temperature window around each resonance, K.
const WINDOW_HALF: f64 = 2.5;
const WINDOW_STEP: f64 = 0.1;
/// Half width of the windows cut from the 1 T map around each gap, K.
const MAP_WINDOW_HALF: f64 = 1.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1b,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig1b, Figure::Fig2a, Figure::Fig2b, Figure::Fig3a, Figure::Fig3b];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1b => "fig1b",
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown figure {s:?}; expected fig1b, fig2a, fig2b, fig3a or fig3b"))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub figure: String,
    pub quantity: String,
    pub value: f64,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
}

impl Target {
    pub fn is_checked(&self) -> bool {
        self.abs_tol.is_some() || self.rel_tol.is_some()
    }

    pub fn accepts(&self, model: f64) -> bool {
        let d = (model - self.value).abs();
        self.abs_tol.is_some_and(|t| d <= t) || self.rel_tol.is_some_and(|t| d <= t * self.value.abs())
    }

    fn tolerance_label(&self) -> String {
        match (self.abs_tol, self.rel_tol) {
            (Some(a), _) => format!("±{a}"),
            (None, Some(r)) if r >= 0.01 => format!("±{}%", (r * 100.0).round()),
            (None, Some(r)) => format!("±{r:e} rel"),
            (None, None) => "-".into(),
        }
    }
}

#[derive(Deserialize)]
struct TargetFile {
    target: Vec<Target>,
}

/// Rows of the target table for `figure`.
pub fn targets(figure: Figure) -> Vec<Target> {
    let file: TargetFile = toml::from_str(TARGETS).expect("target table parses");
    file.target.into_iter().filter(|t| t.figure == figure.name()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub quantity: String,
    pub model: Option<f64>,
    pub target: Option<Target>,
}

impl ComparisonRow {
    /// `None` for reference-only rows.
    pub fn passed(&self) -> Option<bool> {
        let t = self.target.as_ref().filter(|t| t.is_checked())?;
        Some(self.model.is_some_and(|m| t.accepts(m)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub figure: Figure,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    fn new(figure: Figure, computed: Vec<(&str, f64)>) -> Self {
        let mut rows: Vec<ComparisonRow> = targets(figure)
            .into_iter()
            .map(|t| ComparisonRow {
                quantity: t.quantity.clone(),
                model: computed.iter().find(|(k, _)| *k == t.quantity).map(|(_, v)| *v),
                target: Some(t),
            })
            .collect();
        for (k, v) in computed {
            if !rows.iter().any(|r| r.quantity == k) {
                rows.push(ComparisonRow {
                    quantity: k.to_string(),
                    model: Some(v),
                    target: None,
                });
            }
        }
        Self { figure, rows }
    }

    pub fn get(&self, quantity: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.quantity == quantity)?.model
    }

    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.passed() == Some(false))
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn render(&self) -> String {
        let mut out = format!("# figure = {}\n", self.figure);
        out.push_str(&format!(
            "{:<24} {:>14} {:>10} {:>10}  {}\n",
            "quantity", "model", "target", "tolerance", "status"
        ));
        for r in &self.rows {
            let model = r.model.map_or("missing".into(), |m| format!("{m:.6}"));
            let (target, tol) = r
                .target
                .as_ref()
                .map_or(("-".into(), "-".into()), |t| (t.value.to_string(), t.tolerance_label()));
            let status = match r.passed() {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "info",
            };
            out.push_str(&format!("{:<24} {model:>14} {target:>10} {tol:>10}  {status}\n", r.quantity));
        }
        out
    }
}

fn save_report(dir: &Path, name: &str, mode: &str, fit: &FitResult<f64>) -> Result<()> {
    let text = Report::from_fit(mode, fit).render();
    write_atomic(&dir.join(name), |w| Ok(w.write_all(text.as_bytes())?))
}

fn require_converged(what: &str, fit: FitResult<f64>) -> Result<FitResult<f64>> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NoAntiCrossing(format!("{what}: fit did not converge")))
    }
}

fn pick(found: &[AntiCrossing<f64>], label: BranchLabel) -> Result<&AntiCrossing<f64>> {
    found
        .iter()
        .find(|a| a.branch == label)
        .ok_or_else(|| Error::NoAntiCrossing(format!("no {} anti-crossing in the map", label.label())))
}

/// Regenerates `figure` from `cfg`, writing data files into `dir`.
pub fn reproduce(figure: Figure, cfg: &ExperimentConfig, dir: &Path) -> Result<Comparison> {
    let computed = match figure {
        Figure::Fig1b => fig1b(cfg, dir)?,
        Figure::Fig2a => field_sweep(cfg, dir, 34.0, GridSpec::new(1.5, 3.3, 0.3), SpinBranch::PlusOne)?,
        Figure::Fig2b => field_sweep(cfg, dir, 41.0, GridSpec::new(1.8, 3.6, 0.3), SpinBranch::MinusOne)?,
        Figure::Fig3a => fig3a(cfg, dir)?,
        Figure::Fig3b => fig3b(cfg, dir)?,
    };
    Ok(Comparison::new(figure, computed))
}

fn fig1b(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<(&'static str, f64)>> {
    let points = simulate_zeeman(cfg)?;
    write_atomic(&dir.join("fig1b_zeeman.csv"), |w| {
        write_zeeman(&points, EnergyUnit::MicroElectronVolt, w)
    })?;
    let fit = fit_zeeman(&points)?;
    save_report(dir, "fig1b_fit.txt", "zeeman", &fit)?;
    let e0 = cfg.exciton.e0;
    Ok(vec![
        ("g_diff", fit.get("g_diff").unwrap_or(f64::NAN)),
        ("gamma2", fit.get("gamma2").unwrap_or(f64::NAN)),
        ("shift_plus_7t", branch_energy(&cfg.exciton, SpinBranch::PlusOne, 7.0)? - e0),
        ("shift_minus_7t", branch_energy(&cfg.exciton, SpinBranch::MinusOne, 7.0)? - e0),
    ])
}

fn field_sweep(
    cfg: &ExperimentConfig,
    dir: &Path,
    temperature: f64,
    fields: GridSpec,
    branch: SpinBranch,
) -> Result<Vec<(&'static str, f64)>> {
    let mut cfg = cfg.clone();
    cfg.sweep.temperature = temperature;
    cfg.grids.field = fields;
    let map = simulate_sweep(&cfg, Axis::B, false, None)?;
    let name = format!("sweep_b_{temperature}k.csv");
    write_atomic(&dir.join(name), |w| write_sweep(&map, EnergyUnit::MicroElectronVolt, w))?;
    let exc = cfg.exciton.with_e0(cfg.temperature.energy_at(temperature));
    let resonance = resonance_field(&exc, branch, &cfg.cavity)?;
    let found = detect_anticrossings(&map, &anticrossing_options(&cfg, AntiCrossingModel::TwoMode, None).detect)?;
    let (label, res_key) = match branch {
        SpinBranch::PlusOne => (BranchLabel::PlusOne, "resonance_field_plus"),
        SpinBranch::MinusOne => (BranchLabel::MinusOne, "resonance_field_minus"),
    };
    let a = pick(&found, label)?;
    let frame_field = map.tuning[a.frame];
    Ok(vec![
        (res_key, resonance),
        ("min_gap_field", frame_field),
        ("min_gap_field_offset", frame_field - resonance),
        ("min_gap_vertex_field", a.tuning_at_min),
        ("min_gap", a.min_gap),
    ])
}

fn fig3a(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<(&'static str, f64)>> {
    let mut zero = cfg.clone();
    zero.sweep.field = 0.0;
    let map0 = simulate_sweep(&zero, Axis::T, false, None)?;
    write_atomic(&dir.join("sweep_t_0t.csv"), |w| write_sweep(&map0, EnergyUnit::MicroElectronVolt, w))?;
    let opts0 = anticrossing_options(&zero, AntiCrossingModel::TwoMode, Some(0.0));
    let found0 = detect_anticrossings(&map0, &opts0.detect)?;
    let gap0 = pick(&found0, BranchLabel::Degenerate)?.min_gap;
    let fit0 = require_converged("0 T", fit_anticrossing(&map0, &opts0)?)?;
    save_report(dir, "fig3a_fit_0t.txt", "anticrossing", &fit0)?;

    let mut one = cfg.clone();
    one.sweep.field = 1.0;
    let map1 = simulate_sweep(&one, Axis::T, false, None)?;
    write_atomic(&dir.join("sweep_t_1t.csv"), |w| write_sweep(&map1, EnergyUnit::MicroElectronVolt, w))?;
    let split = branch_splitting(&one.exciton, 1.0)?;
    let opts1 = anticrossing_options(&one, AntiCrossingModel::VSystem { split }, Some(1.0));
    let found1 = detect_anticrossings(&map1, &opts1.detect)?;
    let plus = pick(&found1, BranchLabel::PlusOne)?;
    let minus = pick(&found1, BranchLabel::MinusOne)?;
    let windowed = |a: &AntiCrossing<f64>, tag: &str| -> Result<FitResult<f64>> {
        let t = a.tuning_at_min;
        let w = map1.window(t - MAP_WINDOW_HALF, t + MAP_WINDOW_HALF)?;
        let fit = require_converged(tag, fit_anticrossing(&w, &opts1)?)?;
        save_report(dir, &format!("fig3a_fit_1t_{tag}.txt"), "anticrossing", &fit)?;
        Ok(fit)
    };
    let fit_p = windowed(plus, "plus")?;
    let fit_m = windowed(minus, "minus")?;
    Ok(vec![
        ("g_0t", fit0.get("g").unwrap_or(f64::NAN)),
        ("g_plus_1t", fit_p.get("g_plus").unwrap_or(f64::NAN)),
        ("g_minus_1t", fit_m.get("g_minus").unwrap_or(f64::NAN)),
        ("split_1t_nm", detuning_energy_to_nm(split, cfg.reference_wavelength_nm)?),
        ("gap_0t", gap0),
        ("gap_plus_1t", plus.min_gap),
        ("gap_minus_1t", minus.min_gap),
    ])
}

/// Temperature at which `branch` meets the cavity line at `field`.
fn resonance_temperature(cfg: &ExperimentConfig, branch: SpinBranch, field: f64) -> Result<f64> {
    let exc = &cfg.exciton;
    let m: f64 = branch.m();
    let e0 = cfg.cavity.energy + m * (zeeman_rate(exc) * field + exc.fine_structure / 2.0) - exc.gamma2 * field * field;
    cfg.temperature.temperature_for(e0)
}

fn fig3b(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<(&'static str, f64)>> {
    let energies = cfg.energy_grid()?;
    let opts = cfg.synth_options();
    let jobs: Vec<(f64, SpinBranch)> = (1..=7)
        .flat_map(|b| SpinBranch::BOTH.map(|s| (f64::from(b), s)))
        .collect();
    let couplings = jobs
        .par_iter()
        .map(|&(b, branch)| {
            let tr = resonance_temperature(cfg, branch, b)?;
            let temps = uniform_grid(tr - WINDOW_HALF, tr + WINDOW_HALF, WINDOW_STEP)?;
            let map = sweep_temperature(
                &cfg.exciton,
                &cfg.temperature,
                &cfg.cavity,
                &cfg.coupling,
                &temps,
                &energies,
                b,
                &opts,
            )?;
            let split = branch_splitting(&cfg.exciton, b)?;
            let fit = fit_anticrossing(&map, &anticrossing_options(cfg, AntiCrossingModel::VSystem { split }, Some(b)))?;
            let tag = format!("{b} T {}", branch.label());
            let fit = require_converged(&tag, fit)?;
            let key = match branch {
                SpinBranch::PlusOne => "g_plus",
                SpinBranch::MinusOne => "g_minus",
            };
            Ok(fit.get(key).unwrap_or(f64::NAN))
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<RabiRow<f64>> = jobs
        .chunks(2)
        .zip(couplings.chunks(2))
        .map(|(j, g)| RabiRow {
            field: j[0].0,
            g_plus: g[0],
            g_minus: g[1],
        })
        .collect();
    let table = RabiTable::from_rows(rows, Some(cfg.coupling.g0));
    write_atomic(&dir.join("fig3b_rabi_vs_field.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["field", "g_plus", "g_minus"]).map_err(csv_io)?;
        for r in &table.rows {
            w.write_record([r.field.to_string(), r.g_plus.to_string(), r.g_minus.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let n = table.rows.len() as f64;
    let mean_plus = table.rows.iter().map(|r| r.g_plus).sum::<f64>() / n;
    let mean_minus = table.rows.iter().map(|r| r.g_minus).sum::<f64>() / n;
    Ok(vec![
        ("flatness", table.flatness()),
        ("mean_reduction_plus", table.mean_reduction_plus.unwrap_or(f64::NAN)),
        ("mean_reduction_minus", table.mean_reduction_minus.unwrap_or(f64::NAN)),
        ("dipole_angle_plus_deg", infer_dipole_angle(cfg.coupling.g0, mean_plus)?.to_degrees()),
        ("dipole_angle_minus_deg", infer_dipole_angle(cfg.coupling.g0, mean_minus)?.to_degrees()),
    ])
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_checked_targets() {
        for f in Figure::ALL {
            assert!(targets(f).iter().any(Target::is_checked), "{f}");
        }
    }

    #[test]
    fn tolerance_rules() {
        let t = Target {
            figure: "x".into(),
            quantity: "q".into(),
            value: 10.0,
            abs_tol: None,
            rel_tol: Some(0.1),
        };
        assert!(t.accepts(10.9) && !t.accepts(11.1));
        let row = ComparisonRow {
            quantity: "q".into(),
            model: None,
            target: Some(t),
        };
        assert_eq!(row.passed(), Some(false));
    }

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>(), Ok(f));
        }
        assert!("fig9".parse::<Figure>().is_err());
    }
}

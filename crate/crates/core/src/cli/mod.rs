//! `qdcav` command line.
//!
//! Exit codes: 0 success, 2 input or config error, 3 fit did not converge,
//! 4 reproduction target missed.

mod reproduce;

pub use self::reproduce::{reproduce, Comparison, ComparisonRow, Figure, Target, TARGETS};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::exciton::{branch_energy, branch_splitting, SpinBranch};
use crate::fit::lm::LmConfig;
use crate::fit::{
    fit_anticrossing, fit_zeeman, AntiCrossingModel, AntiCrossingOptions, DetectOptions, PeakOptions, ZeemanPoint,
};
use crate::io::{read_sweep, read_zeeman, write_atomic, write_sweep, write_zeeman, EnergyUnit, ExperimentConfig, Report};
use crate::spectrum::{add_noise, sweep_magnetic, sweep_temperature, SweepAxis, SweepMap};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_REPRODUCTION: i32 = 4;

/// Fewest frames an anti-crossing fit accepts.
const MIN_FRAMES: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "qdcav", version, about = "Quantum-dot cavity polariton simulator and fitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Branch energies versus field.
    SimulateZeeman(ZeemanArgs),
    /// Spectral map of a field or temperature sweep.
    SimulateSweep(SweepArgs),
    /// Fit branch energies or an anti-crossing map.
    Fit(FitArgs),
    /// Regenerate one figure and compare with the target table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "T", alias = "t")]
    T,
}

impl Axis {
    pub fn sweep_axis(self) -> SweepAxis {
        match self {
            Axis::B => SweepAxis::MagneticField,
            Axis::T => SweepAxis::Temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    #[value(name = "ueV", alias = "uev", alias = "µeV")]
    MicroElectronVolt,
    #[value(name = "nm")]
    Nanometer,
}

impl From<Unit> for EnergyUnit {
    fn from(u: Unit) -> Self {
        match u {
            Unit::MicroElectronVolt => EnergyUnit::MicroElectronVolt,
            Unit::Nanometer => EnergyUnit::Nanometer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMode {
    Zeeman,
    Anticrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    TwoMode,
    VSystem,
}

#[derive(Debug, Args)]
struct ZeemanArgs {
    /// TOML experiment config; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ueV")]
    unit: Unit,
    /// Also write a gnuplot script for the table.
    #[arg(long)]
    plot_script: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    axis: Axis,
    #[arg(long, value_enum, default_value = "ueV")]
    unit: Unit,
    /// Noise seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Add noise even when the config disables it.
    #[arg(long)]
    noisy: bool,
    #[arg(long)]
    plot_script: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(value_enum)]
    mode: FitMode,
    /// CSV written by simulate-zeeman or simulate-sweep.
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report file; the report always goes to stdout as well.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "T")]
    axis: Axis,
    #[arg(long, value_enum, default_value = "ueV")]
    unit: Unit,
    /// Restrict the map to tuning values `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<(f64, f64)>,
    /// Coupled-mode model; V-system for temperature sweeps at nonzero
    /// field, two-mode otherwise.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Accepted for symmetry with the other commands; fits are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// fig1b, fig2a, fig2b, fig3a or fig3b.
    figure: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, default_value = "reproduce")]
    out: PathBuf,
    /// Accepted for symmetry; reproductions are noiseless.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if !(lo < hi) {
        return Err("window needs lo < hi".into());
    }
    Ok((lo, hi))
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoAntiCrossing(_) | Error::RankDeficient(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Diagnostics go to stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::SimulateZeeman(a) => simulate_zeeman_cmd(a),
        Command::SimulateSweep(a) => simulate_sweep_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Reproduce(a) => reproduce_cmd(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("qdcav: {}", f.message);
            f.code
        }
    }
}

fn load_config(path: Option<&Path>) -> std::result::Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok(ExperimentConfig::paper_defaults()),
    }
}

/// Branch energies on the config's field grid.
pub fn simulate_zeeman(cfg: &ExperimentConfig) -> crate::error::Result<Vec<ZeemanPoint<f64>>> {
    cfg.grids
        .zeeman
        .values()?
        .into_iter()
        .map(|b| {
            Ok(ZeemanPoint {
                field: b,
                e_plus: branch_energy(&cfg.exciton, SpinBranch::PlusOne, b)?,
                e_minus: branch_energy(&cfg.exciton, SpinBranch::MinusOne, b)?,
            })
        })
        .collect()
}

/// Sweep map on the config's grids: field sweeps at `sweep.temperature`,
/// temperature sweeps at `sweep.field`. Noise is added when enabled in the
/// config or forced by `noisy`.
pub fn simulate_sweep(
    cfg: &ExperimentConfig,
    axis: Axis,
    noisy: bool,
    seed: Option<u64>,
) -> crate::error::Result<SweepMap<f64>> {
    let energies = cfg.energy_grid()?;
    let opts = cfg.synth_options();
    let map = match axis {
        Axis::B => {
            let exc = cfg.exciton.with_e0(cfg.temperature.energy_at(cfg.sweep.temperature));
            sweep_magnetic(&exc, &cfg.cavity, &cfg.coupling, &cfg.grids.field.values()?, &energies, &opts)?
        }
        Axis::T => sweep_temperature(
            &cfg.exciton,
            &cfg.temperature,
            &cfg.cavity,
            &cfg.coupling,
            &cfg.grids.temperature.values()?,
            &energies,
            cfg.sweep.field,
            &opts,
        )?,
    };
    if noisy || cfg.noise.enabled {
        add_noise(&map, cfg.noise.model, cfg.noise.scale, seed.unwrap_or(cfg.seed))
    } else {
        Ok(map)
    }
}

/// Fit options built from the config's peak and iteration settings.
pub fn anticrossing_options(
    cfg: &ExperimentConfig,
    model: AntiCrossingModel<f64>,
    field: Option<f64>,
) -> AntiCrossingOptions<f64> {
    AntiCrossingOptions {
        model,
        gamma_x: cfg.exciton.gamma_x,
        gamma_c_init: None,
        detect: DetectOptions {
            peaks: PeakOptions {
                max_peaks: cfg.fit.max_peaks,
                floor: cfg.fit.floor,
            },
            field,
        },
        lm: LmConfig {
            max_iter: cfg.fit.max_iter,
            ..LmConfig::default()
        },
    }
}

fn write_plot_script(path: &Path, data: &Path, body: &str) -> CmdResult {
    let text = format!("# gnuplot\nset datafile separator ','\nset key autotitle columnhead\n{}\n", body.replace("DATA", &data.display().to_string()));
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(())
}

fn simulate_zeeman_cmd(a: ZeemanArgs) -> CmdResult {
    let cfg = load_config(a.config.as_deref())?;
    let points = simulate_zeeman(&cfg)?;
    write_atomic(&a.out, |w| write_zeeman(&points, a.unit.into(), w))?;
    if let Some(p) = &a.plot_script {
        write_plot_script(p, &a.out, "plot 'DATA' using 1:2 with linespoints, '' using 1:3 with linespoints")?;
    }
    Ok(())
}

fn simulate_sweep_cmd(a: SweepArgs) -> CmdResult {
    let cfg = load_config(a.config.as_deref())?;
    let map = simulate_sweep(&cfg, a.axis, a.noisy, a.seed)?;
    write_atomic(&a.out, |w| write_sweep(&map, a.unit.into(), w))?;
    if let Some(p) = &a.plot_script {
        write_plot_script(
            p,
            &a.out,
            "set view map\nsplot 'DATA' using 1:2:3 with points pointtype 5 pointsize 0.5 palette",
        )?;
    }
    Ok(())
}

fn fit_cmd(a: FitArgs) -> CmdResult {
    let cfg = load_config(a.config.as_deref())?;
    let file = std::fs::File::open(&a.input)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot open {}: {e}", a.input.display())))?;
    let (mode, fit) = match a.mode {
        FitMode::Zeeman => ("zeeman", fit_zeeman(&read_zeeman(file)?)?),
        FitMode::Anticrossing => {
            let mut map = read_sweep(file, a.unit.into(), a.axis.sweep_axis())?;
            if let Some((lo, hi)) = a.window {
                map = map.window(lo, hi)?;
            }
            if map.len() < MIN_FRAMES {
                return Err(Failure::new(
                    EXIT_INPUT,
                    format!("sweep has {} frame(s), an anti-crossing fit needs {MIN_FRAMES}", map.len()),
                ));
            }
            let field = match a.axis {
                Axis::T => Some(cfg.sweep.field),
                Axis::B => None,
            };
            let v_system = match a.model {
                Some(m) => m == ModelArg::VSystem,
                None => a.axis == Axis::T && cfg.sweep.field > 0.0,
            };
            let model = if v_system {
                let b = field.ok_or_else(|| Failure::new(EXIT_INPUT, "the V-system model needs a temperature sweep"))?;
                AntiCrossingModel::VSystem {
                    split: branch_splitting(&cfg.exciton, b)?,
                }
            } else {
                AntiCrossingModel::TwoMode
            };
            ("anticrossing", fit_anticrossing(&map, &anticrossing_options(&cfg, model, field))?)
        }
    };
    let text = Report::from_fit(mode, &fit).render();
    print!("{text}");
    if let Some(out) = &a.out {
        write_atomic(out, |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    if !fit.converged {
        return Err(Failure::new(
            EXIT_NOT_CONVERGED,
            format!("fit did not converge after {} iterations", fit.iterations),
        ));
    }
    Ok(())
}

fn reproduce_cmd(a: ReproduceArgs) -> CmdResult {
    let figure: Figure = a
        .figure
        .parse()
        .map_err(|e: String| Failure::new(EXIT_INPUT, e))?;
    let cfg = load_config(a.config.as_deref())?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot create {}: {e}", a.out.display())))?;
    let cmp = reproduce(figure, &cfg, &a.out).map_err(|e| {
        let f = Failure::from(e);
        Failure::new(EXIT_REPRODUCTION, format!("{figure}: {}", f.message))
    })?;
    let table = cmp.render();
    print!("{table}");
    let path = a.out.join(format!("{figure}_comparison.txt"));
    write_atomic(&path, |w| Ok(w.write_all(table.as_bytes())?))?;
    let failed: Vec<&str> = cmp.failures().map(|r| r.quantity.as_str()).collect();
    if !failed.is_empty() {
        return Err(Failure::new(
            EXIT_REPRODUCTION,
            format!("{figure}: targets missed: {}", failed.join(", ")),
        ));
    }
    Ok(())
}

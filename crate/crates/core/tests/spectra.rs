//! Map-level checks against values from an independent eigensolver.

use qdcav::exciton::{branch_splitting, SpinBranch};
use qdcav::fit::{detect_anticrossings, fit_anticrossing, AntiCrossingModel, AntiCrossingOptions, BranchLabel, DetectOptions};
use qdcav::polariton::{polariton_modes_2x2, resonance_field};
use qdcav::spectrum::{add_noise, sweep_magnetic, sweep_temperature, uniform_grid, NoiseModel};
use qdcav::{ExperimentConfig, SweepMap};

fn temperature_map(cfg: &ExperimentConfig, field: f64, lo: f64, hi: f64) -> SweepMap {
    sweep_temperature(
        &cfg.exciton,
        &cfg.temperature,
        &cfg.cavity,
        &cfg.coupling,
        &uniform_grid(lo, hi, 0.1).unwrap(),
        &cfg.energy_grid().unwrap(),
        field,
        &cfg.synth_options(),
    )
    .unwrap()
}

#[test]
fn detuned_mode_weights() {
    // [DERIVED] numpy.linalg.eig of [[50 - 0.5i, 72], [72, -75i]], columns normalized
    let m = polariton_modes_2x2(50.0f64, 1.0, 0.0, 150.0, 72.0);
    assert!((m[0].energy + 42.893_839_685).abs() < 1e-8);
    assert!((m[0].half_linewidth - 51.466_266_517).abs() < 1e-8);
    assert!((m[0].exciton_weight_sq() - 0.315_889_040_037).abs() < 1e-9);
    assert!((m[1].cavity_weight_sq() - 0.315_889_040_037).abs() < 1e-9);

    // [DERIVED] weak coupling on resonance: equal energies, narrower mode first
    let w = polariton_modes_2x2(0.0f64, 1.0, 0.0, 150.0, 30.0);
    assert!((w[0].half_linewidth - 15.669_182_533).abs() < 1e-8);
    assert!((w[0].exciton_weight_sq() - 0.796_386_811_634).abs() < 1e-9);
    assert!((w[1].half_linewidth - 59.830_817_467).abs() < 1e-8);
}

#[test]
fn zero_field_gap_matches_closed_form() {
    let cfg = ExperimentConfig::paper_defaults();
    let map = temperature_map(&cfg, 0.0, 33.0, 40.0);
    let found = detect_anticrossings(&map, &DetectOptions { field: Some(0.0), ..DetectOptions::default() }).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].branch, BranchLabel::Degenerate);
    // [DERIVED] 2·sqrt(72² - ((147.9702 - 1)/4)²)
    assert!((found[0].min_gap - 123.8385).abs() < 0.02, "{}", found[0].min_gap);
}

#[test]
fn one_tesla_gaps_include_spectator_repulsion() {
    let cfg = ExperimentConfig::paper_defaults();
    let map = temperature_map(&cfg, 1.0, 33.0, 40.0);
    let found = detect_anticrossings(&map, &DetectOptions { field: Some(1.0), ..DetectOptions::default() }).unwrap();
    let gap = |b| found.iter().find(|a| a.branch == b).unwrap().min_gap;
    // [DERIVED] minimum over detuning of the 3x3 real-part gaps, numpy eigvals
    assert!((gap(BranchLabel::PlusOne) - 99.749).abs() < 0.01, "{}", gap(BranchLabel::PlusOne));
    assert!((gap(BranchLabel::MinusOne) - 92.649).abs() < 0.01, "{}", gap(BranchLabel::MinusOne));
}

#[test]
fn field_sweep_minimum_is_pulled_by_the_other_branch() {
    let cfg = ExperimentConfig::paper_defaults();
    let exc = cfg.exciton.with_e0(cfg.temperature.energy_at(34.0));
    let map = sweep_magnetic(
        &exc,
        &cfg.cavity,
        &cfg.coupling,
        &uniform_grid(1.5, 3.3, 0.3).unwrap(),
        &cfg.energy_grid().unwrap(),
        &cfg.synth_options(),
    )
    .unwrap();
    let found = detect_anticrossings(&map, &DetectOptions::default()).unwrap();
    let plus = found.iter().find(|a| a.branch == BranchLabel::PlusOne).unwrap();
    let bare = resonance_field(&exc, SpinBranch::PlusOne, &cfg.cavity).unwrap();
    assert!((bare - 2.4875).abs() < 1e-3);
    // [DERIVED] 3x3 gap minimum at 2.632 T; coarse 0.3 T grid vertex lands near it
    assert!((plus.tuning_at_min - 2.632).abs() < 0.05, "{}", plus.tuning_at_min);
    assert!((map.tuning[plus.frame] - bare).abs() <= 0.3);
}

#[test]
fn high_field_windows_recover_both_couplings() {
    let cfg = ExperimentConfig::paper_defaults();
    let b = 5.0;
    let split = branch_splitting(&cfg.exciton, b).unwrap();
    let opts = AntiCrossingOptions {
        model: AntiCrossingModel::VSystem { split },
        detect: DetectOptions { field: Some(b), ..DetectOptions::default() },
        ..AntiCrossingOptions::default()
    };
    // -1 branch resonance near 44.7 K; the +1 branch is outside the window
    let fit = fit_anticrossing(&temperature_map(&cfg, b, 42.2, 47.2), &opts).unwrap();
    assert!(fit.converged);
    assert!((fit.get("g_minus").unwrap() - 60.0).abs() < 0.5, "{:?}", fit.values);
    // +1 branch near 32.6 K
    let fit = fit_anticrossing(&temperature_map(&cfg, b, 30.1, 35.1), &opts).unwrap();
    assert!((fit.get("g_plus").unwrap() - 63.0).abs() < 0.5, "{:?}", fit.values);
}

#[test]
fn noisy_map_still_fits() {
    let cfg = ExperimentConfig::paper_defaults();
    let clean = temperature_map(&cfg, 0.0, 31.0, 42.0);
    let opts = AntiCrossingOptions::default();
    for seed in [1, 2, 3] {
        let noisy = add_noise(&clean, NoiseModel::Gaussian, 0.01, seed).unwrap();
        let fit = fit_anticrossing(&noisy, &opts).unwrap();
        assert!(fit.converged);
        assert!((fit.get("g").unwrap() - 72.0).abs() < 1.5, "seed {seed}: {:?}", fit.values);
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdcav::io::{Report, PAPER_DEFAULTS};
use qdcav::ExperimentConfig;

fn qdcav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdcav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    qdcav(args).status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> (PathBuf, String) {
    let p = dir.join(name);
    let s = p.to_str().unwrap().to_string();
    (p, s)
}

#[test]
fn zeeman_table_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, csv_s) = path(dir.path(), "z.csv");
    let (rep, rep_s) = path(dir.path(), "z.txt");
    assert_eq!(code(&["simulate-zeeman", "--out", &csv_s]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("field,e_plus,e_minus\n"));
    let e0 = ExperimentConfig::paper_defaults().exciton.e0;
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first, vec![0.0, e0, e0]);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 7.0);
    // [DERIVED] -83.9315·7 + 6·49 and +83.9315·7 + 6·49
    assert!((last[1] - e0 + 293.5205).abs() < 1e-3, "{}", last[1] - e0);
    assert!((last[2] - e0 - 881.5205).abs() < 1e-3, "{}", last[2] - e0);

    let out = qdcav(&["fit", "zeeman", &csv_s, "--out", &rep_s]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(std::fs::read_to_string(&rep).unwrap(), stdout);
    let block = Report::parse_block(&stdout).unwrap();
    assert!((block["g_diff"].as_f64().unwrap() - 2.9).abs() < 2.9e-6);
    assert!((block["gamma2"].as_f64().unwrap() - 6.0).abs() < 6e-6);
    assert!(stdout.contains("# mode = zeeman\n"));
}

#[test]
fn zeeman_table_in_nm_fits_the_same() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, csv_s) = path(dir.path(), "z.csv");
    assert_eq!(code(&["simulate-zeeman", "--out", &csv_s, "--unit", "nm"]), 0);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("field,lambda_plus,lambda_minus\n"));
    let out = qdcav(&["fit", "zeeman", &csv_s]);
    let block = Report::parse_block(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!((block["g_diff"].as_f64().unwrap() - 2.9).abs() < 1e-6);
}

#[test]
fn zero_field_grid_gives_equal_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::paper_defaults();
    cfg.grids.zeeman = qdcav::io::GridSpec::new(0.0, 0.0, 0.25);
    let (cfg_p, cfg_s) = path(dir.path(), "c.toml");
    std::fs::write(&cfg_p, cfg.to_toml().unwrap()).unwrap();
    let (csv, csv_s) = path(dir.path(), "z.csv");
    assert_eq!(code(&["simulate-zeeman", "--config", &cfg_s, "--out", &csv_s]), 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], row[2]);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn sweep_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, csv_s) = path(dir.path(), "s.csv");
    assert_eq!(code(&["simulate-sweep", "--axis", "B", "--out", &csv_s]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tuning,unit_value,intensity"));
    assert!(!text.lines().any(|l| l.trim().is_empty()));
    let fields: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    let mut distinct = fields.clone();
    distinct.dedup();
    assert_eq!(distinct.len(), 7);
    assert_eq!(fields.len(), 7 * 1401);
}

#[test]
fn sweep_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, a_s) = path(dir.path(), "a.csv");
    let (b, b_s) = path(dir.path(), "b.csv");
    let (c, c_s) = path(dir.path(), "c.csv");
    for (out, seed) in [(&a_s, "5"), (&b_s, "5"), (&c_s, "6")] {
        assert_eq!(code(&["simulate-sweep", "--axis", "T", "--noisy", "--seed", seed, "--out", out]), 0);
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn anticrossing_fit_round_trip_in_nm() {
    let dir = tempfile::tempdir().unwrap();
    let (_, csv_s) = path(dir.path(), "t.csv");
    let (plot, plot_s) = path(dir.path(), "t.gp");
    assert_eq!(
        code(&["simulate-sweep", "--axis", "T", "--unit", "nm", "--out", &csv_s, "--plot-script", &plot_s]),
        0
    );
    assert!(std::fs::read_to_string(plot).unwrap().contains(&csv_s));
    let out = qdcav(&["fit", "anticrossing", &csv_s, "--unit", "nm"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let block = Report::parse_block(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!((block["g"].as_f64().unwrap() - 72.0).abs() < 0.5);
    assert_eq!(block["strong_coupling"].as_bool(), Some(true));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, cfg_s) = path(dir.path(), "bad.toml");
    std::fs::write(&cfg, PAPER_DEFAULTS.replace("q = 9000.0", "q = -5.0")).unwrap();
    let (_, out_s) = path(dir.path(), "z.csv");
    let out = qdcav(&["simulate-zeeman", "--config", &cfg_s, "--out", &out_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cavity"), "{}", stderr(&out));
    assert!(!dir.path().join("z.csv").exists());

    std::fs::write(&cfg, "this is not toml").unwrap();
    assert_eq!(code(&["simulate-zeeman", "--config", &cfg_s, "--out", &out_s]), 2);
}

#[test]
fn empty_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::paper_defaults();
    cfg.grids.temperature = qdcav::io::GridSpec::new(5.0, 2.0, 0.1);
    let text = cfg.to_toml().unwrap();
    let (p, s) = path(dir.path(), "c.toml");
    std::fs::write(p, text).unwrap();
    let (_, out_s) = path(dir.path(), "s.csv");
    let out = qdcav(&["simulate-sweep", "--axis", "T", "--config", &s, "--out", &out_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grids.temperature"), "{}", stderr(&out));
}

#[test]
fn broken_csv_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, csv_s) = path(dir.path(), "s.csv");
    assert_eq!(code(&["simulate-sweep", "--axis", "T", "--out", &csv_s]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();

    // cut inside the third frame
    let (cut, cut_s) = path(dir.path(), "cut.csv");
    std::fs::write(&cut, lines[..1 + 2 * 1401 + 300].join("\n")).unwrap();
    let out = qdcav(&["fit", "anticrossing", &cut_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2804"), "{}", stderr(&out));

    // truncated to a single frame
    std::fs::write(&cut, lines[..5].join("\n")).unwrap();
    assert_eq!(code(&["fit", "anticrossing", &cut_s]), 2);

    let mut bad = lines.clone();
    bad[10] = "31,abc,0.5";
    std::fs::write(&cut, bad.join("\n")).unwrap();
    let out = qdcav(&["fit", "anticrossing", &cut_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 11"), "{}", stderr(&out));

    let mut blank = lines.clone();
    blank.insert(4, "");
    std::fs::write(&cut, blank.join("\n")).unwrap();
    let out = qdcav(&["fit", "anticrossing", &cut_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 5"), "{}", stderr(&out));

    assert_eq!(code(&["fit", "anticrossing", "/nonexistent/file.csv"]), 2);
}

#[test]
fn flat_map_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::paper_defaults();
    // exciton far outside the energy window: only the cavity line is left
    cfg.exciton.e0 += 20_000.0;
    cfg.temperature.e_ref += 20_000.0;
    let (p, s) = path(dir.path(), "c.toml");
    std::fs::write(p, cfg.to_toml().unwrap()).unwrap();
    let (_, csv_s) = path(dir.path(), "s.csv");
    assert_eq!(code(&["simulate-sweep", "--axis", "T", "--config", &s, "--out", &csv_s]), 0);
    assert_eq!(code(&["fit", "anticrossing", &csv_s, "--config", &s]), 3);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&["reproduce", "fig4"]), 2);
    assert_eq!(code(&["simulate-sweep", "--axis", "X", "--out", "x.csv"]), 2);
    assert_eq!(code(&["simulate-zeeman"]), 2);
    assert_eq!(code(&["simulate-zeeman", "--out", "z.csv", "--unit", "meV"]), 2);
    assert_eq!(code(&["fit", "anticrossing", "x.csv", "--window", "5:1"]), 2);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn reproduce_writes_table_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let out_s = dir.path().to_str().unwrap();
    let out = qdcav(&["reproduce", "fig1b", "--out", out_s]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = std::fs::read_to_string(dir.path().join("fig1b_comparison.txt")).unwrap();
    assert_eq!(table, String::from_utf8(out.stdout).unwrap());
    assert!(table.lines().filter(|l| l.ends_with("pass")).count() >= 4);
    assert!(dir.path().join("fig1b_zeeman.csv").exists());
    assert!(dir.path().join("fig1b_fit.txt").exists());
}

#[test]
fn reproduce_flags_missed_targets() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::paper_defaults();
    cfg.exciton.gamma2 = 9.0;
    let (p, s) = path(dir.path(), "c.toml");
    std::fs::write(p, cfg.to_toml().unwrap()).unwrap();
    let out = qdcav(&["reproduce", "fig1b", "--config", &s, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("gamma2"), "{}", stderr(&out));
}

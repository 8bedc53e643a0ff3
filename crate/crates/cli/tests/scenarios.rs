use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nhdyn::oracle::oscillator_limit_cycle;
use nhdyn_cli::config::{parse_config, Overrides};
use nhdyn_cli::{main_with, EXIT_CONFIG, EXIT_FAILURE, EXIT_NUMERICAL, EXIT_OK};

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        "nhdyn".to_string(),
        "run".into(),
        config.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    main_with(args)
}

/// Columns of a CSV file keyed by header name.
fn read_columns(path: &Path) -> Vec<(String, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let mut cols: Vec<(String, Vec<f64>)> = headers.into_iter().map(|h| (h, vec![])).collect();
    for record in reader.records() {
        for (col, field) in cols.iter_mut().zip(record.unwrap().iter()) {
            col.1.push(field.parse().unwrap());
        }
    }
    cols
}

fn column<'a>(cols: &'a [(String, Vec<f64>)], name: &str) -> &'a [f64] {
    &cols
        .iter()
        .find(|c| c.0 == name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .1
}

#[test]
fn damped_ho_defaults_follow_the_classical_motion() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scenario = \"damped_ho\"\n");
    assert_eq!(run(&config, &dir.path().join("out"), &[]), EXIT_OK);
    let cols = read_columns(&dir.path().join("out/trajectory.csv"));
    let names: Vec<&str> = cols.iter().map(|c| c.0.as_str()).collect();
    assert_eq!(
        names,
        [
            "t",
            "q",
            "p",
            "H",
            "norm",
            "q_classical",
            "p_classical",
            "norm_classical",
            "q_limit",
            "p_limit"
        ]
    );
    let t = column(&cols, "t");
    assert_eq!(t.len(), 1201);
    assert_eq!(*t.last().unwrap(), 60.0);
    let q = column(&cols, "q");
    let q_cl = column(&cols, "q_classical");
    let worst = q
        .iter()
        .zip(q_cl)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "max |<q> - q_cl| = {worst}");
    let norm = column(&cols, "norm");
    let norm_cl = column(&cols, "norm_classical");
    for (n, c) in norm.iter().zip(norm_cl) {
        assert!((n / c - 1.0).abs() < 1e-6);
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "scenario = \"driven_ho\"\nt_end = 5.0\nn_steps = 100\ndim = 60\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&config, &a, &[]), EXIT_OK);
    assert_eq!(run(&config, &b, &[]), EXIT_OK);
    assert_eq!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(b.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn cat_state_starts_centred_and_joins_the_limit_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scenario = \"cat_state\"\ndim = 48\n");
    assert_eq!(run(&config, &dir.path().join("out"), &[]), EXIT_OK);
    let cols = read_columns(&dir.path().join("out/trajectory.csv"));
    let (t, q, q_lim) = (
        column(&cols, "t"),
        column(&cols, "q"),
        column(&cols, "q_limit"),
    );
    assert!(q[0].abs() < 1e-14);
    let late = t
        .iter()
        .zip(q.iter().zip(q_lim))
        .filter(|(t, _)| **t > 140.0)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(late < 1e-5, "late deviation {late}");
    assert_eq!(column(&cols, "q_classical_a")[0], 2.0);
    assert_eq!(column(&cols, "q_classical_b")[0], -2.0);
}

#[test]
fn meta_echo_reruns_to_the_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "scenario = \"anharmonic\"\nbetas = [0.4]\nt_end = 3.0\nn_steps = 30\ndim = 64\n",
    );
    let first = dir.path().join("first");
    assert_eq!(run(&config, &first, &[]), EXIT_OK);
    let meta = fs::read_to_string(first.join("meta.toml")).unwrap();
    assert!(meta.contains("figure = \"Fig. 4\""));
    let second = dir.path().join("second");
    assert_eq!(run(&first.join("meta.toml"), &second, &[]), EXIT_OK);
    assert_eq!(
        fs::read(first.join("trajectory_beta_0.4.csv")).unwrap(),
        fs::read(second.join("trajectory_beta_0.4.csv")).unwrap()
    );
}

#[test]
fn invalid_configs_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), "");
    for set in ["gamma=-0.1", "dim=1", "gamma_typo=0.1", "n_steps=abc"] {
        assert_eq!(
            run(&config, &out, &["--scenario", "damped_ho", "--set", set]),
            EXIT_CONFIG,
            "{set}"
        );
    }
    assert_eq!(
        run(&dir.path().join("missing.toml"), &out, &[]),
        EXIT_CONFIG
    );
    assert_eq!(run(&config, &out, &[]), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn resonant_undamped_limit_cycle_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scenario = \"husimi\"\ngamma = 0.0\n");
    assert_eq!(run(&config, &dir.path().join("out"), &[]), EXIT_NUMERICAL);
}

#[test]
fn bloch_and_fixed_points_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scenario = \"bloch\"\nl = 10\n");
    let out = dir.path().join("bloch");
    assert_eq!(run(&config, &out, &[]), EXIT_OK);
    let cols = read_columns(&out.join("trajectory.csv"));
    assert_eq!(column(&cols, "t").len(), 501);
    for k in ["sx", "sy", "sz"] {
        let quantum = column(&cols, k)[0];
        let classical = column(&cols, &format!("{k}_classical"))[0];
        assert!((quantum - classical).abs() < 1e-12, "{k} at t = 0");
    }

    let out = dir.path().join("fp");
    assert_eq!(
        run(&config, &out, &["--scenario", "fixed_points"]),
        EXIT_CONFIG
    );
    assert_eq!(
        run(
            &write_config(dir.path(), ""),
            &out,
            &["--scenario", "fixed_points"]
        ),
        EXIT_OK
    );
    let text = fs::read_to_string(out.join("fixed_points.csv")).unwrap();
    let kinds: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(kinds.len(), 4);
    for kind in ["sink", "source", "saddle", "center"] {
        assert!(kinds.contains(&kind), "{kinds:?}");
    }
}

#[test]
fn husimi_ridge_follows_the_classical_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "scenario = \"husimi\"\nhusimi_n_q = 41\nhusimi_n_p = 41\nhusimi_samples = 16\n\
         t_end = 20.0\nn_steps = 100\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&config, &out, &[]), EXIT_OK);
    let husimi = read_columns(&out.join("husimi.csv"));
    assert_eq!(column(&husimi, "value").len(), 41 * 41);
    let ridge = read_columns(&out.join("ridge.csv"));
    let spec = parse_config(&fs::read_to_string(&config).unwrap(), &Overrides::default())
        .unwrap()
        .oscillator_spec(0.0);
    let cycle = oscillator_limit_cycle(&spec).unwrap();
    let curve: Vec<(f64, f64)> = (0..4000)
        .map(|k| cycle.point(2.0 * PI * k as f64 / 4000.0))
        .collect();
    let cell = 0.5 * 2f64.sqrt();
    for (q, p) in column(&ridge, "q").iter().zip(column(&ridge, "p")) {
        let nearest = curve
            .iter()
            .map(|(a, b)| (q - a).hypot(p - b))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < cell, "ridge point ({q}, {p}) at {nearest}");
    }
    let meta = fs::read_to_string(out.join("meta.toml")).unwrap();
    assert!(meta.starts_with("# ridge lies within"));
}

#[test]
fn verify_subset_reports_each_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scenario = \"verify\"\ncriteria = [3, 9]\n");
    let out = dir.path().join("out");
    assert_eq!(run(&config, &out, &[]), EXIT_OK);
    let text = fs::read_to_string(out.join("verify.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "id,name,passed,value,threshold,detail");
    assert!(rows[1].starts_with("3,norm law,true,"));
    assert!(rows[2].starts_with("9,"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn binary_maps_outcomes_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let bin = env!("CARGO_BIN_EXE_nhdyn");
    let status = |args: &[&str]| {
        Command::new(bin)
            .arg("run")
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join("out"))
            .args(args)
            .output()
            .unwrap()
    };
    let ok = status(&["--scenario", "verify", "--set", "criteria=[9]"]);
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS #9"));

    let bad = status(&["--scenario", "damped_ho", "--set", "gamma=-0.1"]);
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("`gamma`"));

    // The short-time anharmonic criterion is known to fail.
    let failed = status(&["--scenario", "verify", "--set", "criteria=[7]"]);
    assert_eq!(failed.status.code(), Some(EXIT_FAILURE));
    assert!(String::from_utf8_lossy(&failed.stdout).contains("FAIL #7"));
}

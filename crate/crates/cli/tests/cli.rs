use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nomograph::MultiPoly;
use nomograph_cli::{fmt_num, run, sweep_degrees, CliError, RunConfig};

fn benchmark() -> MultiPoly {
    let inner = MultiPoly::from_terms(
        2,
        vec![(vec![1, 0], 1.0), (vec![1, 1], 1.0), (vec![0, 1], 1.0)],
    )
    .unwrap();
    inner.pow(2).scale(1.0 / 9.0)
}

fn additive() -> MultiPoly {
    MultiPoly::from_terms(2, vec![(vec![1, 0], 0.5), (vec![0, 1], 0.5)]).unwrap()
}

fn write_input(dir: &Path, f: &MultiPoly) -> PathBuf {
    let path = dir.join("input.json");
    std::fs::write(&path, serde_json::to_string(f).unwrap()).unwrap();
    path
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nomograph"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn malformed_json_exits_one_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.json");
    std::fs::write(&input, "{\"num_vars\": 2, \"terms\": [").unwrap();
    let out = tmp.path().join("out");
    let o = bin(&[
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
    assert!(!out.exists());
}

#[test]
fn range_violation_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let f = MultiPoly::from_terms(1, vec![(vec![1], 2.0)]).unwrap();
    let input = write_input(tmp.path(), &f);
    let out = tmp.path().join("out");
    let o = bin(&[
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("range violation"));
    assert!(!out.exists());
}

#[test]
fn config_bounds_are_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &additive());
    for (flag, value) in [
        ("--degree", "0"),
        ("--degree", "33"),
        ("--grid", "1"),
        ("--epsilon", "1.5"),
    ] {
        let o = bin(&[
            "--input",
            input.to_str().unwrap(),
            flag,
            value,
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(1), "{flag} {value}");
    }
}

#[test]
fn exit_code_tracks_the_epsilon_target() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &benchmark());
    let out = tmp.path().join("out");
    let base = [
        "--input",
        input.to_str().unwrap(),
        "--degree",
        "5",
        "--grid",
        "11",
        "--out",
        out.to_str().unwrap(),
    ];
    let missed = bin(&[&base[..], &["--epsilon", "1e-3"]].concat());
    assert_eq!(missed.status.code(), Some(2));
    let met = bin(&[&base[..], &["--epsilon", "0.05"]].concat());
    assert_eq!(met.status.code(), Some(0));
    for name in [
        "report.json",
        "variances.csv",
        "phi_k.csv",
        "psi.csv",
        "error.csv",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &benchmark());
    let mut cfg = RunConfig::new(&input, tmp.path().join("unused"));
    cfg.degree = 6;
    cfg.grid_n = 21;
    cfg.deterministic = true;
    cfg.dump_forms = true;
    cfg.dump_sdp = true;
    cfg.dump_cone = true;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    let names: Vec<&str> = a.file_names().collect();
    assert!(names.contains(&"sdp.json") && names.contains(&"cone.json"));
    for name in names {
        assert_eq!(a.contents(name), b.contents(name), "{name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(a.contents("report.json").unwrap()).unwrap();
    assert!(report["timings_s"].is_null());
}

#[test]
fn csv_layout_and_ratio_consistency() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &benchmark());
    let mut cfg = RunConfig::new(&input, tmp.path());
    cfg.degree = 8;
    cfg.grid_n = 11;
    let outcome = run(&cfg).unwrap();

    let phi = outcome.contents("phi_k.csv").unwrap();
    assert!(!phi.contains('\r'));
    let lines: Vec<&str> = phi.lines().collect();
    assert_eq!(lines[0], "x,phi_1,phi_2");
    assert_eq!(lines.len(), 1 + 1001);

    let err = outcome.contents("error.csv").unwrap();
    assert_eq!(err.lines().count(), 1 + 11 * 11);

    let var = outcome.contents("variances.csv").unwrap();
    let mut it = var.lines();
    let header: Vec<&str> = it.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        ["sigma2_{1}", "sigma2_{2}", "sigma2", "ratio", "epsilon"]
    );
    let v: Vec<f64> = it
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!(((v[0] + v[1]) / v[2] - v[3]).abs() <= 1e-9);
    assert!((1.0 - v[3] - v[4]).abs() <= 1e-15);

    let psi = outcome.contents("psi.csv").unwrap();
    let rows: Vec<Vec<f64>> = psi
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4097);
    assert!(rows
        .windows(2)
        .all(|w| w[1][0] >= w[0][0] && w[1][1] > w[0][1]));
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[4096][1], 1.0);
}

#[test]
fn anova_only_ratio_column_matches_variances() {
    let tmp = tempfile::tempdir().unwrap();
    let f = MultiPoly::from_terms(
        3,
        vec![
            (vec![1, 0, 0], 0.3),
            (vec![0, 1, 1], 0.4),
            (vec![1, 1, 1], 0.3),
        ],
    )
    .unwrap();
    let input = write_input(tmp.path(), &f);
    let mut cfg = RunConfig::new(&input, tmp.path());
    cfg.anova_only = true;
    cfg.max_order = Some(3);
    let outcome = run(&cfg).unwrap();
    let var = outcome.contents("variances.csv").unwrap();
    let mut it = var.lines();
    let header: Vec<&str> = it.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 7 + 3);
    let v: Vec<f64> = it
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    let first: f64 = v[..3].iter().sum();
    let all: f64 = v[..7].iter().sum();
    assert!((first / v[7] - v[8]).abs() <= 1e-9);
    assert!((all - v[7]).abs() <= 1e-12);
}

#[test]
fn sweep_on_additive_input_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &additive());
    let mut cfg = RunConfig::new(&input, tmp.path());
    cfg.grid_n = 11;
    let (rows, csv) = sweep_degrees(&cfg, &[1]).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].sdr_objective - 1.0).abs() < 1e-9);
    assert!(csv.starts_with("degree,sdr_objective,ratio,sup_err\n1,"));
    assert!(matches!(
        sweep_degrees(&cfg, &[0]),
        Err(CliError::Config(_))
    ));
}

#[test]
fn sweep_objective_grows_with_degree() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &benchmark());
    let mut cfg = RunConfig::new(&input, tmp.path());
    cfg.grid_n = 11;
    let (rows, _) = sweep_degrees(&cfg, &[5, 20]).unwrap();
    assert_eq!(rows[0].degree, 5);
    assert!(rows[1].sdr_objective >= rows[0].sdr_objective - 1e-6);
    assert!(rows[1].ratio >= rows[0].ratio - 1e-6);
}

#[test]
fn distribute_mean_moves_the_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &benchmark());
    let mut cfg = RunConfig::new(&input, tmp.path());
    cfg.degree = 5;
    cfg.grid_n = 11;
    cfg.deterministic = true;
    let plain = run(&cfg).unwrap();
    cfg.distribute_mean = true;
    let folded = run(&cfg).unwrap();
    let read = |o: &nomograph_cli::Outcome| -> serde_json::Value {
        serde_json::from_str(o.contents("report.json").unwrap()).unwrap()
    };
    let (p, q) = (read(&plain), read(&folded));
    assert_eq!(q["mean"].as_f64(), Some(0.0));
    let shift = p["mean"].as_f64().unwrap() / 2.0;
    let c0 = |v: &serde_json::Value, k: usize| v["inner"][k][0].as_f64().unwrap();
    assert!((c0(&q, 0) - c0(&p, 0) - shift).abs() < 1e-14);
    // Same approximation either way.
    assert_eq!(
        plain.contents("error.csv").unwrap().lines().count(),
        folded.contents("error.csv").unwrap().lines().count()
    );
    assert!((p["sup_err"].as_f64().unwrap() - q["sup_err"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn number_format_has_seventeen_digits() {
    assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
    assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
    assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
}

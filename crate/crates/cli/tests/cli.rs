use std::path::Path;
use std::process::Command;

use dpt::{parse_config, run, Cell, Report};
use dpt_core::kpo::{self, KpoParams};

fn dpt(dir: &Path, args: &[&str], config: &str) -> std::process::Output {
    let path = dir.join("run.cfg");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dpt"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env_remove("DPT_THREADS")
        .output()
        .unwrap()
}

const KPO: &str = "model = kpo\ndelta = 1\ng = 0.5\nkappa = 0.3\n";

#[test]
fn response_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpt(dir.path(), &["response"], &format!("{KPO}omega_min = -2\nomega_max = 2\nomega_points = 41\n"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,A,C,S"));
    assert_eq!(lines.count(), 41);
    assert!(!text.contains('\r'));
}

#[test]
fn steady_states_json_round_trip_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpt(dir.path(), &["steady-states", "--format", "json"], KPO);
    assert!(out.status.success());
    let report = Report::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.table.rows.len(), 5);

    let p = KpoParams::real(1.0, 1.0, 0.5, 0.3).unwrap();
    let states = kpo::open_steady_states(&p);
    let re = report.table.column("alpha_re").unwrap();
    let im = report.table.column("alpha_im").unwrap();
    let stable = report.table.column("stable").unwrap();
    for (i, s) in states.iter().enumerate() {
        assert_eq!(re[i], &Cell::Real(s.alpha.re));
        assert_eq!(im[i], &Cell::Real(s.alpha.im));
        let st = kpo::stability_report(&p, s).unwrap().stable;
        assert_eq!(stable[i], &Cell::Flag(st));
    }

    // Same document as the in-process run.
    let cfg = parse_config(&format!("{KPO}command = steady-states\nformat = json")).unwrap();
    let direct = run(&cfg, None).unwrap().report(&cfg);
    assert_eq!(report, direct);
}

#[test]
fn out_path_and_format_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("res.json");
    let out = dpt(dir.path(), &["variance", "--format", "json", "--out", target.to_str().unwrap()], &format!("{KPO}format = csv\n"));
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report = Report::from_json(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(report.command, "variance");
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpt(dir.path(), &["sweep"], "model = kpo\nkerr = 0\nbogus = 1\n");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kerr") && err.contains("bogus"), "{err}");

    let out = dpt(dir.path(), &["sweep"], "");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("model"));

    let path = dir.path().join("missing.cfg");
    let out = Command::new(env!("CARGO_BIN_EXE_dpt")).args(["sweep", "--config"]).arg(path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_variable_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "model = kpo\nkappa = 0.4\nx_points = 3\ny_points = 3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dpt"))
        .args(["sweep", "--config"])
        .arg(&path)
        .env("DPT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unstable_state_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpt(dir.path(), &["variance"], "model = kpo\ndelta = 0\ng = 0.5\nkappa = 0.3\n");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("unstable"));
}

#[test]
fn sweep_labels_cover_kpo_open_regions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dpt(dir.path(), &["sweep"], "model = kpo\nkappa = 0.4\nx_points = 41\ny_points = 41\n");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("delta,g,label\n"));
    let mut labels: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    labels.sort();
    labels.dedup();
    assert_eq!(labels, vec!["I", "II", "III", "IIIp", "IIp"]);
}

//! End-to-end runs of the `coupled-wave` binary.

use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coupled-wave")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_exit_codes() {
    let stable = bin(&["classify", "--alpha", "1", "--beta", "2", "--gamma", "-2", "--eta", "1"]);
    assert_eq!(code(&stable), 0);
    assert!(stdout(&stable).starts_with("STABLE, form=Rotation(a=1,b=2)"));

    let unstable = bin(&["classify", "--alpha", "1", "--beta", "0", "--gamma", "0", "--eta", "-1"]);
    assert_eq!(code(&unstable), 2);
    assert!(stdout(&unstable).starts_with("UNSTABLE"));

    let missing = bin(&["classify", "--alpha", "1"]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--beta"));

    assert_eq!(code(&bin(&[])), 1);
}

#[test]
fn classify_triangular_form() {
    let o = bin(&["classify", "--form", "triangular", "--a", "2", "--b", "1", "--c", "2"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("omega≈2.000000, p=3"), "{s}");
    assert!(s.contains("Jordan chain length 4"), "{s}");
}

#[test]
fn oracle_passes_and_detects_faults() {
    let ok = bin(&["oracle", "--modes", "16"]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("ALL CHECKS PASS"));

    let bad = bin(&["oracle", "--modes", "16", "--perturb-eigenvalue", "1e-3"]);
    assert_eq!(code(&bad), 3);
    assert!(stdout(&bad).contains("eigenvalues-vs-quartic-roots"));

    assert_eq!(code(&bin(&["oracle", "--modes", "0"])), 1);
}

#[test]
fn oracle_on_defective_case() {
    let o = bin(&["oracle", "--modes", "8", "--form", "triangular", "--a", "2", "--b", "1", "--c", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = bin(&[
            "simulate", "--alpha", "1", "--beta", "1", "--gamma", "-1", "--eta", "1", "--modes", "8", "--t-end", "10",
            "--samples", "101", "--seed", "7", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains("omega_pred=0.514132"));
        fs::read(out.join("trace.csv")).unwrap()
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("t,E,E_kappa,logE\n"));
    assert_eq!(text.lines().count(), 102);
    assert!(!text.contains('\r'));
}

#[test]
fn simulate_triangular_reports_weighted_energy() {
    let o = bin(&[
        "simulate", "--form", "triangular", "--a", "1", "--b", "2", "--c", "3", "--modes", "4", "--t-end", "5",
        "--samples", "11", "--init-coeffs", "1,0,0,0;0,0,1,0",
    ]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let second = s.lines().nth(1).unwrap();
    let cols: Vec<&str> = second.split(',').collect();
    assert_eq!(cols.len(), 4);
    assert!(!cols[2].is_empty());
}

#[test]
fn simulate_from_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("init.txt");
    let m = 63;
    let mut text = String::from("# u u_t v v_t\n");
    for j in 1..=m {
        let x = j as f64 * std::f64::consts::PI / (m + 1) as f64;
        text.push_str(&format!("{} 0 0 0\n", x.sin()));
    }
    fs::write(&path, text).unwrap();
    let o = bin(&[
        "simulate", "--alpha", "1", "--beta", "0", "--gamma", "0", "--eta", "1", "--modes", "4", "--samples", "3",
        "--t-end", "1", "--init-file", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let e0: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((e0 - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn conflicting_initial_data_rejected() {
    let o = bin(&[
        "simulate", "--alpha", "1", "--beta", "0", "--gamma", "0", "--eta", "1", "--init", "random", "--init-coeffs",
        "1,0,0,0",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# system\nalpha = 1\nbeta = 0\ngamma = 0\neta = -1\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&bin(&["classify", "--config", c])), 2);
    assert_eq!(code(&bin(&["classify", "--config", c, "--eta", "1"])), 0);

    fs::write(&cfg, "alpha = one\n").unwrap();
    let o = bin(&["classify", "--config", c]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn spectrum_json_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let args = |d: &str| {
        vec![
            "spectrum".to_string(),
            "--form".into(),
            "triangular".into(),
            "--a".into(),
            "2".into(),
            "--b".into(),
            "1".into(),
            "--c".into(),
            "5".into(),
            "--modes".into(),
            "3".into(),
            "--out".into(),
            dir.path().join(d).to_str().unwrap().into(),
        ]
    };
    let run = |d: &str| {
        let a = args(d);
        let o = bin(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0);
        fs::read_to_string(dir.path().join(d).join("spectrum.json")).unwrap()
    };
    let json = run("x");
    assert_eq!(json, run("y"));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v[0]["case_tag"], "II-2.2");
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn resolvent_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "resolvent", "--form", "rotation", "--a", "1", "--b", "1", "--xi-max", "5", "--grid-step", "0.1", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("STABLE"));
    let csv = fs::read_to_string(dir.path().join("resolvent.csv")).unwrap();
    assert!(csv.starts_with("xi,sup_norm,argmax_n\n"));
    assert_eq!(csv.lines().count(), 102);
}

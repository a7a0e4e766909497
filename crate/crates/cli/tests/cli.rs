use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn compass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compass")).args(args).env_remove("COMPASS_OUT_DIR").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = compass(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Csv {
    meta: Value,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let meta = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
        let columns = lines.next().unwrap().split(',').map(str::to_owned).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
        Csv { meta, columns, rows }
    }

    fn col(&self, name: &str) -> Vec<&str> {
        let i = self.columns.iter().position(|c| c == name).unwrap();
        self.rows.iter().map(|r| r[i].as_str()).collect()
    }

    fn nums(&self, name: &str) -> Vec<f64> {
        self.col(name).iter().map(|v| v.parse().unwrap()).collect()
    }
}

fn code(args: &[&str]) -> i32 {
    compass(args).status.code().unwrap()
}

#[test]
fn fock_vacuum_distribution_is_one_row() {
    let csv = Csv::parse(&ok(&["state", "fock", "--n", "0"]));
    assert_eq!(csv.rows, vec![vec!["0".to_string(), "1e0".to_string()]]);
    assert_eq!(csv.meta["tail_mass"], 0.0);
}

#[test]
fn number_supports() {
    let ssdns = Csv::parse(&ok(&["state", "ssdns", "--r", "0.3", "--alpha", "1.8", "--n", "1"]));
    for (m, p) in ssdns.nums("prob").iter().enumerate() {
        if m % 2 == 0 {
            assert!(*p < 1e-20, "even level {m} populated");
        }
    }
    let ks = Csv::parse(&ok(&["state", "compass", "--beta", "1.41", "--l", "2", "--sign", "+"]));
    assert_eq!(ks.meta["support_step"], 4);
    for (m, p) in ks.nums("prob").iter().enumerate() {
        assert!(m % 4 == 2 || *p < 1e-20);
    }
}

#[test]
fn fidelity_table_rows() {
    let csv = Csv::parse(&ok(&["fidelity-table", "--self-check"]));
    let f = csv.nums("fidelity");
    assert_eq!(f.len(), 8);
    assert!((f[1] - 0.9997).abs() < 5e-4);
    assert!((f[3] - 0.9998).abs() < 5e-4);
    assert!((f[7] - 1.0).abs() < 1e-12);
    let flags = csv.col("flag");
    assert_eq!(flags[3], "relabelled_l");
    assert_eq!(flags[6], "ambiguous_l");
    assert_eq!(flags[7], "self");

    let single = Csv::parse(&ok(&["fidelity-table", "ssns", "--r", "0.3", "--n", "2", "--beta", "1.41", "--l", "2", "--sign", "+"]));
    assert_eq!(single.rows.len(), 1);
    assert!((single.nums("fidelity")[0] - f[1]).abs() < 1e-15);
}

#[test]
fn wigner_fields() {
    let vac = Csv::parse(&ok(&["wigner", "fock", "--n", "0", "--nx", "21", "--np", "21"]));
    let w = vac.nums("W");
    let max = w.iter().copied().fold(f64::MIN, f64::max);
    assert!((max - std::f64::consts::FRAC_1_PI).abs() < 1e-6);
    assert_eq!(w.len(), 21 * 21);
    assert!((vac.meta["integral"].as_f64().unwrap() - 1.0).abs() < 1e-3);

    let n = 41;
    let field = Csv::parse(&ok(&["wigner", "ssdns", "--r", "0.45", "--alpha", "2", "--n", "1", "--nx", "41", "--np", "41", "--x-min", "-2", "--x-max", "2", "--p-min", "-2", "--p-max", "2"]));
    let w = field.nums("W");
    let changes = |vals: Vec<f64>| vals.windows(2).filter(|p| p[0] * p[1] < 0.0).count();
    let mid = n / 2;
    assert!(changes((0..n).map(|i| w[i * n + mid]).collect()) >= 1, "no sign change along x");
    assert!(changes((0..n).map(|j| w[mid * n + j]).collect()) >= 1, "no sign change along p");
}

#[test]
fn wigner_sidecar_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_compass"))
        .args(["wigner", "ssns", "--r", "0.45", "--n", "4", "--nx", "31", "--np", "31", "--out", "w.csv"])
        .env("COMPASS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("w.csv.json")).unwrap()).unwrap();
    assert_eq!(side["grid"]["nx"], 31);
    assert!(side["purity"].as_f64().is_some());
    let csv = Csv::parse(&std::fs::read_to_string(dir.path().join("w.csv")).unwrap());
    assert_eq!(csv.columns, ["x", "p", "W"]);
}

#[test]
fn damping_without_loss_is_exact() {
    let csv = Csv::parse(&ok(&["damping", "--state", "fock", "--n", "1", "--kappa", "0", "--t", "1"]));
    assert_eq!(csv.nums("delta_kappa"), vec![0.0]);
}

#[test]
fn fig6_table() {
    let csv = Csv::parse(&ok(&["damping", "--fig6", "--beta-min", "0.05", "--beta-max", "0.05", "--steps", "1"]));
    assert!(csv.nums("ks0_minus_var_over_mean2")[0] < 1e-3);
}

fn config_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

#[test]
fn ratio_config_finds_crossings() {
    let csv = Csv::parse(&ok(&["ratio", "--config", &config_path("fig5b.cfg")]));
    let marks: Vec<&str> = csv.col("crossing").into_iter().filter(|m| !m.is_empty()).collect();
    assert!(marks.iter().any(|m| *m == "mean" || *m == "both"));
    assert!(marks.iter().any(|m| *m == "variance" || *m == "both"));
    assert!(!csv.meta["variance_crossings"].as_array().unwrap().is_empty());
}

#[test]
fn h2_scan_reports_best_row() {
    let csv = Csv::parse(&ok(&["prepare", "h2", "--n", "0", "--g1", "0.1", "--g2", "0.2", "--omega", "1", "--scan-t"]));
    let best = &csv.meta["best_closed"];
    assert!(best["fidelity"].as_f64().unwrap() > 0.99);
    let f = csv.nums("fidelity_closed");
    assert_eq!(f.iter().copied().fold(f64::MIN, f64::max), best["fidelity"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["state", "fock"]), 0);
    assert_eq!(code(&["state", "fock", "--bogus", "1"]), 2);
    assert_eq!(code(&["state", "ssns", "--r", "-0.5"]), 2);
    assert_eq!(code(&["state", "ssdns", "--r", "0.3"]), 2);
    assert_eq!(code(&["state", "ssns", "--r", "3", "--max-dim", "50"]), 3);
    assert_eq!(code(&["prepare", "h1", "--drive", "0.6"]), 3);
    assert_eq!(code(&["state", "fock", "--config", "/nonexistent/cfg"]), 2);
    assert_eq!(code(&["state", "fock", "--out", "/proc/version/x.csv"]), 1);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("u.cfg");
    std::fs::write(&unknown, "state = fock\ncolour = blue\n").unwrap();
    assert_eq!(code(&["state", "--config", unknown.to_str().unwrap()]), 2);
    let other = dir.path().join("o.cfg");
    std::fs::write(&other, "command = ratio\n").unwrap();
    assert_eq!(code(&["state", "fock", "--config", other.to_str().unwrap()]), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let args = ["--seed", "11", "sensitivity", "compass", "--beta", "2", "--sign", "-", "--monte-carlo", "--seeds", "20", "--delta", "0.05"];
    ok(&[&args[..], &["--out", &p("a.csv")]].concat());
    ok(&[&args[..], &["--out", &p("b.csv")]].concat());
    let a = std::fs::read(p("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(p("b.csv")).unwrap());
    let other = ok(&["--seed", "12", "sensitivity", "compass", "--beta", "2", "--sign", "-", "--monte-carlo", "--seeds", "20", "--delta", "0.05"]);
    assert_ne!(String::from_utf8(a).unwrap(), other);
}

#[test]
fn header_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    for args in [
        vec!["state", "compass", "--beta", "1.41", "--l", "1", "--sign", "-"],
        vec!["--format", "json", "ratio", "ssns", "--r", "0.5", "--n", "1", "--l", "1", "--steps", "5"],
        vec!["damping", "cat", "--beta", "1.5", "--parity", "odd", "--kappa", "0.2"],
        vec!["prepare", "h2", "--t", "2.5", "--dim", "60"],
    ] {
        ok(&[&args[..], &["--out", &p("first")]].concat());
        ok(&["--config", &p("first"), "--out", &p("second")]);
        assert_eq!(std::fs::read(p("first")).unwrap(), std::fs::read(p("second")).unwrap(), "{args:?}");
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "state", "state": "fock", "n": 2}"#).unwrap();
    let csv = Csv::parse(&ok(&["--config", cfg.to_str().unwrap(), "state", "--n", "3"]));
    assert_eq!(csv.meta["config"]["n"], 3);
    assert_eq!(csv.rows.len(), 4);
}

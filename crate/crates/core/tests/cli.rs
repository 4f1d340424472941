use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cloudexp(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cloudexp"));
    c.args(args);
    if let Some(t) = threads {
        c.env("CLOUDEXP_THREADS", t);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn bsc_file(dir: &Path) -> String {
    write(dir, "bsc02.chan", "# BSC(0.2)\n0.8 0.2\n0.2 0.8\n")
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn exponent_row() {
    let d = TempDir::new().unwrap();
    let ch = bsc_file(d.path());
    let o = cloudexp(
        &[
            "exponent",
            "--channel",
            &ch,
            "--input-dist",
            "0.5,0.5",
            "--rate",
            "0.05",
            "--cloud-k",
            "1",
        ],
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    assert!(out.starts_with("K,R,achievable,achievable_rho_star,achievable_eta_star,converse"));
    let r = &rows(&out)[0];
    let ach: f64 = r[2].parse().unwrap();
    // E0(1, 0) - R for BSC(0.2): ln 2 - 2 ln(sqrt(0.2) + sqrt(0.8))
    let e0 = 2f64.ln() - 2.0 * (0.2f64.sqrt() + 0.8f64.sqrt()).ln();
    assert!((ach - (e0 - 0.05)).abs() < 1e-9, "{ach}");
}

#[test]
fn fig1_sweep_is_deterministic_and_jumps_only_for_small_k() {
    let d = TempDir::new().unwrap();
    let ch = bsc_file(d.path());
    let spec = write(
        d.path(),
        "fig1.exp",
        "channel_file = bsc02.chan\ninput = 0.5, 0.5\nk = 1.2\nk = 1.1\nk = 1\nk = 0.85\n\
         rate_range = 0 0.4 0.0025\nquantity = achievable\nquantity = converse\n",
    );
    let _ = ch;
    let a = cloudexp(&["sweep", &spec], Some("1"));
    let b = cloudexp(&["sweep", &spec], Some("3"));
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    let rs = rows(&stdout(&a));
    assert_eq!(rs.len(), 4 * 161);
    let inf: Vec<(f64, f64)> = rs
        .iter()
        .filter(|r| r[5] == "inf")
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert!(!inf.is_empty());
    // the jump rate at K = 0.85 is about 0.00458
    assert!(inf.iter().all(|&(k, r)| k == 0.85 && r < 0.0046), "{inf:?}");
    assert!(rs
        .iter()
        .filter(|r| r[5] != "inf")
        .all(|r| r[5].parse::<f64>().is_ok_and(|v| v.is_finite() && v < 10.0)));
}

#[test]
fn capacity_sweep_is_piecewise_linear() {
    let d = TempDir::new().unwrap();
    let spec = write(
        d.path(),
        "cap.exp",
        "channel = 0.8 0.2; 0.2 0.8\nk_range = 0.1 1.5 0.01\nquantity = capacity\n",
    );
    let out_path = d.path().join("cap.csv");
    let o = cloudexp(&["sweep", &spec, "--out", out_path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_path).unwrap();
    assert!(csv.starts_with("K,capacity"));
    let rs = rows(&csv);
    assert_eq!(rs.len(), 141);
    let c = 2f64.ln() + 0.2 * 0.2f64.ln() + 0.8 * 0.8f64.ln();
    for r in rs {
        let (k, v): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((v - c.max(2f64.ln() - k)).abs() < 1e-6, "K={k}: {v}");
    }
}

#[test]
fn empty_rate_range_gives_header_only() {
    let d = TempDir::new().unwrap();
    let spec = write(
        d.path(),
        "empty.exp",
        "channel = 0.8 0.2; 0.2 0.8\nk = 1\nrate_range = 0.4 0.1 0.01\nquantity = achievable\n",
    );
    let o = cloudexp(&["sweep", &spec], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn flags_override_experiment_file() {
    let d = TempDir::new().unwrap();
    let ch = write(d.path(), "z.chan", "1 0\n0.3 0.7\n");
    let spec = write(
        d.path(),
        "e.exp",
        "k = 5\nrate_range = 0 0.1 0.05\nquantity = achievable\n",
    );
    let o = cloudexp(
        &[
            "sweep",
            &spec,
            "--channel",
            &ch,
            "--cloud-k",
            "0.7",
            "--rate",
            "0.02",
        ],
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rs = rows(&stdout(&o));
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0][0], "0.7");
    assert_eq!(rs[0][1], "0.02");
}

#[test]
fn bits_convert_input_and_output() {
    let d = TempDir::new().unwrap();
    let ch = bsc_file(d.path());
    let o = cloudexp(
        &["capacity", "--channel", &ch, "--cloud-k", "100", "--bits"],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = rows(&stdout(&o))[0][1].parse().unwrap();
    let h = -(0.2 * 0.2f64.log2() + 0.8 * 0.8f64.log2());
    assert!((v - (1.0 - h)).abs() < 1e-9, "{v}");
}

#[test]
fn rectangular_channel_is_accepted() {
    let d = TempDir::new().unwrap();
    let ch = write(d.path(), "r.chan", "0.9 0.1\n0.5 0.5\n0.05 0.95\n");
    let o = cloudexp(&["rmin", "--channel", &ch, "--cloud-k", "0.3"], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn simulation_is_reproducible() {
    let d = TempDir::new().unwrap();
    let ch = bsc_file(d.path());
    let args = [
        "simulate",
        "--channel",
        &ch,
        "--input-dist",
        "0.5,0.5",
        "--rate",
        "0.05",
        "--cloud-k",
        "1",
        "-n",
        "6",
        "--instances",
        "20",
        "--transmissions",
        "5",
        "--message-floor",
        "2",
        "--seed",
        "9",
    ];
    let a = cloudexp(&args, Some("1"));
    let b = cloudexp(&args, Some("4"));
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(rows(&stdout(&a))[0][5], "100");
}

#[test]
fn non_stochastic_channel_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let ch = write(d.path(), "bad.chan", "0.5 0.4\n0.2 0.8\n");
    let o = cloudexp(&["capacity", "--channel", &ch, "--cloud-k", "1"], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 0") && err.contains("0.9"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    let d = TempDir::new().unwrap();
    let ch = bsc_file(d.path());
    assert_eq!(
        cloudexp(&["exponent", "--channel", &ch, "--cloud-k", "1"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cloudexp(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(
        cloudexp(
            &["capacity", "--channel", &ch, "--cloud-k", "1"],
            Some("zero")
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn validation_names_the_failing_stage() {
    let d = TempDir::new().unwrap();
    let bad = write(d.path(), "bad.chan", "0.5 0.4\n0.2 0.8\n");
    let o = cloudexp(&["validate", &bad], None);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
    let failed: Vec<&serde_json::Value> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0]["stage"].as_str().unwrap().starts_with("channel:"));
}

#[test]
fn quick_validation_passes() {
    let o = cloudexp(&["validate"], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

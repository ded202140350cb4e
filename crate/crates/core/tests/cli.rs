use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-secrecy"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin().args(&args[..1])
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn esr_writes_one_entry_per_eve() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["esr"], &config("ds_two_eves.json"), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("esr.json")).unwrap()).unwrap();
    let eves = v["eves"].as_array().unwrap();
    assert_eq!(eves.len(), 2);
    for e in eves {
        assert!(e["esr_bits"].as_f64().unwrap() >= 0.0);
        assert!(e["variance_nats2"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn sop_curve_is_a_cdf() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["sop", "--r-steps", "12", "--trials", "500"], &config("ds_outage.json"), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&tmp.path().join("sop.csv"));
    assert_eq!(header, ["R_bits", "sop_analytic", "sop_empirical", "stderr"]);
    assert_eq!(rows.len(), 12);
    for pair in rows.windows(2) {
        assert!(pair[1][1] >= pair[0][1]);
        assert!(pair[1][2] >= pair[0][2]);
    }
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1]) && (0.0..=1.0).contains(&r[2])));
}

#[test]
fn sweep_orders_powers() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep", "--r-steps", "6", "--mvn-samples", "20000", "--p-dbm", "30,50"],
        &config("ds_two_eves.json"),
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&tmp.path().join("sweep.csv"));
    assert_eq!(header, ["P_dbm", "R_bits", "sop", "esr_bits"]);
    assert_eq!(rows.len(), 12);
    assert!(rows[6][3] > rows[0][3], "more power raises the secrecy rate");
    assert!(rows.iter().all(|r| r[3] >= 0.0));
}

#[test]
fn optimizers_write_trace_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["optimize-esr", "--max-outer", "5"], &config("lbi_esr.json"), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&tmp.path().join("optimize_esr_trace.csv"));
    assert_eq!(header, ["iter", "objective_nats", "step_size", "grad_norm", "feasibility_violation"]);
    assert_eq!(rows.len(), 6);
    for pair in rows.windows(2) {
        assert!(pair[1][1] >= pair[0][1] - 1e-8);
    }
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("optimize_esr.json")).unwrap()).unwrap();
    assert_eq!(v["theta"].as_array().unwrap().len(), 16);

    let o = run(&["optimize-sop", "--max-iter", "5"], &config("ds_outage.json"), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("optimize_sop.json")).unwrap()).unwrap();
    assert!(v["final_sop"].as_f64().unwrap() <= v["initial_sop"].as_f64().unwrap());
}

#[test]
fn mc_validate_reports_every_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["mc-validate", "--trials", "2000"], &config("ds_outage.json"), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let means = std::fs::read_to_string(tmp.path().join("mc_means.csv")).unwrap();
    let cov = std::fs::read_to_string(tmp.path().join("mc_cov.csv")).unwrap();
    assert_eq!(means.lines().count(), 1 + 4);
    assert_eq!(cov.lines().count(), 1 + 10);
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["esr"], &tmp.path().join("missing.json"), tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"dimensions": {"M": 0}}"#).unwrap();
    let o = run(&["esr"], &bad, tmp.path());
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());

    // wrong model for the optimizer
    let o = run(&["optimize-sop"], &config("lbi_esr.json"), tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("lbi_esr.json"));

    let o = bin().args(["esr", "--out", "x"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(threads);
        let o = bin()
            .env("IRS_SECRECY_THREADS", threads)
            .args(["sop", "--r-steps", "5", "--trials", "300", "--config"])
            .arg(config("ds_two_eves.json"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(out.join("sop.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);

    let o = bin()
        .env("IRS_SECRECY_THREADS", "zero")
        .args(["esr", "--config"])
        .arg(config("ds_outage.json"))
        .args(["--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

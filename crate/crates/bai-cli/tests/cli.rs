//! Black-box tests of the `bai` binary: spawn it, check stdout and exit
//! codes against the documented interface.

use std::path::Path;
use std::process::{Command, Output};

fn bai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bai"))
        .args(args)
        .output()
        .expect("spawn bai")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn weights_prints_six_decimal_row() {
    let out = bai(&["weights", "--sigmas", "2,1,1", "--best", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0.585786 0.207107 0.207107\n");
}

#[test]
fn weights_rejects_out_of_range_best() {
    let out = bai(&["weights", "--sigmas", "2,1", "--best", "3"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn bounds_bernoulli_prints_both_rate_variants() {
    let out = bai(&["bounds", "--family", "bernoulli", "--k", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("w_best=0.414214"), "{text}");
    assert!(text.contains("V*_printed=0.222222"), "{text}");
    assert!(text.contains("V*_derived=0.343146"), "{text}");
}

#[test]
fn bounds_gaussian_prints_per_arm_rates() {
    let out = bai(&["bounds", "--family", "gaussian", "--sigmas", "1,1"]);
    assert!(out.status.success());
    // 1/(2(1+1)^2) = 0.125 for both arms.
    assert_eq!(stdout(&out), "V(1)=0.125000\nV(2)=0.125000\nV*=0.125000\n");
}

#[test]
fn bounds_rejects_mismatched_flags() {
    let out = bai(&["bounds", "--family", "gaussian", "--k", "3"]);
    assert!(!out.status.success());
}

#[test]
fn run_reports_missing_config() {
    let out = bai(&["run", "missing.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("config not found"), "{err}");
}

#[test]
fn selftest_passes() {
    let out = bai(&["selftest"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("selftest passed"));
}

#[test]
fn run_writes_results_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("results.csv");
    let config_path = dir.path().join("config.json");
    let report_path = dir.path().join("report.json");
    let config = format!(
        r#"{{
  "master_seed": 7,
  "trials": 50,
  "algorithms": [{{"kind": "GNA"}}, {{"kind": "SuccessiveRejects"}}],
  "instance": {{"type": "gaussian", "means": [1.0, 0.0], "sds": [1.0, 1.0]}},
  "budgets": [20, 40],
  "output": {:?}
}}"#,
        csv_path.to_str().unwrap()
    );
    std::fs::write(&config_path, config).unwrap();

    let out = bai(&[
        "run",
        config_path.to_str().unwrap(),
        "--json",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(csv_path.exists());
    assert!(report_path.exists());

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("algorithm,T,trials,errors,p_hat,se"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("GNA,20,50,"));
    assert!(rows[2].starts_with("SuccessiveRejects,20,50,"));

    // decay on a 2-budget file reports no fit rather than failing.
    let out = bai(&["decay", csv_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("no fit"), "{}", stdout(&out));
}

#[test]
fn decay_fits_synthetic_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.csv");
    let mut text = String::from("algorithm,T,trials,errors,p_hat,se\n");
    for (t, p) in [(1000, 0.135335), (2000, 0.018316), (3000, 0.002479)] {
        text.push_str(&format!("GNA,{t},10000,{},{p:.6},0.000100\n", (p * 10000.0) as u64));
    }
    std::fs::write(&path, text).unwrap();
    let out = bai(&["decay", path.to_str().unwrap()]);
    assert!(out.status.success());
    let line = stdout(&out);
    // p = exp(-0.002 T) up to 6-decimal rounding.
    assert!(line.starts_with("GNA: slope=-0.0020"), "{line}");
    let r2: f64 = line
        .trim()
        .rsplit("r_squared=")
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(r2 >= 0.99, "{line}");
}

#[test]
fn missing_subcommand_or_bad_flag_exits_nonzero() {
    assert!(!bai(&[]).status.success());
    assert!(!bai(&["weights", "--sigmas", "abc", "--best", "1"])
        .status
        .success());
    assert!(!Path::new("nonexistent").exists() || true);
}

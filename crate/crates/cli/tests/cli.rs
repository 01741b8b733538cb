use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyncircuit"))
        .args(args)
        .env_remove("WORKERS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn exact_dp_small_table() {
    let v = json_of(&run(&["exact", "--m", "1", "--n", "2", "--mode", "dp"]));
    let rows: Vec<(String, String)> = v["table"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["outcome"].as_str().unwrap().into(),
                r["p"].as_str().unwrap().into(),
            )
        })
        .collect();
    assert_eq!(
        rows,
        [("1,4".into(), "1/3".into()), ("2,0".into(), "2/3".into())]
    );
}

#[test]
fn exact_modes_agree_and_age_zero_is_a_point_mass() {
    let h = json_of(&run(&[
        "exact",
        "--m",
        "2",
        "--n",
        "3",
        "--mode",
        "histories",
    ]));
    let d = json_of(&run(&["exact", "--m", "2", "--n", "3", "--mode", "dp"]));
    assert_eq!(h["table"], d["table"]);
    let z = json_of(&run(&["exact", "--m", "2", "--n", "0"]));
    assert_eq!(
        z["table"],
        serde_json::json!([{ "outcome": "1,0", "p": "1/1" }])
    );
}

#[test]
fn history_budget_refusal_exits_3() {
    let out = run(&["exact", "--m", "3", "--n", "12", "--mode", "histories"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["simulate", "--n", "3"]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--m", "0", "--n", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn simulation_budget_refusal_exits_3() {
    let out = run(&[
        "simulate",
        "--m",
        "2",
        "--n",
        "100",
        "--replicates",
        "10",
        "--draw-budget",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn first_insertion_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rows.csv");
    let out = run(&[
        "simulate",
        "--m",
        "2",
        "--n",
        "1",
        "--replicates",
        "10",
        "--seed",
        "7",
        "--format",
        "csv",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replicate,Y0,Y1"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",1,0")), "{rows:?}");
}

#[test]
fn simulate_then_clt_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let args = [
        "simulate",
        "--m",
        "2",
        "--n",
        "1000",
        "--replicates",
        "1000",
        "--seed",
        "1",
        "--stats",
        "deg:0,deg:10",
        "--out",
        report.to_str().unwrap(),
    ];
    assert!(run(&args).status.success());
    let r = read_json(&report);
    assert_eq!(r["replicates"], 1000);
    assert_eq!(r["degrees"].as_array().unwrap().len(), 2);
    let out = run(&["clt", "--report", report.to_str().unwrap()]);
    let code = out.status.code().unwrap();
    assert!(
        code == 0 || code == 1,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let c: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(c["max_cov_rel_err"].as_f64().unwrap() < 0.15);
    assert!(c["pass"].is_boolean());
}

#[test]
fn simulate_is_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (p, w) in [(&a, "1"), (&b, "3")] {
        let out = run(&[
            "simulate",
            "--m",
            "3",
            "--n",
            "200",
            "--replicates",
            "300",
            "--seed",
            "5",
            "--workers",
            w,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn clt_rejects_small_reports() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("small.json");
    let args = [
        "simulate",
        "--m",
        "2",
        "--n",
        "5",
        "--replicates",
        "50",
        "--out",
        report.to_str().unwrap(),
    ];
    assert!(run(&args).status.success());
    assert_eq!(
        run(&["clt", "--report", report.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn analytic_spot_values() {
    let v = json_of(&run(&["analytic", "--m", "2", "--n", "2"]));
    assert_eq!(v["mean"]["y0"]["exact"], "8/5");
    assert_eq!(v["mean"]["y1"]["exact"], "3/10");
    assert_eq!(v["cov_limit"][0][0], "24/175");
    assert_eq!(v["cov_limit"][1][1], "1808/13475");
    let v = json_of(&run(&["analytic", "--m", "2", "--n", "1"]));
    assert_eq!(v["second_moments"]["w2"]["exact"], "1/1");
    assert_eq!(v["second_moments"]["b2"]["exact"], "0/1");
}

#[test]
fn analytic_martingale_matrices_have_requested_digits() {
    let v = json_of(&run(&[
        "analytic",
        "--m",
        "2",
        "--n",
        "4",
        "--martingale",
        "--digits",
        "55",
    ]));
    let p = v["martingale"]["P"][0][0].as_str().unwrap();
    let digits = p
        .chars()
        .take_while(|c| *c != 'e')
        .filter(|c| c.is_ascii_digit())
        .count();
    assert!(digits >= 50, "{p}");
}

#[test]
fn degree_law_and_moments() {
    let v = json_of(&run(&[
        "degree", "--m", "1", "--j", "0", "--n", "2", "--pmf",
    ]));
    assert_eq!(v["table"][0]["p"], "1/3");
    assert_eq!(v["table"][1]["p"], "2/3");
    let v = json_of(&run(&["degree", "--m", "1", "--j", "0", "--n", "2"]));
    assert_eq!(v["mean"], "5/3");
    let v = json_of(&run(&[
        "degree", "--m", "2", "--n", "100000", "--regime", "linear", "--theta", "1",
    ]));
    assert_eq!(v["j"], 100000);
    assert!((v["asymptotics"]["exact_mean"].as_f64().unwrap() - 2.0).abs() < 0.04);
}

#[test]
fn verify_suites_pass() {
    for args in [
        &[
            "verify", "--suite", "props", "--max-m", "3", "--max-n", "10",
        ][..],
        &[
            "verify", "--suite", "degree", "--max-m", "3", "--max-n", "6",
        ][..],
        &["verify", "--suite", "martingale"][..],
    ] {
        let v = json_of(&run(args));
        assert_eq!(v["pass"], true, "{args:?}");
        assert!(v["checks"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["pass"] == true));
    }
}

#[test]
fn csv_tables() {
    let out = run(&["exact", "--m", "1", "--n", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("w,b,p_exact,p_decimal"));
    assert_eq!(text.lines().count(), 3);
}

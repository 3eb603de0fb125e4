use std::process::{Command, Output};

use serde_json::Value;

fn sopq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sopq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn count_exact_and_lower_bound() {
    let out = sopq(&["count", "--p", "3", "--q", "5", "--g", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out), serde_json::json!({ "exact": 96 }));

    let out = sopq(&["count", "--p", "2", "--q", "5", "--g", "2"]);
    assert_eq!(
        stdout_json(&out),
        serde_json::json!({ "lower_bound": 96, "note": "conjectured exact" })
    );
}

#[test]
fn count_abc_class() {
    let out = sopq(&[
        "count", "--p", "4", "--q", "4", "--g", "2", "--abc", "0,0,0",
    ]);
    assert_eq!(stdout_json(&out)["exact"], 33);
}

#[test]
fn grid_table_is_ordered_and_deterministic() {
    let args = ["count", "--grid", "2:4,3:5,2:3", "--format", "csv"];
    let a = sopq(&args);
    let b = sopq(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,q,g,bound,count"));
    assert_eq!(lines.next(), Some("2,3,2,exact,99"));
    assert!(text.contains("2,5,2,lower_bound,96\n"));
    assert!(text.contains("3,4,3,exact,395\n"));
    assert_eq!(text.lines().count(), 1 + 2 * (3 + 3 + 2));
}

#[test]
fn hitchin_verify_reports_traces() {
    let out = sopq(&["hitchin-verify", "--p", "3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["traces"]["2"], "8*q2");
    assert_eq!(v["traces"]["4"], "20*q2^2 + 8*q4");
    assert_eq!(v["odd_traces_vanish"], true);
    assert_eq!(v["skew_adjoint"], true);
}

#[test]
fn stability_names_the_witness() {
    let v = stdout_json(&sopq(&[
        "stability",
        "--chain",
        &data("so23_unstable.json"),
    ]));
    assert_eq!(v["status"], "unstable");
    assert_eq!(v["witness"]["total_degree"], 1);

    let v = stdout_json(&sopq(&["stability", "--chain", &data("so23_type1.json")]));
    assert_eq!(v["status"], "stable");
    assert!(v["witness"].is_null());
}

#[test]
fn psi_output_feeds_back_into_minima() {
    let out = sopq(&[
        "psi",
        "--p",
        "3",
        "--q",
        "5",
        "--chain",
        &data("so13_twisted.json"),
    ]);
    assert!(out.status.success());
    let dir = std::env::temp_dir().join(format!("sopq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("psi.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let v = stdout_json(&sopq(&["minima", "--chain", path.to_str().unwrap()]));
    assert_eq!(v["kind"], "Type2");
    assert_eq!(v["criterionCheck"]["agrees"], true);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn grade_reports_pieces() {
    let v = stdout_json(&sopq(&[
        "grade",
        "--chain",
        &data("so23_type1.json"),
        "--weight",
        "0",
    ]));
    assert_eq!(v["weight"], 0);
    assert!(v["hom"]["rank"].as_u64().unwrap() > 0);
    assert!(v["ad_eta"]["iso"].is_boolean());
}

#[test]
fn usage_errors_exit_two() {
    let out = sopq(&["count", "--p", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "UsageError");

    let out = sopq(&["count", "--p", "3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = sopq(&["stability", "--chain", &data("missing.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one_with_kind() {
    let out = sopq(&["count", "--p", "3", "--q", "5", "--g", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "DomainError");
    assert_eq!(e["kind"], "OutOfRange");
    assert_eq!(e["module"], "topology_counting");
    assert!(e["message"].as_str().unwrap().contains("genus"));

    let out = sopq(&["stability", "--chain", &data("malformed.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "Schema");
}

#[test]
fn selftest_lists_every_criterion() {
    let out = sopq(&["selftest"]);
    let v = stdout_json(&out);
    let results = v.as_array().unwrap();
    assert_eq!(results.len(), 11);
    let failing: Vec<&str> = results
        .iter()
        .filter(|r| r["passed"] == false)
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    // The genus-3 spot values contradict the closed formula.
    assert_eq!(failing, ["1g3"]);
    assert_eq!(out.status.code(), Some(1));
}

//! End-to-end runs of the `bgwlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bgwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgwlab")).args(args).output().expect("spawn bgwlab")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn build_law(dir: &Path) -> String {
    let p = dir.join("law.json");
    let o = bgwlab(&["law", "build", "--family", "log2", "--c", "0.3333333333333333", "--kmin", "3", "--out", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p.to_str().unwrap().to_string()
}

#[test]
fn law_build_then_audit() {
    let dir = tempfile::tempdir().unwrap();
    let law = build_law(dir.path());
    let v = stdout_json(&bgwlab(&["law", "audit", "--law", &law]));
    assert!(v["mass_deviation"].as_f64().unwrap() < 1e-10);
    assert!(v["mean_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["ok"], true);
    assert_eq!(v["law_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn constants_accept_scientific_counts() {
    let dir = tempfile::tempdir().unwrap();
    let law = build_law(dir.path());
    let v = stdout_json(&bgwlab(&["constants", "--law", &law, "--n", "1e5"]));
    assert_eq!(v["n"], 100_000);
    assert_eq!(v["a_n"], 628);
    assert!((v["b_n"].as_f64().unwrap() + 5171.0).abs() < 1.0);
    assert!(v["tool_version"].is_string());
}

#[test]
fn oracle_passes_on_toy_law() {
    let v = stdout_json(&bgwlab(&["oracle", "--check", "kemperman", "--nmax", "10"]));
    assert_eq!(v["pass"], true);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bgwlab(&["constants", "--bogus"]).status.code(), Some(2));
    assert_eq!(bgwlab(&["oracle", "--check", "kemperman", "--nmax", "99"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"head\": [0.5, 0.6]}").unwrap();
    assert_eq!(bgwlab(&["law", "audit", "--law", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn tree_samples_are_seed_determined_and_reanalyzable() {
    let dir = tempfile::tempdir().unwrap();
    let law = build_law(dir.path());
    let trees = dir.path().join("trees.ndjson");
    let args = ["sample", "tree", "--law", &law, "--mode", "tail-vecz", "--n", "2e3", "--reps", "5", "--seed", "9"];
    let mut a = args.to_vec();
    a.extend(["--out", trees.to_str().unwrap()]);
    assert!(bgwlab(&a).status.success());
    let again = bgwlab(&args);
    assert!(again.status.success());
    assert_eq!(std::fs::read(&trees).unwrap(), again.stdout);
    let lines: Vec<Value> =
        again.stdout.split(|&b| b == b'\n').filter(|l| !l.is_empty()).map(|l| serde_json::from_slice(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    for r in &lines {
        assert!(r["size"].as_u64().unwrap() >= 2000);
    }

    let csv = dir.path().join("loops.csv");
    let o = bgwlab(&["loop", "analyze", "--in", trees.to_str().unwrap(), "--law", &law, "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,seed,cycle_len_ratio,max_graft_radius_ratio,gh_upper_bound\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn loop_analyze_rejects_tampered_records() {
    let dir = tempfile::tempdir().unwrap();
    let law = build_law(dir.path());
    let o = bgwlab(&["sample", "tree", "--law", &law, "--mode", "tail-rejection", "--n", "100", "--reps", "2", "--seed", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rec: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    rec["size"] = (rec["size"].as_u64().unwrap() + 1).into();
    let trees = dir.path().join("t.ndjson");
    std::fs::write(&trees, format!("{rec}\n")).unwrap();
    let o = bgwlab(&["loop", "analyze", "--in", trees.to_str().unwrap(), "--law", &law]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_writes_report_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let law = build_law(dir.path());
    let out = dir.path().join("report.json");
    let o = bgwlab(&[
        "verify", "--theorem", "DTV_ORACLE", "--law", &law, "--n", "4,6,8", "--reps", "1", "--seed", "1",
        "--out", out.to_str().unwrap(), "--emit-plotdata",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["theorem"], "DTV_ORACLE");
    assert_eq!(report["passed"], true);
    assert_eq!(report["grid"].as_array().unwrap().len(), 3);
    let plot = std::fs::read_to_string(out.with_extension("plot.csv")).unwrap();
    assert!(plot.starts_with("n,replicate,functional,value\n"));

    let toy = dir.path().join("toy.json");
    assert!(bgwlab(&["law", "build", "--family", "toy", "--out", toy.to_str().unwrap()]).status.success());
    let o = bgwlab(&["verify", "--theorem", "DTV_ORACLE", "--law", toy.to_str().unwrap(), "--n", "4,6,8", "--reps", "1", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

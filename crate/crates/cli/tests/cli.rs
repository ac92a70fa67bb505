use std::path::Path;
use std::process::{Command, Output};

fn xorcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xorcert")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    path_str(&p).to_string()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const ONE: &str = "# xor-instance v1\nn=2 k=2\n1 2 +1\n";

#[test]
fn gen_writes_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.xor");
    let b = dir.path().join("b.xor");
    for p in [&a, &b] {
        let out = xorcert(&["gen", "-n", "8", "-k", "4", "-p", "0.01", "--seed", "1", "-o", path_str(p)]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().nth(1), Some("n=8 k=4"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn gen_rejects_odd_arity() {
    let out = xorcert(&["gen", "-n", "8", "-k", "3", "-p", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k must be even"));
}

#[test]
fn gen_accepts_alpha() {
    let by_alpha = xorcert(&["gen", "-n", "4", "-k", "2", "--alpha", "2", "--seed", "3"]);
    let by_p = xorcert(&["gen", "-n", "4", "-k", "2", "-p", "0.5", "--seed", "3"]);
    assert!(by_alpha.status.success());
    assert_eq!(by_alpha.stdout, by_p.stdout);
}

#[test]
fn certify_single_constraint_is_tight() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "one.xor", ONE);
    let out = xorcert(&["certify", "-i", &f, "--d", "1", "--method", "rescaled"]);
    let v = json(&out);
    assert!((v["hsat"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["method"], "rescaled");
    assert_eq!(v["version"], 1);
    let text = String::from_utf8(out.stdout).unwrap();
    let order = [
        "version", "n", "k", "d", "m", "method", "spectral_norm", "norm_root", "hist_sum_root", "slack", "hsat",
        "solver", "seed",
    ];
    let at: Vec<usize> = order.iter().map(|k| text.find(&format!("\"{k}\":")).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn certify_writes_file_and_prints_hsat() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "one.xor", ONE);
    let cert = dir.path().join("c.json");
    let out = xorcert(&["certify", "-i", &f, "-o", path_str(&cert)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("hsat="));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cert).unwrap()).unwrap();
    assert!(v["hsat"].as_f64().unwrap() >= 1.0);
}

#[test]
fn trimmed_certificate_has_caveat() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.xor");
    xorcert(&["gen", "-n", "6", "-k", "4", "-p", "0.05", "--seed", "2", "-o", path_str(&f)]);
    let out = xorcert(&["certify", "-i", path_str(&f), "--d", "2", "--method", "trimmed", "--tau", "2"]);
    let v = json(&out);
    assert_eq!(v["caveat"], "trimmed matrix is not a matrix representation");
    assert!(String::from_utf8_lossy(&out.stderr).contains("caveat"));
}

#[test]
fn iterative_solver_agrees_with_dense() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.xor");
    xorcert(&["gen", "-n", "5", "-k", "4", "-p", "0.1", "--seed", "4", "-o", path_str(&f)]);
    let f = path_str(&f);
    let dense = json(&xorcert(&["certify", "-i", f, "--d", "2", "--solver", "dense"]));
    let iter = json(&xorcert(&["certify", "-i", f, "--d", "2", "--solver", "iterative"]));
    let (a, b) = (dense["spectral_norm"].as_f64().unwrap(), iter["spectral_norm"].as_f64().unwrap());
    let slack = dense["solver"]["residual_bound"].as_f64().unwrap() + iter["solver"]["residual_bound"].as_f64().unwrap();
    assert!((a - b).abs() <= slack + 1e-8 * a);
    assert_eq!(iter["solver"]["authoritative"], false);
    assert!(iter["hsat"].as_f64().unwrap() >= dense["hsat"].as_f64().unwrap() - 1e-8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "e.xor", "# xor-instance v1\nn=3 k=2\n");
    assert_eq!(xorcert(&["certify", "-i", &empty]).status.code(), Some(3));
    let big = dir.path().join("b.xor");
    xorcert(&["gen", "-n", "8", "-k", "4", "-p", "0.05", "--seed", "1", "-o", path_str(&big)]);
    let out = xorcert(&["certify", "-i", path_str(&big), "--d", "6"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    let bad = write(dir.path(), "bad.xor", "# xor-instance v1\nn=3 k=2\n1 4 +1\n");
    assert_eq!(xorcert(&["certify", "-i", &bad]).status.code(), Some(2));
    assert_eq!(xorcert(&["certify", "--bogus"]).status.code(), Some(2));
}

#[test]
fn sweep_is_sound_and_reproducible() {
    let args = ["sweep", "-n", "7", "-k", "2", "-d", "2", "-p", "0.2,0.4,0.8", "--trials", "2", "--seed", "5"];
    let a = xorcert(&args);
    let b = xorcert(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,k,d,p,seed,m,norm_root,hsat,max_sat,runtime_ms,error"));
    let rows: Vec<Vec<&str>> = lines.take_while(|l| !l.starts_with('#')).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let hsat: f64 = r[7].parse().unwrap();
        let max_sat: f64 = r[8].parse().unwrap();
        assert!(max_sat <= hsat);
        assert_eq!(r[9], "");
    }
    assert!(text.contains("# slope_excess="));
    assert!(text.contains("# soundness_violations=0"));
}

#[test]
fn sweep_with_only_failures_exits_nonzero() {
    let out = xorcert(&["sweep", "-n", "2", "-k", "2", "-p", "1e-12", "--trials", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("no constraints"));
}

#[test]
fn verify_passes_on_generated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.xor");
    xorcert(&["gen", "-n", "8", "-k", "4", "-p", "0.01", "--seed", "1", "-o", path_str(&f)]);
    let v = json(&xorcert(&["verify", "--instance", path_str(&f), "--d", "2"]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["representation"]["pass"], true);
}

#[test]
fn claims_default_run_passes() {
    let v = json(&xorcert(&["claims", "--trials", "500"]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["claim1"].as_array().unwrap().len(), 5);
}

#[test]
fn claims_budget_exceeded_exits_4() {
    let out = xorcert(&["claims", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("claim 1 scenarios"));
}

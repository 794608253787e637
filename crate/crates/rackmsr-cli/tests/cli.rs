use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const GOLDEN_PARITY_HASH: &str = "0cda470fa440f6e32f5fea548be9923795e1e48248ead1a1d7bcd92e57d6a213";

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rackmsr")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn build(dir: &TempDir, cfg: &str, name: &str) -> PathBuf {
    let out = dir.path().join(name);
    let res = run(&["build", config(cfg).to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_reproduces_golden_hash() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ex.json");
    let res = run(&["build", s(&config("example_f27.json")), "-o", s(&out)]);
    assert_eq!(res.status.code(), Some(0));
    let v = json(&res);
    assert_eq!(v["parity_hash"], GOLDEN_PARITY_HASH);
    assert_eq!((v["q"].as_u64(), v["l"].as_u64()), (Some(27), Some(4)));
    assert_eq!(v["lambda_mode"], "explicit");
    assert_eq!(v["threshold_q"], "116");
    let bundle: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(bundle["magic"], "RACKMSR-BUNDLE");
    assert_eq!(bundle["parity_hash"], GOLDEN_PARITY_HASH);
}

#[test]
fn build_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for cfg in ["example_f27.json", "t1_12_5.json"] {
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        for out in [&a, &b] {
            assert!(run(&["build", s(&config(cfg)), "-o", s(out), "--seed", "9"]).status.success());
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cfg}");
    }
}

#[test]
fn build_rejects_u_not_dividing_n() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"params":{"n":9,"k":4,"u":2,"d_bar":3,"theorem":"T1"}}"#).unwrap();
    let res = run(&["build", s(&cfg), "-o", s(&dir.path().join("out.json"))]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("u=2 does not divide n=9"));
    assert!(run(&["build", s(&dir.path().join("missing.json"))]).status.code() == Some(2));
}

#[test]
fn build_reports_exhaustion() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(
        &cfg,
        r#"{"field":{"p":5,"m":1},"params":{"n":8,"k":4,"u":2,"d_bar":3,"theorem":"T1"},"lambdas":{"mode":"greedy"}}"#,
    )
    .unwrap();
    let res = run(&["build", s(&cfg), "-o", s(&dir.path().join("out.json"))]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn verify_example_exhaustively() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "example_f27.json", "ex.json");
    let res = run(&["verify", s(&b), "--mds", "exhaustive", "--folded", "--kernels"]);
    assert_eq!(res.status.code(), Some(0));
    let v = json(&res);
    assert_eq!(v["pass"], true);
    let suites = v["suites"].as_array().unwrap();
    let mds = suites.iter().find(|x| x["name"] == "mds").unwrap();
    assert_eq!(mds["cases"], 70);
    assert!(mds["failures"].as_array().unwrap().is_empty());
    let kernels = suites.iter().filter(|x| x["name"] != "mds" && x["cases"].as_u64() == Some(50)).count();
    assert_eq!(kernels, 6);
    assert!(suites.iter().all(|x| x["pass"] == true));
}

#[test]
fn verify_sampled_mds() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "t2_12_6.json", "t2.json");
    let res = run(&["verify", s(&b), "--mds", "sample", "500", "--seed", "4"]);
    assert_eq!(res.status.code(), Some(0));
    let v = json(&res);
    let mds = v["suites"].as_array().unwrap().iter().find(|x| x["name"] == "mds").unwrap().clone();
    assert_eq!(mds["cases"], 500);
    assert_eq!(run(&["verify", s(&b), "--mds", "sample"]).status.code(), Some(2));
}

#[test]
fn verify_catches_edited_coefficient() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "example_f27.json", "ex.json");
    let mut bundle: Value = serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    let lam = bundle["lambdas"]["lambdas"].as_array_mut().unwrap();
    lam[4] = lam[0].clone();
    std::fs::write(&b, serde_json::to_string(&bundle).unwrap()).unwrap();
    let res = run(&["verify", s(&b), "--folded"]);
    assert_eq!(res.status.code(), Some(1));
    let v = json(&res);
    assert_eq!(v["pass"], false);
    let coeff = v["suites"].as_array().unwrap().iter().find(|x| x["name"] == "coefficients").unwrap().clone();
    let named = coeff["failures"][0].as_str().unwrap();
    assert!(named.contains("λ_0") && named.contains("λ_4"), "{named}");
}

#[test]
fn repair_example() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "example_f27.json", "ex.json");
    let res = run(&["repair", s(&b), "--host", "0", "--failed", "0,1", "--helpers", "1,2,3"]);
    assert_eq!(res.status.code(), Some(0));
    let v = json(&res);
    assert_eq!(v["bandwidth"], 12);
    assert_eq!(v["access"], 12);
    assert_eq!(v["optimal_bw"], true);
    assert_eq!(v["optimal_access"], true);
    assert_eq!(v["exact"], true);
}

#[test]
fn repair_rejects_too_many_failures() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "example_f27.json", "ex.json");
    let res = run(&["repair", s(&b), "--host", "0", "--failed", "0,1,2", "--helpers", "1,2,3"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(run(&["repair", s(&b), "--h", "3"]).status.code(), Some(2));
}

#[test]
fn repair_sweep() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "example_f27.json", "ex.json");
    let args = ["repair", s(&b), "--trials", "200", "--seed", "11"];
    let res = run(&args);
    assert_eq!(res.status.code(), Some(0));
    let v = json(&res);
    assert_eq!((v["trials"].as_u64(), v["exact"].as_u64()), (Some(200), Some(200)));
    assert!(v["failures"].as_array().unwrap().is_empty());
    assert_eq!(run(&args).stdout, res.stdout);
}

#[test]
fn repair_sweep_with_extra_rack() {
    let dir = TempDir::new().unwrap();
    let b = build(&dir, "t1_12_5.json", "t.json");
    let res = run(&["repair", s(&b), "--h", "2", "--trials", "20"]);
    assert_eq!(res.status.code(), Some(0));
    let v = json(&res);
    assert_eq!(v["bandwidth"]["min"], 28);
    assert_eq!(v["bandwidth"]["max"], 28);
    assert_eq!(v["exact"], 20);
}

#[test]
fn report_t1_vs_t2() {
    let dir = TempDir::new().unwrap();
    let t1 = build(&dir, "t1_12_6.json", "t1.json");
    let t2 = build(&dir, "t2_12_6.json", "t2.json");
    let js = run(&["report", "--format", "json", s(&t1), s(&t2)]);
    assert_eq!(js.status.code(), Some(0));
    let rows = json(&js);
    let rows = rows.as_array().unwrap();
    assert_eq!((rows[0]["l"].as_u64(), rows[1]["l"].as_u64()), (Some(8), Some(4)));
    assert_eq!((rows[0]["theorem"].as_str(), rows[1]["theorem"].as_str()), (Some("T1"), Some("T2")));
    for r in rows {
        assert_eq!(r["bandwidth_ratio"], "1");
    }

    let text = run(&["report", s(&t1), s(&t2)]);
    let text = String::from_utf8(text.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    for (line, row) in lines.zip(rows) {
        let cells: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cells.len(), header.len());
        for (h, c) in header.iter().zip(cells) {
            let want = match &row[*h] {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            assert_eq!(c, want, "column {h}");
        }
    }
}

#[test]
fn empty_report() {
    let text = run(&["report"]);
    assert_eq!(text.status.code(), Some(0));
    assert_eq!(String::from_utf8(text.stdout).unwrap().lines().count(), 1);
    let js = run(&["report", "--format", "json"]);
    assert_eq!(js.status.code(), Some(0));
    assert_eq!(json(&js), Value::Array(vec![]));
}

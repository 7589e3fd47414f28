use std::path::PathBuf;
use std::process::Command;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn qlsp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qlsp")).args(args).output().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qlsp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn cluster_stats_json() {
    let stats = tmp("cluster.json");
    let out = tmp("cluster.qlo");
    let src = corpus("cluster.qlp");
    let o = qlsp(&["compile", src.to_str().unwrap(), "--unroll", "2", "--range", "0:199", "--stats", stats.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(v["kernel_depth"], 1);
    assert_eq!(v.as_object().unwrap().len(), 10);
    let total = v["pre_depth"].as_i64().unwrap() + v["kernel_depth"].as_i64().unwrap() * v["qsp_iters"].as_i64().unwrap() + v["post_depth"].as_i64().unwrap();
    assert_eq!(v["qsp_total"].as_i64().unwrap(), total);
}

#[test]
fn verify_passes_and_catches_faults() {
    let src = corpus("array1.qlp");
    let ok = qlsp(&["compile", src.to_str().unwrap(), "--verify", "--range", "0:5", "-o", "-"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = qlsp(&["compile", src.to_str().unwrap(), "--verify", "--range", "0:5", "-o", "-", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(2), "{}", String::from_utf8_lossy(&bad.stderr));
}

#[test]
fn guarded_output_verifies() {
    let src = corpus("phase_ladder.qlp");
    let o = qlsp(&["compile", src.to_str().unwrap(), "--verify", "-o", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("guard {"));
}

#[test]
fn baseline_emission_bypasses_pipeline() {
    let src = corpus("array2.qlp");
    let o = qlsp(&["compile", src.to_str().unwrap(), "--emit", "kernel-asap", "-o", "-"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("for i in 0 to 99 {"), "{text}");
}

#[test]
fn errors_exit_one() {
    let missing = qlsp(&["compile", "/nonexistent/x.qlp"]);
    assert_eq!(missing.status.code(), Some(1));
    let bad = tmp("bad.qlp");
    std::fs::write(&bad, "qubit q[4]; for i in 0 to 3 { H q[i*i]; }").unwrap();
    let o = qlsp(&["compile", bad.to_str().unwrap(), "-o", "-"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let src = corpus("array3.qlp");
    let a = qlsp(&["compile", src.to_str().unwrap(), "-o", "-"]);
    let b = qlsp(&["compile", src.to_str().unwrap(), "-o", "-"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn graev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graev")).args(args).output().expect("run graev")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn validate_s3_chain_exits_zero() {
    let out = graev(&["validate", "--metric", &fixture("s3_chain.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["ok"], true);
}

#[test]
fn validate_rejects_a_non_invariant_table() {
    let out = graev(&["validate", "--metric", &fixture("bad_metric.json")]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["ok"], false);
    assert!(!v["biinvariance"].as_array().unwrap().is_empty());
}

#[test]
fn cancelling_word_has_norm_zero() {
    let out = graev(&["norm", "--space", &fixture("four_point.json"), "--word", r#"["a", "a^-1"]"#]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"], "0");
}

#[test]
fn free_norm_emits_match_and_dot() {
    let dot = std::env::temp_dir().join(format!("graev-match-{}.dot", std::process::id()));
    let out = graev(&[
        "norm",
        "--space",
        &fixture("four_point.json"),
        "--word",
        &fixture("free_word.json"),
        "--emit-dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // ρ(a b c⁻¹ b⁻¹, a e a⁻¹ e) = max(0, 1/2, 1/4, 1/2)
    assert_eq!(v["value"], "1/2");
    assert_eq!(v["match"], serde_json::json!([[1, 3]]));
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("graph match {") && text.contains("p1:n -- p3:n"));
    std::fs::remove_file(dot).ok();
}

#[test]
fn s6_word_has_two_maximal_forests() {
    let out = graev(&["forest", "--setup", &fixture("s6.json"), "--word", &fixture("s6_word.json"), "--enumerate"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["count"], 2);
    for f in v["forests"].as_array().unwrap() {
        assert_eq!(f["valid"], true);
        assert_eq!(f["maximal"], true);
    }
}

#[test]
fn product_norm_is_a_rational_string() {
    let out = graev(&["norm", "--setup", &fixture("s3_amalgam.json"), "--word", &fixture("amalgam_word.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // three letters outside A3, each at distance 1 from A3
    assert_eq!(v["value"], "1");
    assert!(v["alpha"].is_string() && v["zeta"].is_string());
}

#[test]
fn reduce_trace_is_json_lines() {
    let alpha = r#"[{"side":"G","elem":"(1 2)"},{"side":"H","elem":"(1 2)"},{"side":"G","elem":"(1 3)"}]"#;
    let zeta = r#"[{"side":"G","elem":"(1 2)"},{"side":"G","elem":"(1 2)"},{"side":"H","elem":"()"}]"#;
    let out = graev(&["reduce-trace", "--setup", &fixture("s3_amalgam.json"), "--alpha", alpha, "--zeta", zeta]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.first().unwrap()["op"], "start");
    assert_eq!(lines.last().unwrap()["op"], "result");
    let rhos: Vec<&str> = lines.iter().map(|l| l["rho"].as_str().unwrap()).collect();
    assert!(rhos.iter().all(|r| *r == "1"), "{rhos:?}");
}

#[test]
fn hnn_exact_and_bounded() {
    let base = ["hnn", "--metric", &fixture("s4_chain.json"), "--phi", &fixture("v4_phi.json"), "--k", "1/2"];
    let out = graev(&[&base[..], &["--word", r#"["t", "t^-1"]"#]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"], "0");
    let out = graev(&[&base[..], &["--word", r#"["t"]"#]].concat());
    assert_eq!(json(&out)["value"], "1/2");
    let out = graev(&[&base[..], &["--word", &fixture("hnn_word.json"), "--max-len", "3", "--cap", "1"]].concat());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn parse_errors_exit_two() {
    let out = graev(&["norm", "--space", &fixture("four_point.json"), "--word", r#"["nope"]"#]);
    assert_eq!(out.status.code(), Some(2));
    let out = graev(&["validate", "--metric", r#"{"group": {"cyclic": 2}}"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_setup_exits_three() {
    let setup = r#"{"G":{"group":{"symmetric":3},"discrete":"1"},"H":{"group":{"symmetric":3},"discrete":"1"},"A":[["()","()"],["(1 2)","(1 2 3)"]]}"#;
    let out = graev(&["validate", "--setup", setup]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn enumeration_limit_exits_four() {
    let out = graev(&[
        "forest",
        "--setup",
        &fixture("s6.json"),
        "--word",
        &fixture("s6_word.json"),
        "--enumerate",
        "--limit",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn outputs_are_byte_identical() {
    let runs: Vec<Vec<&str>> = vec![
        vec!["forest", "--setup", "s6.json", "--word", "s6_word.json", "--enumerate"],
        vec!["norm", "--setup", "s3_amalgam.json", "--word", "amalgam_word.json"],
        vec!["norm", "--space", "four_point.json", "--word", "free_word.json"],
        vec!["validate", "--setup", "s3_amalgam.json"],
    ];
    for r in runs {
        let args: Vec<String> =
            r.iter().map(|a| if a.ends_with(".json") { fixture(a) } else { a.to_string() }).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = graev(&args);
        assert_eq!(first.status.code(), Some(0), "{args:?}");
        for _ in 0..3 {
            assert_eq!(graev(&args).stdout, first.stdout, "{args:?}");
        }
    }
}

#[test]
fn output_flag_writes_a_file() {
    let path = std::env::temp_dir().join(format!("graev-out-{}.json", std::process::id()));
    let out = graev(&["validate", "--metric", &fixture("s3_chain.json"), "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["ok"], true);
    std::fs::remove_file(path).ok();
}

#[test]
fn selftest_runs_a_single_criterion() {
    let out = graev(&["selftest", "--only", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("criterion  3 PASS"), "{text}");
}

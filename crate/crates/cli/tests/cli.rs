use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergodic_core::io::{load_system, LoadedSystem};

fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn swap() -> String {
    tests_dir().join("golden/swap.json").display().to_string()
}

fn data(name: &str) -> String {
    tests_dir().join("data").join(name).display().to_string()
}

fn ergodic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergodic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(tests_dir().join("golden").join(name)).unwrap()
}

fn assert_golden(args: &[&str], name: &str) {
    let out = ergodic(args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), golden(name), "output of {args:?} differs from {name}");
}

#[test]
fn golden_validate() {
    assert_golden(&["validate", &swap()], "validate.json");
}

#[test]
fn golden_check_maximal() {
    assert_golden(&["check", "maximal", &swap(), "--lambda", "3/5", "--N", "inf"], "check_maximal.json");
    assert_golden(
        &["check", "maximal", &swap(), "--lambda", "3/5", "--N", "inf", "--format", "csv"],
        "check_maximal.csv",
    );
    let report: serde_json::Value = serde_json::from_str(&golden("check_maximal.json")).unwrap();
    assert_eq!(report["value"]["value"], "1/5");
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn golden_decompose_trace() {
    assert_golden(
        &["decompose", &swap(), "--x", "0", "--N", "2", "--m", "7", "--lambda", "1/2", "--trace"],
        "decompose_trace.json",
    );
    let dec: serde_json::Value = serde_json::from_str(&golden("decompose_trace.json")).unwrap();
    let blocks: Vec<_> = dec["segments"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["kind"] == "positive_block")
        .map(|s| (s["start"].as_u64().unwrap(), s["block_sum"].as_str().unwrap()))
        .collect();
    assert_eq!(blocks, [(0, "1/2"), (2, "1/2"), (4, "1/2"), (6, "1/2")]);
}

#[test]
fn converge_swap_matches_hand_averages() {
    assert_golden(&["converge", &swap(), "--x", "0", "--K", "6"], "converge.csv");
    let exact: Vec<String> = golden("converge.csv")
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(exact, ["1", "1/2", "2/3", "1/2", "3/5", "1/2"]);
}

#[test]
fn converge_rotation_final_row_is_small() {
    let out = ergodic(&[
        "converge",
        &data("golden_rotation.json"),
        "--x",
        "0",
        "--K",
        "1000000",
        "--stride",
        "10000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 100);
    let last: f64 = rows[99].split(',').nth(1).unwrap().parse().unwrap();
    assert!(last.abs() <= 2e-6, "{last}");
}

#[test]
fn doubling_exact_average() {
    let out = ergodic(&["average", &data("doubling11.json"), "--x", "1/11", "--k", "10"]);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["value"], "1/2");
}

#[test]
fn exit_codes() {
    // 0: passing check
    assert_eq!(ergodic(&["validate", &swap()]).status.code(), Some(0));

    // 1: a check whose assertion fails, with replay data in the report
    let out = ergodic(&[
        "check", "truncation", &data("swap_53.json"), "--lambda", "-1", "--N", "2", "--s", "1,3,5",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "fail");
    assert_eq!(report["parameters"]["lambda"], "-1");
    assert!(report["failures"][0].as_str().unwrap().contains("L1 distance rises"));

    // 2: input and validation errors
    let out = ergodic(&["validate", &data("malformed.json")]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 3") && msg.contains("weights[1]"), "{msg}");

    let out = ergodic(&["validate", &data("unbalanced.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("preimages"));

    let out = ergodic(&["check", "maximal", &swap(), "--lambda", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not invariant"));

    assert_eq!(ergodic(&["check", "maximal", &swap(), "--lambda", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(ergodic(&["validate", "/nonexistent/system.json"]).status.code(), Some(2));
    assert_eq!(ergodic(&["check", "duality", &data("golden_rotation.json")]).status.code(), Some(2));
}

#[test]
fn report_round_trip_is_bit_identical() {
    let dir = std::env::temp_dir().join(format!("ergodic-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let first = dir.join("first.json");
    let second = dir.join("second.json");
    let source = data("non_invertible.json");

    let out = ergodic(&["report", &source, "--lambda", "1/3", "--out", first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = ergodic(&["report", first.to_str().unwrap(), "--lambda", "1/3", "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let first_text = std::fs::read_to_string(&first).unwrap();
    assert_eq!(first_text, std::fs::read_to_string(&second).unwrap());

    let finite = |loaded: LoadedSystem| match loaded {
        LoadedSystem::Finite { system, observable } => (system, observable),
        other => panic!("{other:?}"),
    };
    let original = finite(load_system(&std::fs::read_to_string(&source).unwrap()).unwrap());
    let reloaded = finite(load_system(&first_text).unwrap());
    assert_eq!(original, reloaded);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fuzz_replay_is_seed_deterministic() {
    let run = |seed: &str| stdout(&ergodic(&["fuzz", "--trials", "40", "--size-bound", "12", "--seed", seed, "--format", "csv"]));
    assert_eq!(run("9"), run("9"));
    assert_ne!(run("9"), run("10"));
}

#[test]
fn vacuous_infinite_lambda() {
    let out = ergodic(&["check", "maximal", &data("golden_rotation.json"), "--lambda", "non-integrable", "--N", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["value"]["kind"], "vacuous-infinite");
}

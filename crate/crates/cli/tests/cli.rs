//! End-to-end tests driving the compiled binary the way CI would.

use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latin-ldpc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

/// Runs the binary, asserts exit 0, and parses stdout as JSON.
fn run_json(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout should be a JSON report")
}

fn exit_code(args: &[&str]) -> i32 {
    run(args)
        .status
        .code()
        .expect("process should exit normally")
}

fn sha256_hex(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    format!("{:x}", Sha256::digest(bytes))
}

#[test]
fn analyzing_a_written_file_matches_analyzing_the_spec() {
    let dir = tempfile::tempdir().unwrap();
    let alist = dir.path().join("h.alist");
    let out = run(&[
        "construct",
        "--family",
        "tv",
        "--p",
        "5",
        "--mu",
        "3",
        "--m",
        "1",
        "--s",
        "12",
        "--out",
        alist.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let from_file = run_json(&[
        "analyze",
        "--in",
        alist.to_str().unwrap(),
        "--girth",
        "--census",
        "6",
    ]);
    let from_spec = run_json(&[
        "analyze",
        "--spec",
        "tv:p=5,mu=3,m=1",
        "--s",
        "12",
        "--girth",
        "--census",
        "6",
    ]);

    assert_eq!(from_file["girth"], from_spec["girth"]);
    assert_eq!(from_file["census"], from_spec["census"]);
    assert_eq!(from_file["girth"], serde_json::json!(8));
    assert_eq!(from_file["census"]["4"], serde_json::json!(0));
    assert_eq!(from_file["census"]["6"], serde_json::json!(0));
}

#[test]
fn construct_writes_sidecar_and_manifest_with_correct_digests() {
    let dir = tempfile::tempdir().unwrap();
    let alist = dir.path().join("hp.alist");
    let out = run(&[
        "construct",
        "--family",
        "ti-prime",
        "--p",
        "5",
        "--mu",
        "2",
        "--s",
        "4",
        "--out",
        alist.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("28x40"), "unexpected shape line: {stdout}");

    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("hp.json")).unwrap()).unwrap();
    assert_eq!(sidecar["family"], "ti-prime");
    assert_eq!(sidecar["p"], 5);
    // Per-period code parameters: rate 4/8, time-invariant so T = 1.
    assert_eq!(sidecar["n"], 8);
    assert_eq!(sidecar["k"], 4);
    assert_eq!(sidecar["T"], 1);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("hp.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "construct");
    assert_eq!(
        manifest["outputs"]["hp.alist"],
        serde_json::json!(sha256_hex(&alist))
    );
    assert_eq!(
        manifest["outputs"]["hp.json"],
        serde_json::json!(sha256_hex(&dir.path().join("hp.json")))
    );
}

#[test]
fn block_family_final_stage_has_the_advertised_shape() {
    let dir = tempfile::tempdir().unwrap();
    let alist = dir.path().join("b.alist");
    let out = run(&[
        "construct",
        "--family",
        "block",
        "--m",
        "2",
        "--out",
        alist.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("1250x2500"));

    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(sidecar["n_rows"], 1250);
    assert_eq!(sidecar["n_cols"], 2500);
}

#[test]
fn expect_violations_get_their_own_exit_code() {
    // Satisfied assertion: the one-step lift has girth 8.
    assert_eq!(
        exit_code(&[
            "analyze",
            "--spec",
            "tv:p=5,mu=3,m=1",
            "--girth",
            "--expect",
            "girth>=8"
        ]),
        0
    );
    // Violated assertion: the unlifted family tops out at girth 6.
    assert_eq!(
        exit_code(&[
            "analyze",
            "--spec",
            "tv:p=5,mu=3,m=0",
            "--girth",
            "--expect",
            "girth>=8"
        ]),
        2
    );
    // Plain errors stay on exit 1: mu too large for p.
    assert_eq!(
        exit_code(&["analyze", "--spec", "tv:p=5,mu=4,m=0", "--girth"]),
        1
    );
}

#[test]
fn infeasible_or_malformed_requests_fail_up_front() {
    // Cycle lengths above the enumerator's ceiling are rejected before any work.
    assert_eq!(
        exit_code(&[
            "analyze",
            "--spec",
            "tv:p=3,mu=1,m=0",
            "--s",
            "3",
            "--census",
            "14"
        ]),
        1
    );
    // Odd cycle lengths cannot occur in a bipartite graph.
    assert_eq!(
        exit_code(&[
            "analyze",
            "--spec",
            "tv:p=3,mu=1,m=0",
            "--s",
            "3",
            "--count-cycles",
            "7"
        ]),
        1
    );
    assert_eq!(
        exit_code(&["construct", "--family", "nonsense", "--out", "/tmp/x.alist"]),
        1
    );
    // A census on an inline convolutional spec needs an explicit window.
    assert_eq!(
        exit_code(&["analyze", "--spec", "tv:p=5,mu=3,m=0", "--census", "6"]),
        1
    );
    assert_eq!(
        exit_code(&[
            "simulate",
            "--spec",
            "tv:p=5,mu=3,m=0",
            "--s",
            "6",
            "--crossovers",
            "0.02",
            "--frames",
            "0",
        ]),
        1
    );
}

#[test]
fn girth_without_a_window_reports_the_stabilized_value() {
    let report = run_json(&["analyze", "--spec", "tv:p=5,mu=3,m=1", "--girth"]);
    assert_eq!(report["girth"], serde_json::json!(8));
    assert_eq!(report["stabilized"], serde_json::json!(true));
    assert!(report["window_s"].as_u64().is_some());
    let witness = report["witness"].as_array().expect("a witness cycle");
    assert_eq!(witness.len(), 8);
}

#[test]
fn simulation_sweeps_are_reproducible_and_noiseless_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--spec".into(),
            "tv:p=5,mu=3,m=0".into(),
            "--s".into(),
            "8".into(),
            "--crossovers".into(),
            "0,0.05".into(),
            "--frames".into(),
            "30".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    assert!(bin().args(args(&a)).output().unwrap().status.success());
    assert!(bin().args(args(&b)).output().unwrap().status.success());

    let csv_a = std::fs::read(&a).unwrap();
    assert_eq!(
        csv_a,
        std::fs::read(&b).unwrap(),
        "same seed should give identical sweeps"
    );

    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("crossover,frames,bit_errors,frame_errors,avg_iters")
    );
    let zero_noise = lines.next().expect("a row for crossover 0");
    assert!(
        zero_noise.starts_with("0,30,0,0"),
        "zero crossover should decode cleanly: {zero_noise}"
    );

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["parameters"]["seed"], "3");
    assert_eq!(
        manifest["outputs"]["a.csv"],
        serde_json::json!(sha256_hex(&a))
    );
}

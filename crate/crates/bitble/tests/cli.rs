//! End-to-end runs of the `bitble` binary: flag surface, exit codes, file
//! outputs, and byte stability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bitble(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bitble"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn encode_identity_with_verification() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "id.csv", "1,0\n0,1\n");
    let out = bitble(
        &[
            "encode", "--input", "id.csv", "--protocol", "bitble1", "--verify",
            "--output", "id.qasm", "--metrics", "id.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = read_json(&dir.path().join("id.json"));
    assert_eq!(metrics["schema"], 1);
    assert_eq!(metrics["protocol"], "bitble1");
    assert!((metrics["alpha"].as_f64().unwrap() - 1.4142135623730951).abs() < 1e-12);
    assert_eq!(metrics["ancilla"], 1);
    assert!(metrics["epsilon"].as_f64().unwrap() <= 1e-10);
    let qasm = std::fs::read_to_string(dir.path().join("id.qasm")).unwrap();
    assert!(qasm.contains("qreg q[2];"));
}

#[test]
fn encode_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.csv", "0.3,-0.7\n0.5+0.25i,1\n");
    for name in ["a", "b"] {
        let out = bitble(
            &[
                "encode", "--input", "m.csv", "--protocol", "bitble3", "--cutoff", "1e-8",
                "--output", &format!("{name}.qasm"), "--metrics", &format!("{name}.json"),
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.qasm")).unwrap();
    let b = std::fs::read(dir.path().join("b.qasm")).unwrap();
    assert_eq!(a, b);
    let mut ja = read_json(&dir.path().join("a.json"));
    let mut jb = read_json(&dir.path().join("b.json"));
    // wall-clock is the one legitimately varying field
    ja["synth_time_ms"] = 0.into();
    jb["synth_time_ms"] = 0.into();
    assert_eq!(ja, jb);
}

#[test]
fn encode_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "1,2\n3,oops\n");
    let out = bitble(
        &["encode", "--input", "bad.csv", "--protocol", "bitble1", "--output", "x.qasm"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "csv parse error");

    write(dir.path(), "m.csv", "1,0\n0,1\n");
    let out = bitble(
        &["encode", "--input", "m.csv", "--protocol", "nope", "--output", "x.qasm"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "unknown protocol");

    let out = bitble(&["encode", "--input", "m.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1), "missing required flags");
}

#[test]
fn verify_cap_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bitble(
        &["laplacian", "--dim", "1", "--qubits", "8", "--output", "l8.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    // 8 system qubits -> 16 total, over the dense verification cap
    let out = bitble(
        &[
            "encode", "--input", "l8.csv", "--protocol", "bitble1", "--verify",
            "--output", "l8.qasm",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verify"));
}

#[test]
fn lossy_verification_reports_error_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.csv", "0.9,-0.4\n0.2+0.6i,0.5\n");
    let out = bitble(
        &[
            "encode", "--input", "m.csv", "--protocol", "bitble1", "--cutoff", "0.5",
            "--verify", "--output", "m.qasm", "--metrics", "m.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "lossy run still exits 0");
    let metrics = read_json(&dir.path().join("m.json"));
    assert!(metrics["epsilon"].as_f64().unwrap() > 0.0);
}

#[test]
fn laplacian_fixture_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = bitble(
        &["laplacian", "--dim", "1", "--qubits", "1", "--output", "l.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("l.csv")).unwrap(),
        "2,-1\n-1,2\n"
    );
    let out = bitble(
        &["laplacian", "--dim", "2", "--qubits", "1,1", "--output", "l2.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let first = std::fs::read_to_string(dir.path().join("l2.csv")).unwrap();
    assert!(first.starts_with("4,-1,-1,0"));
    let out = bitble(&["laplacian", "--dim", "1", "--output", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1), "missing --qubits");
}

#[test]
fn stateprep_basis_and_random() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e0.csv", "1,0,0,0\n");
    let out = bitble(
        &["stateprep", "--input", "e0.csv", "--output", "e0.qasm", "--verify"],
        dir.path(),
    );
    assert!(out.status.success());
    let qasm = std::fs::read_to_string(dir.path().join("e0.qasm")).unwrap();
    // header + OPENQASM + include + qreg only: the circuit is empty
    assert_eq!(qasm.lines().count(), 4);

    write(
        dir.path(),
        "psi.csv",
        "0.1+0.2i,-0.4\n0.3-0.5i,0.25i\n0.6,-0.1-0.1i\n0.2i,0.7\n",
    );
    let out = bitble(
        &[
            "stateprep", "--input", "psi.csv", "--output", "psi.qasm", "--verify",
            "--metrics", "psi.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = read_json(&dir.path().join("psi.json"));
    assert_eq!(metrics["n"], 3);
    assert!(metrics["epsilon"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn bench_rows_and_range_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = bitble(
        &[
            "bench", "--min-qubits", "3", "--max-qubits", "3", "--protocols",
            "bitble1,bitble2,bitble3,fable", "--trials", "1", "--seed", "9",
            "--output", "bench.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report = read_json(&dir.path().join("bench.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // flat baseline factor dominates every tree factor
    let alpha = |name: &str| {
        rows.iter()
            .find(|r| r["protocol"] == name)
            .unwrap()["alpha"]
            .as_f64()
            .unwrap()
    };
    assert!(alpha("bitble1") <= alpha("fable"));
    assert!(alpha("bitble3") <= alpha("fable"));

    let out = bitble(
        &[
            "bench", "--min-qubits", "4", "--max-qubits", "3", "--output", "x.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "inverted range");
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.csv", "0.3,-0.7\n0.5+0.25i,1\n");
    for (name, threads) in [("t1", "1"), ("t4", "4")] {
        let out = bitble(
            &[
                "encode", "--threads", threads, "--input", "m.csv", "--protocol",
                "bitble1", "--output", &format!("{name}.qasm"),
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(dir.path().join("t1.qasm")).unwrap(),
        std::fs::read(dir.path().join("t4.qasm")).unwrap()
    );
}

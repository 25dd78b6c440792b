use std::path::Path;
use std::process::{Command, Output};

fn qmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmf")).args(args).env_remove("QMF_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qmf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_lines(p: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(p).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn invalid_shape_exits_with_usage_code_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.qmds");
    let r = qmf(&["gen", "--qubits", "3", "--k", "3", "--count", "4", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(qmf(&["gen", "--qubits", "3"]).status.code(), Some(2));
    assert_eq!(
        qmf(&["eval", "--k", "2", "--mode", "model1", "--qubits", "3", "--out", s(&out)]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let r = qmf(&["train", "--data", s(&dir.path().join("nope.qmds")), "--out", s(&dir.path().join("m.qmck"))]);
    assert_eq!(r.status.code(), Some(3));
    let bad = dir.path().join("bad.qmds");
    std::fs::write(&bad, b"not a data set").unwrap();
    assert_eq!(qmf(&["validate", "--data", s(&bad)]).status.code(), Some(3));
}

#[test]
fn gen_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.qmds"), dir.path().join("b.qmds"));
    ok(&["gen", "--qubits", "3", "--k", "2", "--count", "30", "--seed", "4", "--out", s(&a), "--threads", "1"]);
    ok(&["gen", "--qubits", "3", "--k", "2", "--count", "30", "--seed", "4", "--out", s(&b), "--threads", "3"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_str(&ok(&["validate", "--data", s(&a)])).unwrap();
    assert_eq!(v["report"]["samples"], 30);

    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.qmds.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "gen");
    assert_eq!(m["threads"], 1);
    assert_eq!(m["seeds"]["data"], 4);
    assert_eq!(m["args"]["count"], 30);
    assert_eq!(m["input_digests"]["output"].as_str().unwrap().len(), 64);
}

#[test]
fn train_transfer_eval_and_bench_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f);
    ok(&["gen", "--qubits", "3", "--k", "2", "--count", "12", "--seed", "1", "--out", s(&p("n3.qmds"))]);
    ok(&["gen", "--qubits", "4", "--k", "3", "--count", "6", "--seed", "2", "--out", s(&p("n4.qmds"))]);

    let summary: serde_json::Value = serde_json::from_str(&ok(&[
        "--deterministic",
        "train",
        "--data",
        s(&p("n3.qmds")),
        "--scale",
        "1",
        "--epochs",
        "3",
        "--batch",
        "5",
        "--lr",
        "1e-3",
        "--checkpoint-every",
        "2",
        "--out",
        s(&p("N3.qmck")),
    ]))
    .unwrap();
    assert_eq!(summary["epochs"], 3);
    let curve = json_lines(&p("N3.qmck.curve.jsonl"));
    assert_eq!(curve.len(), 3);
    assert_eq!(curve[2]["mean_loss"], summary["final_loss"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p("N3.qmck.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["deterministic"], true);
    assert_eq!(manifest["threads"], 1);
    assert_eq!(manifest["input_digests"]["data"].as_str().unwrap().len(), 64);

    // Same seed, same weights.
    ok(&[
        "--deterministic",
        "train",
        "--data",
        s(&p("n3.qmds")),
        "--scale",
        "1",
        "--epochs",
        "3",
        "--batch",
        "5",
        "--lr",
        "1e-3",
        "--out",
        s(&p("again.qmck")),
    ]);
    assert_eq!(std::fs::read(p("N3.qmck")).unwrap(), std::fs::read(p("again.qmck")).unwrap());

    ok(&[
        "train",
        "--data",
        s(&p("n4.qmds")),
        "--from",
        s(&p("N3.qmck")),
        "--policy",
        "last-layer",
        "--epochs",
        "1",
        "--batch",
        "3",
        "--out",
        s(&p("N4k3.qmck")),
    ]);
    // A width that differs from the parent is refused.
    let r = qmf(&[
        "train",
        "--data",
        s(&p("n4.qmds")),
        "--from",
        s(&p("N3.qmck")),
        "--scale",
        "2",
        "--out",
        s(&p("x.qmck")),
    ]);
    assert_eq!(r.status.code(), Some(2));

    ok(&[
        "eval",
        "--ckpt",
        s(&p("N3.qmck")),
        "--k",
        "2",
        "--ranks",
        "1,7-8",
        "--samples",
        "3",
        "--out",
        s(&p("e.jsonl")),
    ]);
    let rows = json_lines(&p("e.jsonl"));
    assert_eq!(rows.iter().map(|r| r["rank"].as_u64().unwrap()).collect::<Vec<_>>(), vec![1, 7, 8]);
    assert!(rows.iter().all(|r| r["mode"] == "model1" && r["samples"] == 3));

    ok(&[
        "eval",
        "--qubits",
        "3",
        "--k",
        "2",
        "--mode",
        "oracle",
        "--ranks",
        "2",
        "--samples",
        "4",
        "--out",
        s(&p("o.jsonl")),
    ]);
    let f = json_lines(&p("o.jsonl"))[0]["f_mean"].as_f64().unwrap();
    assert!((f - 1.0).abs() < 1e-9);

    ok(&[
        "bench",
        "--cases",
        "N3k2,N4k3",
        "--ckpt-dir",
        s(dir.path()),
        "--samples",
        "2",
        "--baseline-iters",
        "50",
        "--out",
        s(&p("b.jsonl")),
    ]);
    let rows = json_lines(&p("b.jsonl"));
    assert_eq!(rows.len(), 6);
    for case in rows.chunks(3) {
        assert!(case[0]["mean_seconds"].as_f64() <= case[1]["mean_seconds"].as_f64());
    }
    let r = qmf(&["bench", "--cases", "N5k4", "--ckpt-dir", s(dir.path()), "--out", s(&p("c.jsonl"))]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn bad_rank_lists_and_thread_counts_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.jsonl");
    for ranks in ["", "3-1", "x", "9"] {
        let r = qmf(&["eval", "--qubits", "3", "--k", "2", "--mode", "random", "--ranks", ranks, "--out", s(&out)]);
        assert_eq!(r.status.code(), Some(2), "ranks {ranks:?}");
    }
    let r = Command::new(env!("CARGO_BIN_EXE_qmf"))
        .args(["eval", "--qubits", "3", "--k", "2", "--mode", "random", "--out", s(&out)])
        .env("QMF_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

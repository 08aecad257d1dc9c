//! End-to-end checks of the `rlpass` binary: artifact determinism, report
//! shape, exit codes, and the optimise/verify round trip.

use std::path::Path;
use std::process::{Command, Output};

fn rlpass(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlpass"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = rlpass(args, dir);
    assert!(
        out.status.success(),
        "rlpass {:?} failed:\n{}{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

fn gen_small(dir: &Path, name: &str, seed: u64, count: usize) {
    run_ok(
        &[
            "gen",
            "--out",
            name,
            "--count",
            &count.to_string(),
            "--classes",
            "Ordered-Clifford-SU4,Clifford-SU4",
            "--min-qubits",
            "3",
            "--max-qubits",
            "4",
            "--min-size",
            "1",
            "--max-size",
            "2",
            "--seed",
            &seed.to_string(),
        ],
        dir,
    );
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).expect("readable");
    text.lines().next().expect("non-empty").to_string()
}

#[test]
fn gen_is_byte_identical_for_identical_seeds() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "a.jsonl", 11, 30);
    gen_small(dir.path(), "b.jsonl", 11, 30);
    gen_small(dir.path(), "c.jsonl", 12, 30);
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    let c = std::fs::read(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let ma = std::fs::read(dir.path().join("a.manifest.json")).unwrap();
    let mb = std::fs::read(dir.path().join("b.manifest.json")).unwrap();
    assert_eq!(ma, mb);
}

#[test]
fn baseline_output_verifies_and_tampered_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "d.jsonl", 3, 10);
    std::fs::write(dir.path().join("in.json"), first_line(&dir.path().join("d.jsonl")) + "\n")
        .unwrap();
    run_ok(
        &["baseline", "--circuit", "in.json", "--method", "beam", "--depth", "2", "--width", "2", "--out", "opt.json"],
        dir.path(),
    );
    let verify = rlpass(&["verify", "in.json", "opt.json"], dir.path());
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&verify.stdout).trim(),
        "equivalent, distance < 1e-7"
    );

    // Different circuits from the same class are not equivalent.
    let text = std::fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
    let other = text.lines().nth(1).unwrap();
    std::fs::write(dir.path().join("other.json"), other.to_string() + "\n").unwrap();
    let bad = rlpass(&["verify", "in.json", "other.json"], dir.path());
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).starts_with("not equivalent"));
}

#[test]
fn eval_report_has_the_expected_shape_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "d.jsonl", 7, 20);
    let eval_args = [
        "eval",
        "--data",
        "d.jsonl",
        "--out",
        "r1.csv",
        "--sequence",
        "CliffordResynthesis,KAKDecomposition",
        "--no-timing",
        "--threads",
        "2",
    ];
    run_ok(&eval_args, dir.path());
    let mut second = eval_args;
    second[4] = "r2.csv";
    run_ok(&second, dir.path());
    let r1 = std::fs::read(dir.path().join("r1.csv")).unwrap();
    let r2 = std::fs::read(dir.path().join("r2.csv")).unwrap();
    assert_eq!(r1, r2);

    let text = String::from_utf8(r1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "circuit_id,class,n_qubits,n0,n_final,cumulative_reward,passes_applied,wall_time_ms"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    for (i, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8, "row {row:?}");
        assert_eq!(fields[0], i.to_string(), "rows keep input order");
        assert_eq!(fields[6], "CliffordResynthesis;KAKDecomposition");
        assert_eq!(fields[7], "0.000");
        let n0: f64 = fields[3].parse().unwrap();
        let n_final: f64 = fields[4].parse().unwrap();
        let reward: f64 = fields[5].parse().unwrap();
        let expect = if n0 == 0.0 { 0.0 } else { (n0 - n_final) / n0 };
        assert!((reward - expect).abs() < 1e-12);
    }
}

#[test]
fn summarize_matches_manual_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "d.jsonl", 9, 15);
    run_ok(
        &["eval", "--data", "d.jsonl", "--out", "r.csv", "--method", "greedy", "--no-timing"],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut rewards: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    rewards.sort_by(f64::total_cmp);
    let median = rewards[rewards.len() / 2];

    let stdout = run_ok(&["summarize", "--report", "r.csv"], dir.path());
    let line = stdout.trim();
    assert!(line.starts_with("rows=15 "), "{line}");
    let grab = |key: &str| -> f64 {
        line.split(&format!("{key}="))
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((grab("mean") - mean).abs() < 5e-7);
    assert!((grab("median") - median).abs() < 5e-7);
}

#[test]
fn train_checkpoint_drives_optimize_with_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "d.jsonl", 21, 20);
    let train_args = [
        "train",
        "--data",
        "d.jsonl",
        "--out",
        "m1.ckpt",
        "--log",
        "log1.csv",
        "--seed",
        "4",
        "--hidden",
        "8",
        "--layers",
        "1",
        "--max-steps",
        "128",
        "--n-envs",
        "2",
        "--n-steps",
        "8",
        "--batch-size",
        "8",
        "--epochs",
        "1",
        "--eval-interval",
        "1",
        "--validation-size",
        "2",
        "--threads",
        "1",
    ];
    run_ok(&train_args, dir.path());
    let mut again = train_args;
    again[4] = "m2.ckpt";
    again[6] = "log2.csv";
    run_ok(&again, dir.path());
    let m1 = std::fs::read(dir.path().join("m1.ckpt")).unwrap();
    let m2 = std::fs::read(dir.path().join("m2.ckpt")).unwrap();
    assert_eq!(m1, m2, "same seed trains to byte-identical checkpoints");
    let l1 = std::fs::read(dir.path().join("log1.csv")).unwrap();
    let l2 = std::fs::read(dir.path().join("log2.csv")).unwrap();
    assert_eq!(l1, l2);
    assert!(String::from_utf8(l1).unwrap().starts_with(
        "step,mean_episode_reward,validation_reward,policy_loss,value_loss,entropy"
    ));

    std::fs::write(dir.path().join("in.json"), first_line(&dir.path().join("d.jsonl")) + "\n")
        .unwrap();
    let stdout = run_ok(
        &["optimize", "--model", "m1.ckpt", "--circuit", "in.json", "--out", "opt.json", "--trace"],
        dir.path(),
    );
    let lines: Vec<&str> = stdout.lines().collect();
    let terminated = lines
        .iter()
        .position(|l| l.starts_with("terminated: "))
        .expect("trace ends with a termination reason");
    for l in &lines[..terminated] {
        assert!(
            rlpass_core::Action::from_name(l).is_some(),
            "trace line {l:?} is a registered pass"
        );
    }
    let verify = rlpass(&["verify", "in.json", "opt.json"], dir.path());
    assert_eq!(verify.status.code(), Some(0));
}

#[test]
fn exit_codes_distinguish_usage_data_and_verification_failures() {
    let dir = tempfile::tempdir().unwrap();
    let usage = rlpass(&["eval", "--data", "x.jsonl", "--out", "r.csv"], dir.path());
    assert_eq!(usage.status.code(), Some(1), "missing engine is a usage error");
    let badpass = rlpass(
        &["eval", "--data", "x.jsonl", "--out", "r.csv", "--sequence", "FooPass"],
        dir.path(),
    );
    assert_eq!(badpass.status.code(), Some(1));
    let badflag = rlpass(&["gen", "--frobnicate"], dir.path());
    assert_eq!(badflag.status.code(), Some(1));
    let missing = rlpass(
        &["eval", "--data", "nope.jsonl", "--out", "r.csv", "--method", "greedy"],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(2), "unreadable input is a data error");
    std::fs::write(dir.path().join("bad.json"), "{\"version\":1,\"qubits\":1,\"ops\":[{\"g\":\"Nope\",\"q\":[0]}]}\n").unwrap();
    let malformed = rlpass(&["verify", "bad.json", "bad.json"], dir.path());
    assert_eq!(malformed.status.code(), Some(2));
    let help = rlpass(&["--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
}

use std::path::Path;
use std::process::{Command, Output};

fn quanvolve(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quanvolve"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&quanvolve(d, &["gen-circuit", "--family", "integrated", "--k", "3", "--gates", "4"])), 2);
    assert_eq!(code(&quanvolve(d, &["--seed", "5..1", "gen-circuit", "--family", "rotational", "--k", "2"])), 2);
    assert_eq!(code(&quanvolve(d, &["no-such-command"])), 2);
    assert_eq!(code(&quanvolve(d, &["quantize-report", "--dataset", "missing.raw"])), 3);
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&quanvolve(d, &["--config", "bad.json", "pipeline", "-o", "run"])), 2);
}

#[test]
fn synth_preprocess_train_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = quanvolve(d, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    ok(&["--seed", "1", "synth-data", "--count", "24", "--size", "12", "-o", "train.raw"]);
    ok(&["--seed", "1", "synth-data", "--count", "8", "--size", "12", "--split", "test", "-o", "test.raw"]);
    ok(&["--seed", "3", "gen-circuit", "--family", "integrated", "--k", "2", "--gates", "8", "--count", "2", "-o", "f.json"]);
    assert!(d.join("f0.json").exists() && d.join("f1.json").exists());

    let pre = |data: &str, out: &str| {
        ok(&["preprocess", "--dataset", data, "--filters", "f0.json..f1.json", "--memo", "memo.bin", "-o", out]);
    };
    pre("train.raw", "train.bin");
    pre("test.raw", "test.bin");
    ok(&[
        "--seed", "0..1", "train", "--features", "train.bin", "--test-features", "test.bin", "--max-epochs", "2",
        "-o", "run.json",
    ]);
    assert!(d.join("run.0.json").exists() && d.join("run.1.json").exists());
    let out = ok(&["eval", "--model", "run.0.json", "--features", "test.bin"]);
    assert!(!out.stdout.is_empty());

    let report = ok(&["quantize-report", "--dataset", "train.raw", "--levels", "5,50"]);
    let csv = String::from_utf8(report.stdout).unwrap();
    assert!(csv.starts_with("levels,"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn expressibility_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = quanvolve(
        dir.path(),
        &[
            "--seed", "7", "expressibility", "--family", "integrated", "--k", "2", "--gates", "4:8", "--repeats", "2",
            "--pairs", "64", "-o", "expr.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("expr.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

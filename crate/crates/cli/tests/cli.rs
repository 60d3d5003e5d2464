use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn dpmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpmix"))
        .args(args)
        .current_dir(dir)
        .env_remove("DPMIX_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dpmix(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn small_corpus(dir: &Path) {
    ok(dir, &["synth", "--out", "c", "--videos", "4", "--frames", "12", "--points", "64", "--classes", "5"]);
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    small_corpus(t.path());
    ok(t.path(), &["synth", "--out", "d", "--videos", "4", "--frames", "12", "--points", "64", "--classes", "5"]);
    for name in ["video_000.pcv", "video_003.labels"] {
        assert_eq!(read(t.path(), &format!("c/{name}")), read(t.path(), &format!("d/{name}")));
    }
}

#[test]
fn augment_same_seed_same_bytes() {
    let t = tempfile::tempdir().unwrap();
    small_corpus(t.path());
    let args = |out: &'static str| {
        ["augment", "--in", "c/video_000.pcv", "--out", out, "--seed", "7", "--jitter-sigma", "0.02", "--flip", "x"]
    };
    ok(t.path(), &args("a.pcv"));
    ok(t.path(), &args("b.pcv"));
    assert_eq!(read(t.path(), "a.pcv"), read(t.path(), "b.pcv"));
    assert_ne!(read(t.path(), "a.pcv"), read(t.path(), "c/video_000.pcv"));
}

#[test]
fn cutmix_writes_video_and_soft_labels() {
    let t = tempfile::tempdir().unwrap();
    small_corpus(t.path());
    ok(t.path(), &["convert", "--in", "c", "--out", "c", "--width", "16", "--height", "16"]);
    let args = [
        "augment", "--in", "c/video_000.dpv", "--out", "m.dpv", "--seed", "3", "--cutmix", "c/video_001.dpv",
        "--labels", "c/video_000.labels", "--cutmix-labels", "c/video_001.labels", "--soft-labels", "m.csv",
    ];
    ok(t.path(), &args);
    let soft = String::from_utf8(read(t.path(), "m.csv")).unwrap();
    assert!(soft.starts_with("L=12,K=5\n"));
    ok(t.path(), &["render", "--in", "m.dpv", "--frame", "11", "--out", "m.pgm"]);
    assert!(read(t.path(), "m.pgm").starts_with(b"P5 16 16 255\n"));
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    small_corpus(t.path());
    let missing = dpmix(t.path(), &["convert", "--in", "absent.pcv", "--out", "x.dpv"]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("absent.pcv"));
    assert!(!t.path().join("x.dpv").exists());

    let nothing = dpmix(t.path(), &["augment", "--in", "c/video_000.pcv", "--out", "y.pcv"]);
    assert_eq!(code(&nothing), 1);
    assert!(String::from_utf8_lossy(&nothing.stderr).contains("nothing to do"));

    assert_eq!(code(&dpmix(t.path(), &["convert", "--in", "c", "--out", "z", "--width", "0"])), 1);
    assert_eq!(code(&dpmix(t.path(), &["no-such-command"])), 1);
    assert_eq!(code(&dpmix(t.path(), &["--help"])), 0);
    assert_eq!(code(&dpmix(t.path(), &["--version"])), 0);

    std::fs::write(t.path().join("bad.pcv"), b"PCV1\x01\0\0\0").unwrap();
    let bad = dpmix(t.path(), &["convert", "--in", "bad.pcv", "--out", "bad.dpv"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("offset"));
}

#[test]
fn fuse_with_itself_is_identity_and_eval_of_truth_is_perfect() {
    let t = tempfile::tempdir().unwrap();
    small_corpus(t.path());
    ok(t.path(), &["train-baseline", "--modality", "point", "--data", "c", "--out", "m.json"]);
    ok(t.path(), &["predict", "--model", "m.json", "--in", "c/video_002.pcv", "--out", "p.csv"]);
    ok(t.path(), &["fuse", "--in", "p.csv", "--in", "p.csv", "--out", "f.csv"]);
    assert_eq!(read(t.path(), "p.csv"), read(t.path(), "f.csv"));

    let table = ok(t.path(), &["eval", "--pred", "c", "--gt", "c", "--report", "r.json", "--confusion", "cm.csv"]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["Acc", "Edit", "F1@10", "F1@25", "F1@50"]);
    assert!(lines[1].split_whitespace().all(|v| v == "100.00"), "{table}");
    let report: serde_json::Value = serde_json::from_slice(&read(t.path(), "r.json")).unwrap();
    assert_eq!(report["corpus"]["acc"], 100.0);
    assert_eq!(report["corpus"]["num_videos"], 4);
    assert_eq!(report["videos"].as_array().unwrap().len(), 4);
}

#[test]
fn jobs_do_not_change_outputs() {
    let t = tempfile::tempdir().unwrap();
    small_corpus(t.path());
    ok(t.path(), &["--jobs", "1", "convert", "--in", "c", "--out", "one"]);
    ok(t.path(), &["--jobs", "4", "convert", "--in", "c", "--out", "four"]);
    for i in 0..4 {
        let name = format!("video_{i:03}.dpv");
        assert_eq!(read(t.path(), &format!("one/{name}")), read(t.path(), &format!("four/{name}")));
    }
}

#[test]
fn full_corpus_pipeline_fuses_better_than_either_expert() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let start = Instant::now();
    ok(d, &["synth", "--out", "corpus"]);
    std::fs::create_dir(d.join("train")).unwrap();
    std::fs::create_dir(d.join("test")).unwrap();
    for i in 0..40 {
        let split = if i < 30 { "train" } else { "test" };
        for ext in ["pcv", "labels"] {
            let name = format!("video_{i:03}.{ext}");
            std::fs::rename(d.join("corpus").join(&name), d.join(split).join(&name)).unwrap();
        }
    }
    for split in ["train", "test"] {
        ok(d, &["convert", "--in", split, "--out", split]);
    }
    ok(d, &["train-baseline", "--modality", "point", "--data", "train", "--out", "point.json"]);
    ok(d, &["train-baseline", "--modality", "depth", "--data", "train", "--out", "depth.json"]);
    ok(d, &["predict", "--model", "point.json", "--in", "test", "--out", "pp"]);
    ok(d, &["predict", "--model", "depth.json", "--in", "test", "--out", "pd"]);
    ok(d, &["fuse", "--in", "pp", "--in", "pd", "--out", "fused"]);
    ok(d, &["decode", "--in", "fused", "--out", "decoded"]);
    let acc = |pred: &str| -> f64 {
        let table = ok(d, &["eval", "--pred", pred, "--gt", "test"]);
        table.lines().nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
    };
    let (p, dep, f) = (acc("pp"), acc("pd"), acc("fused"));
    assert_eq!(acc("decoded"), f);
    let secs = start.elapsed().as_secs_f64();
    assert!(f > p && f > dep, "fused {f}, point {p}, depth {dep}");
    assert!(secs < 60.0, "pipeline took {secs:.1}s");
}

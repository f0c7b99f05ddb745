use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ecastar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecastar")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ecastar(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn blobs(dir: &Path, k: &str, seed: &str) {
    ok(&["gen-blobs", "--k", k, "--per", "40", "--dim", "2", "--seed", seed, "--out", dir.to_str().unwrap()]);
}

#[test]
fn run_is_byte_identical_across_invocations_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    blobs(&data, "3", "5");
    let points = data.join("points.txt");
    let truth = data.join("truth.txt");
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(name);
        ok(&[
            "run", "--algo", "eca", "--data", points.to_str().unwrap(), "--truth", truth.to_str().unwrap(),
            "--runs", "6", "--seed", "9", "--threads", threads, "--no-timing", "--out", out.to_str().unwrap(),
        ]);
        outputs.push(out);
    }
    for file in ["runs.csv", "runs.json", "summary.csv", "summary.json"] {
        let first = fs::read(outputs[0].join(file)).unwrap();
        for other in &outputs[1..] {
            assert_eq!(first, fs::read(other.join(file)).unwrap(), "{file} differs");
        }
    }
    let csv = fs::read_to_string(outputs[0].join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("dataset,algorithm,run,sse,nmse,epsilon_ratio,ci,csi,nmi,avg_intra,avg_inter,wall_seconds\n"));
}

#[test]
fn config_file_reaches_the_algorithms() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    blobs(&data, "2", "1");
    let cfg = tmp.path().join("cfg.txt");
    fs::write(&cfg, "k = 5\nmax_iter = 3\n").unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "run", "--algo", "kmeans", "--data", data.join("points.txt").to_str().unwrap(), "--runs", "2",
        "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("runs.json")).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    // no ground truth: external measures are absent
    assert!(rows[0]["ci"].is_null());

    fs::write(&cfg, "mystery = 1\n").unwrap();
    let bad = ecastar(&[
        "run", "--algo", "kmeans", "--data", data.join("points.txt").to_str().unwrap(),
        "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown key"));
}

#[test]
fn bench_writes_grid_and_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    blobs(&tmp.path().join("three"), "3", "2");
    blobs(&tmp.path().join("four"), "4", "3");
    let suite = tmp.path().join("suite.txt");
    fs::write(
        &suite,
        "# name tags k n files\n\
         three tags=overlap,cluster_count k=3 n=120 data=three/points.txt truth=three/truth.txt labels=three/labels.txt\n\
         four tags=cluster_count,shape k=4 n=160 data=four/points.txt truth=four/truth.txt\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let stdout = ok(&[
        "bench", "--suite", suite.to_str().unwrap(), "--algos", "eca,kmeanspp", "--runs", "3",
        "--no-timing", "--out", out.to_str().unwrap(),
    ])
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("overall rank eca_star"));
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 3);
    let ranking = fs::read_to_string(out.join("ranking.csv")).unwrap();
    let mut lines = ranking.lines();
    assert_eq!(lines.next(), Some("algorithm,overlap,cluster_count,dimensionality,structure,shape,overall"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn metrics_scores_a_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    blobs(&data, "3", "4");
    let out = ok(&[
        "metrics", "--data", data.join("points.txt").to_str().unwrap(), "--labels",
        data.join("labels.txt").to_str().unwrap(), "--truth", data.join("truth.txt").to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ci"], 0);
    assert_eq!(report["nmi"], 1.0);
}

#[test]
fn errors_exit_nonzero() {
    let missing = ecastar(&["run", "--algo", "eca", "--data", "/no/such/file", "--out", "/tmp/x"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/file"));
    assert!(!ecastar(&["run", "--algo", "em", "--data", "x", "--out", "y"]).status.success());
    assert!(!ecastar(&["gen-blobs", "--k", "0", "--per", "3", "--out", "/tmp/x"]).status.success());
}

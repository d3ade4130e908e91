//! End-to-end smoke test of the command-line binary.

use std::process::Command;

use bregpart::dataio::write_fvecs;
use bregpart_core::data::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bregpart"))
}

#[test]
fn build_query_bench_stats_flow() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> =
        (0..500).map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let data_path = dir.path().join("data.fvecs");
    write_fvecs(&data_path, &Matrix::from_rows(&rows).unwrap()).unwrap();

    let queries_path = dir.path().join("queries.fvecs");
    let rest_path = dir.path().join("rest.fvecs");
    let out = bin()
        .args(["sample-queries", "--input"])
        .arg(&data_path)
        .args(["--count", "10", "--seed", "1", "--out"])
        .arg(&queries_path)
        .arg("--rest")
        .arg(&rest_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let index_path = dir.path().join("index.bbf");
    let out = bin()
        .args(["build", "--input"])
        .arg(&rest_path)
        .args(["--divergence", "se", "--partitions", "4", "--correlated", "on"])
        .args(["--page-size", "1024", "--leaf-capacity", "16", "--out"])
        .arg(&index_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["query", "--index"])
        .arg(&index_path)
        .arg("--queries")
        .arg(&queries_path)
        .args(["--k", "5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("query ")).count(), 10);

    let report_path = dir.path().join("report.csv");
    let out = bin()
        .args(["bench", "--index"])
        .arg(&index_path)
        .arg("--queries")
        .arg(&queries_path)
        .args(["--k", "5,20", "--modes", "exact,approx:0.9", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10 * 2 * 2); // header + queries*k*modes
    assert!(report_path.with_extension("json").exists());

    let out = bin().args(["stats", "--index"]).arg(&index_path).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("records:        490"));
    assert!(stdout.contains("partitions:     4"));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.bbf");
    std::fs::write(&junk, b"not an index").unwrap();
    let out = bin()
        .args(["stats", "--index"])
        .arg(&junk)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

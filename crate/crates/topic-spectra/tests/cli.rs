//! Integration tests for the command-line front end: the documented
//! pipeline, exit codes, and byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topic-spectra"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("topic-spectra-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("gen.cfg");
    std::fs::write(
        &path,
        "p = 60\nn = 200\nk = 2\nlength_law = fixed:40\nanchor_words_per_topic = 5\n",
    )
    .unwrap();
    path
}

#[test]
fn generate_fit_eval_pipeline() {
    let dir = tmp("pipeline");
    let config = write_small_config(&dir);
    let data = dir.join("data");
    let est = dir.join("est");

    let out = run(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["manifest.json", "counts.csv", "a.csv", "w.csv"] {
        assert!(data.join(file).exists(), "missing {file}");
    }

    let out = run(&[
        "fit",
        "--corpus",
        data.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        est.to_str().unwrap(),
        "--weights",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["a_hat.csv", "w_hat.csv", "fit.json"] {
        assert!(est.join(file).exists(), "missing {file}");
    }

    let out = run(&[
        "eval",
        "--estimate",
        est.to_str().unwrap(),
        "--truth",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("eval prints valid json");
    let total = parsed["total_l1"].as_f64().expect("total_l1 field");
    assert!(total.is_finite() && total >= 0.0);
    assert!(parsed["weight_loss"]["max_l1"].as_f64().is_some());

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn generate_is_byte_reproducible() {
    let dir = tmp("repro");
    let config = write_small_config(&dir);
    let first = dir.join("one");
    let second = dir.join("two");
    for out_dir in [&first, &second] {
        let out = run(&[
            "generate",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for file in ["manifest.json", "counts.csv", "a.csv", "w.csv"] {
        let a = std::fs::read(first.join(file)).unwrap();
        let b = std::fs::read(second.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    let dir = tmp("usage");
    let out = run(&["fit", "--corpus", "x", "--k", "0", "--out", "y"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("ERROR usage:"), "{stderr}");

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["generate", "--out"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn data_errors_exit_two() {
    let dir = tmp("data-err");
    let out = run(&["eval", "--estimate", "/definitely/missing", "--truth", "/nope"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("ERROR data:"), "{stderr}");

    // corrupted corpus: header line is wrong
    std::fs::write(
        dir.join("manifest.json"),
        r#"{"p": 3, "n": 1, "lengths": [2]}"#,
    )
    .unwrap();
    std::fs::write(dir.join("counts.csv"), "bad,header,line\n0,0,2\n").unwrap();
    let out = run(&[
        "fit",
        "--corpus",
        dir.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        dir.join("est").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn numerical_failures_exit_three() {
    let dir = tmp("numer");
    // a rank-one corpus cannot support two topics: every document is the
    // same single word
    std::fs::write(
        dir.join("manifest.json"),
        r#"{"p": 2, "n": 4, "lengths": [3, 3, 3, 3]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.join("counts.csv"),
        "doc_id,word_id,count\n0,0,3\n1,0,3\n2,0,3\n3,0,3\n",
    )
    .unwrap();
    let out = run(&[
        "fit",
        "--corpus",
        dir.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        dir.join("est").to_str().unwrap(),
        "--merge-threshold",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("ERROR numerical:"), "{stderr}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rate_study_writes_report_and_summary() {
    let dir = tmp("study");
    let config = dir.join("study.cfg");
    std::fs::write(
        &config,
        "p = 80\nn = 200\nk = 2\nlength_law = fixed:30\nanchor_words_per_topic = 6\n\
         axis = n\nvalues = 150, 300, 600\ntrials = 5\nmaster_seed = 12\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = run(&[
        "rate-study",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["grid"].as_array().unwrap().len(), 3);
    assert!(report["slope"]["slope"].as_f64().is_some());
    assert_eq!(report["trial_records"].as_array().unwrap().len(), 15);

    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("median_loss") && header.contains("slope"));
    let slope_col = header.split(',').position(|c| c == "slope").unwrap();
    for line in lines {
        let slope: f64 = line.split(',').nth(slope_col).unwrap().parse().unwrap();
        assert!(slope.is_finite());
    }

    // a second run reproduces every byte except the timestamp metadata
    let out_dir2 = dir.join("out2");
    let rerun = run(&[
        "rate-study",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir2.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(rerun.status.success());
    let strip = |path: &Path| -> String {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("generated_at_unix_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(&out_dir.join("report.json")),
        strip(&out_dir2.join("report.json")),
        "report differs beyond the timestamp field"
    );
    assert_eq!(
        std::fs::read(out_dir.join("summary.csv")).unwrap(),
        std::fs::read(out_dir2.join("summary.csv")).unwrap()
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn diagnose_writes_reports() {
    let dir = tmp("diag");
    let config = write_small_config(&dir);
    let data = dir.join("data");
    let out = run(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let diag = dir.join("diag");
    let out = run(&[
        "diagnose",
        "--corpus",
        data.to_str().unwrap(),
        "--truth",
        data.to_str().unwrap(),
        "--out",
        diag.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let deviation: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(diag.join("deviation.json")).unwrap())
            .unwrap();
    assert!(deviation["sin_theta"].as_f64().unwrap() >= 0.0);
    assert_eq!(deviation["row_dev"].as_array().unwrap().len(), 60);

    let assumptions: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(diag.join("assumptions.json")).unwrap())
            .unwrap();
    assert!(assumptions["lambda_min_sigma_a"].as_f64().unwrap() > 0.0);
    assert!(assumptions["h"].as_array().unwrap().len() == 60);

    assert!(diag.join("perturbation.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

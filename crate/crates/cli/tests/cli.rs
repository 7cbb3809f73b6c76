use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/hazop")
        .join(name)
}

fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_zipfaug"))
        .args(args)
        .arg("-q")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn ok(out: Output) -> Output {
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn corpus_args() -> Vec<String> {
    vec![
        "--corpus".into(),
        fixture("corpus.conll").display().to_string(),
    ]
}

fn config_args() -> Vec<String> {
    vec![
        "--config".into(),
        fixture("config.json").display().to_string(),
    ]
}

fn out_arg(dir: &Path) -> [String; 2] {
    ["--out".into(), dir.display().to_string()]
}

/// Independent log10 least squares over the word table: (alpha, R²).
fn oracle_fit(word_table: &str) -> (f64, f64) {
    let points: Vec<(f64, f64)> = word_table
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            let r: f64 = cols[0].parse().unwrap();
            let f: f64 = cols[cols.len() - 1].parse().unwrap();
            (r.log10(), f.log10())
        })
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    (-sxy / sxx, sxy * sxy / (sxx * syy))
}

#[test]
fn classical_fit_matches_an_independent_regression() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["fit".to_string(), "--law".into(), "classical".into()];
    args.extend(corpus_args());
    args.extend(out_arg(tmp.path()));
    ok(run(&args));
    let fit = json(&tmp.path().join("fit.json"));
    let (alpha, r2) = oracle_fit(&fs::read_to_string(tmp.path().join("word_table.csv")).unwrap());
    assert!((fit["alpha"].as_f64().unwrap() - alpha).abs() < 1e-9);
    assert!((fit["r_squared"].as_f64().unwrap() - r2).abs() < 1e-9);
    assert!(r2 >= 0.98, "R² {r2}");
    assert!(fit["r0"].as_u64().unwrap() >= 1);
    assert!(tmp.path().join("quartiles.json").exists());
}

/// Plain-lines corpus whose ranks past 20 follow `500 / (r - 20)^0.6`.
fn offset_corpus(dir: &Path) -> PathBuf {
    let mut tokens = Vec::new();
    for r in 1..=300usize {
        let count = if r <= 20 {
            900 - 5 * r
        } else {
            (500.0 / ((r - 20) as f64).powf(0.6)).round() as usize
        };
        tokens.extend(std::iter::repeat_n(format!("w{r}"), count));
    }
    let text: Vec<String> = tokens.chunks(20).map(|c| c.join(" ")).collect();
    let path = dir.join("offset.txt");
    fs::write(&path, text.join("\n")).unwrap();
    path
}

#[test]
fn extended_fit_splits_at_minus_beta() {
    let tmp = TempDir::new().unwrap();
    let corpus = offset_corpus(tmp.path());
    let out = tmp.path().join("run");
    ok(run([
        "fit",
        "--law",
        "extended",
        "--beta-grid",
        "-200..0",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let fit = json(&out.join("fit.json"));
    let beta = fit["beta"].as_f64().unwrap();
    assert!((beta + 20.0).abs() <= 2.0, "beta {beta}");
    assert_eq!(fit["r0"].as_u64().unwrap(), (-beta).round() as u64);
}

#[test]
fn missing_inputs_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let out = run(["fit", "--corpus", "/nonexistent/corpus.conll", "--out"]
        .into_iter()
        .map(String::from)
        .chain([tmp.path().display().to_string()]));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let config = tmp.path().join("bad.json");
    fs::write(&config, r#"{"corpsu": "x"}"#).unwrap();
    let out = run(["fit", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn classify_partitions_every_sentence() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["classify".to_string()];
    args.extend(config_args());
    args.extend(out_arg(tmp.path()));
    ok(run(&args));
    let p = json(&tmp.path().join("partition.json"));
    let (c, r) = (
        p["n_common"].as_u64().unwrap(),
        p["n_rare"].as_u64().unwrap(),
    );
    assert_eq!(c + r, 200);
    let lines = |f: &str| {
        fs::read_to_string(tmp.path().join(f))
            .unwrap()
            .lines()
            .count() as u64
    };
    assert_eq!((lines("common.txt"), lines("rare.txt")), (c, r));
}

fn classify_with_report(report: &Value, tmp: &Path) -> Output {
    let path = tmp.join("fit_in.json");
    fs::write(&path, report.to_string()).unwrap();
    let mut args = vec![
        "classify".to_string(),
        "--fit-report".into(),
        path.display().to_string(),
    ];
    args.extend(corpus_args());
    args.extend(out_arg(&tmp.join("out")));
    run(&args)
}

#[test]
fn fit_report_split_points_are_validated() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["fit".to_string()];
    args.extend(corpus_args());
    args.extend(out_arg(&tmp.path().join("fit")));
    ok(run(&args));
    let mut report = json(&tmp.path().join("fit/fit.json"));
    let r_t = report["r_t"].as_u64().unwrap();

    // r0 = r_t: tau <= 0 everywhere, so every sentence is rare
    report["r0"] = r_t.into();
    ok(classify_with_report(&report, tmp.path()));
    let p = json(&tmp.path().join("out/partition.json"));
    assert_eq!(
        (p["n_common"].as_u64(), p["n_rare"].as_u64()),
        (Some(0), Some(200))
    );

    report["r0"] = (r_t + 1).into();
    assert_eq!(code(&classify_with_report(&report, tmp.path())), 2);

    let path = tmp.path().join("corrupt.json");
    fs::write(&path, "{\"method\": \"classical\", \"alpha\": ").unwrap();
    let mut args = vec![
        "classify".to_string(),
        "--fit-report".into(),
        path.display().to_string(),
    ];
    args.extend(corpus_args());
    args.extend(out_arg(&tmp.path().join("c")));
    assert_eq!(code(&run(&args)), 2);
}

#[test]
fn sweep_has_one_row_per_offset() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["sweep".to_string(), "--offsets".into(), "-10,0,10".into()];
    args.extend(config_args());
    args.extend(out_arg(tmp.path()));
    ok(run(&args));
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let rows = json(&tmp.path().join("sweep.json"));
    assert_eq!(rows["rows"].as_array().unwrap().len(), 3);
}

fn augment(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["augment".to_string()];
    args.extend(config_args());
    args.extend(out_arg(out));
    args.extend(extra.iter().map(|s| s.to_string()));
    run(&args)
}

#[test]
fn augment_is_reproducible_per_seed() {
    let tmp = TempDir::new().unwrap();
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    let start = Instant::now();
    ok(augment(&a, &[]));
    assert!(start.elapsed() < Duration::from_secs(60));
    ok(augment(&b, &["--threads", "1"]));
    ok(augment(&c, &["--seed", "8"]));

    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    let counts = &manifest["counts"];
    for cat in ["MAT", "EQU"] {
        assert!(
            counts["categories_after"][cat].as_u64() > counts["categories_before"][cat].as_u64()
        );
    }
    for cat in ["CON", "STA"] {
        assert_eq!(
            counts["categories_after"][cat],
            counts["categories_before"][cat]
        );
    }
    for f in ["augmented.conll", "generated.jsonl", "report_after.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_ne!(
        fs::read(a.join("generated.jsonl")).unwrap(),
        fs::read(c.join("generated.jsonl")).unwrap()
    );
}

#[test]
fn failing_stage_exits_1_and_records_it() {
    let tmp = TempDir::new().unwrap();
    let out = augment(tmp.path(), &["--r0", "10000"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("classify"));
    let manifest = json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["status"], "failed");
}

#[test]
fn augment_split_writes_three_files() {
    let tmp = TempDir::new().unwrap();
    ok(augment(tmp.path(), &["--split", "0.8,0.1,0.1"]));
    let sentences = |f: &str| {
        fs::read_to_string(tmp.path().join(f))
            .unwrap()
            .split("\n\n")
            .filter(|s| !s.trim().is_empty())
            .count()
    };
    let total = sentences("augmented.conll");
    let parts: usize = ["train.conll", "dev.conll", "test.conll"]
        .iter()
        .map(|f| sentences(f))
        .sum();
    assert_eq!(parts, total);
}

#[test]
fn resampling_baselines() {
    let tmp = TempDir::new().unwrap();
    ok(augment(&tmp.path().join("ros"), &["--resample", "ros"]));
    let r = json(&tmp.path().join("ros/resample.json"));
    assert_eq!(r["mode"], "ros");
    assert!(r["added"].as_u64().unwrap() > 0);
    assert_eq!(r["removed"], 0);

    ok(augment(
        &tmp.path().join("rus"),
        &["--resample", "rus", "--target", "EQU"],
    ));
    let r = json(&tmp.path().join("rus/resample.json"));
    assert_eq!(r["added"], 0);
    assert!(tmp.path().join("rus/augmented.conll").exists());
}

#[test]
fn report_covers_the_labeled_corpus() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["report".to_string()];
    args.extend(corpus_args());
    args.extend(out_arg(tmp.path()));
    ok(run(&args));
    let report = json(&tmp.path().join("report.json"));
    let total: u64 = report["category_counts"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(report["total_entities"].as_u64(), Some(total));
    assert!(tmp.path().join("exclusion.csv").exists());
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&run(["fit", "--no-such-flag"])), 2);
    assert_eq!(code(&run(["frobnicate"])), 2);
    let tmp = TempDir::new().unwrap();
    let mut args = vec![
        "fit".to_string(),
        "--law".into(),
        "classical".into(),
        "--beta-grid".into(),
        "-10..0".into(),
    ];
    args.extend(corpus_args());
    args.extend(out_arg(tmp.path()));
    assert_eq!(code(&run(&args)), 2);
}

#[test]
fn every_command_has_help() {
    for cmd in [
        "fit", "classify", "generate", "label", "augment", "report", "sweep",
    ] {
        let out = ok(run([cmd, "--help"]));
        assert!(
            String::from_utf8_lossy(&out.stdout).contains("Usage"),
            "{cmd}"
        );
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cgain::data::{CsvTable, LabelColumn, LoadOptions};
use cgain::eval::BenchmarkReport;
use cgain::imputer::io::load_model;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn cgain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgain"))
        .args(args)
        .env_remove("CGAIN_SEED")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn empties(path: &Path) -> usize {
    CsvTable::read(path)
        .unwrap()
        .rows
        .iter()
        .flatten()
        .filter(|c| c.is_empty())
        .count()
}

fn corrupt(out: &Path, seed: &str) -> Output {
    cgain(&[
        "corrupt", "--data", s(&data("breast_cancer.csv")), "--label-col", "diagnosis", "--rate", "0.2", "--seed",
        seed, "--out", s(out),
    ])
}

#[test]
fn corrupt_blanks_about_a_fifth_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(corrupt(&a, "42").status.success());
    assert!(corrupt(&b, "42").status.success());
    let n = empties(&a.join("corrupted.csv"));
    // 569 rows x 30 features x 0.2
    assert!((n as f64 - 3414.0).abs() <= 0.02 * 3414.0, "{n} empty cells");
    assert_eq!(
        std::fs::read(a.join("corrupted.csv")).unwrap(),
        std::fs::read(b.join("corrupted.csv")).unwrap()
    );
    assert_eq!(std::fs::read(a.join("mask.csv")).unwrap(), std::fs::read(b.join("mask.csv")).unwrap());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &Path, env: &str| {
        Command::new(env!("CARGO_BIN_EXE_cgain"))
            .args(["corrupt", "--data", s(&data("breast_cancer.csv")), "--out", s(out)])
            .env("CGAIN_SEED", env)
            .output()
            .unwrap()
    };
    assert!(run(&dir.path().join("e"), "42").status.success());
    assert!(corrupt(&dir.path().join("f"), "42").status.success());
    assert_eq!(
        std::fs::read(dir.path().join("e/mask.csv")).unwrap(),
        std::fs::read(dir.path().join("f/mask.csv")).unwrap()
    );
    let bad = run(&dir.path().join("g"), "x");
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn invalid_input_exits_one_with_code() {
    let o = cgain(&["corrupt", "--data", s(&data("breast_cancer.csv")), "--rate", "1.0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: E_RANGE:"), "{}", stderr(&o));

    let o = cgain(&["corrupt", "--nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: E_USAGE:"));

    let o = cgain(&["benchmark", "--data", s(&data("breast_cancer.csv")), "--method", ""]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: E_RANGE:"));

    let o = cgain(&["train", "--data", s(&data("breast_cancer.csv")), "--lr", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgain(&["impute", "--data", s(&data("breast_cancer.csv")), "--model", s(&dir.path().join("none"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: E_IO:"));
}

#[test]
fn config_file_is_merged_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "rate = 0.3\nseed = 9\nlabel_col = \"diagnosis\"\n").unwrap();
    let o = cgain(&[
        "corrupt", "--data", s(&data("breast_cancer.csv")), "--config", s(&cfg), "--seed", "10", "--out",
        s(&dir.path().join("o")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("rate = [0.3]"));
    assert!(text.contains("seed = 10"));

    std::fs::write(&cfg, "rat = 0.3\n").unwrap();
    let o = cgain(&["corrupt", "--data", s(&data("breast_cancer.csv")), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_then_impute() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path();
    assert!(corrupt(work, "1").status.success());
    let corrupted = work.join("corrupted.csv");

    let o = cgain(&[
        "train", "--data", s(&corrupted), "--label-col", "diagnosis", "--method", "gain", "--iters", "400", "--out",
        s(work),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("batch = 128"), "{text}");
    let model = load_model(work.join("model.cgain")).unwrap();
    assert!(!model.conditioning());
    assert_eq!(model.config().iterations, 400);
    let trace = CsvTable::read(work.join("trace.csv")).unwrap();
    assert_eq!(trace.rows.len(), 400 / 100);

    let o = cgain(&[
        "impute", "--data", s(&corrupted), "--label-col", "diagnosis", "--model", s(&work.join("model.cgain")), "--out",
        s(work),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let before = CsvTable::read(&corrupted).unwrap();
    let after = CsvTable::read(work.join("imputed.csv")).unwrap();
    assert_eq!(empties(&work.join("imputed.csv")), 0);
    assert_eq!(before.headers, after.headers);
    for (rb, ra) in before.rows.iter().zip(&after.rows) {
        for (b, a) in rb.iter().zip(ra) {
            if !b.is_empty() {
                assert_eq!(a, b);
            }
        }
    }
    // Filled cells land inside the training range once mapped back to [0, 1].
    let label = LabelColumn::Name("diagnosis".into());
    let full = after.to_dataset(&label, &LoadOptions::default()).unwrap();
    let schema = model.schema();
    let raw_all = full.raw_features(false);
    for i in 0..full.rows() {
        for j in 0..full.width() {
            let raw = raw_all.get(i, j);
            let unit = schema.columns[j].normalize(raw);
            assert!((-1e-9..=1.0 + 1e-9).contains(&unit), "{unit}");
        }
    }
}

#[test]
fn train_without_missing_cells_needs_a_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgain(&["train", "--data", s(&data("breast_cancer.csv")), "--iters", "5", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = cgain(&[
        "train", "--data", s(&data("breast_cancer.csv")), "--iters", "100", "--rate", "0.2", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(load_model(dir.path().join("model.cgain")).unwrap().conditioning());
}

#[test]
fn benchmark_report_is_deterministic_and_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &Path| {
        cgain(&[
            "benchmark", "--data", s(&data("breast_cancer.csv")), "--label-col", "diagnosis", "--rate", "0.2", "--reps",
            "2", "--iters", "100", "--seed", "5", "--jobs", "2", "--out", s(out),
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&a);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run(&b).status.success());
    let csv = std::fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("report.csv")).unwrap());
    // header + 4 methods x (overall + 2 classes)
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let report = BenchmarkReport::from_json(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.reaggregated().to_csv().unwrap(), csv);
    assert!(std::fs::read_to_string(a.join("timing.csv")).unwrap().starts_with("method,runs"));
}

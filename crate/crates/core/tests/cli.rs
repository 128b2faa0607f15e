use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_miqa-pns");

const SMALL: &[&str] = &[
    "--set",
    "gen.n=200",
    "--set",
    "gen.height=16",
    "--set",
    "gen.width=16",
    "--set",
    "model.extractor_hidden=8",
    "--set",
    "model.feature_dim=4",
    "--set",
    "model.predictor_hidden=8",
    "--set",
    "train.max_epochs=4",
];

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .args(SMALL)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn generate(dir: &Path) -> String {
    let o = run(&["generate", "--seed", "7"], dir);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    dir.join("dataset.pnsa").to_str().unwrap().to_string()
}

#[test]
fn generate_is_reproducible_and_guarded() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    generate(&a);
    generate(&b);
    assert_eq!(fs::read(a.join("dataset.pnsa")).unwrap(), fs::read(b.join("dataset.pnsa")).unwrap());
    let meta = fs::read_to_string(a.join("dataset.pnsa.meta")).unwrap();
    assert!(meta.contains("seed: 7") && meta.contains("format_version: 1") && meta.contains("[config]"));

    let again = run(&["generate", "--seed", "7"], &a);
    assert_eq!(code(&again), 2);
    assert!(text(&again.stderr).contains("--force"));
    assert_eq!(code(&run(&["generate", "--seed", "7", "--force"], &a)), 0);
}

#[test]
fn generate_prints_counts_and_rejects_bad_proportions() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["generate", "--out", tmp.path().to_str().unwrap(), "--set", "gen.height=16", "--set", "gen.width=16"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let out = text(&o.stdout);
    for line in ["good: 593", "limited: 1827", "poor: 405"] {
        assert!(out.contains(line), "{out}");
    }
    let bad = run(&["generate", "--set", "gen.proportion.poor=0.5"], &tmp.path().join("bad"));
    assert_eq!(code(&bad), 2);
    assert!(text(&bad.stderr).contains("sum 1.35"), "{}", text(&bad.stderr));
}

#[test]
fn train_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = generate(tmp.path());
    let run_dir = tmp.path().join("run");
    let o = run(&["train", "--dataset", &dataset, "--mode", "miqa-pns"], &run_dir);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let metrics = fs::read_to_string(run_dir.join("metrics.txt")).unwrap();
    assert!(metrics.contains("format_version: 1") && metrics.contains("train.mode = miqa-pns"));
    assert!(!metrics.contains("pns_proxy: NA"));

    // Same config, same bytes.
    let o = run(&["train", "--dataset", &dataset, "--mode", "miqa-pns", "--force"], &run_dir);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(run_dir.join("metrics.txt")).unwrap(), metrics);

    let inference = run_dir.join("model.inference.pnsm");
    let o = run(&["eval", "--dataset", &dataset, "--checkpoint", inference.to_str().unwrap()], &run_dir);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let eval = fs::read_to_string(run_dir.join("eval.txt")).unwrap();
    assert!(eval.contains("pns_proxy: NA") && eval.contains("mono_violation: NA"));
    let f1 = |doc: &str| doc.lines().find(|l| l.starts_with("f1: ")).unwrap().to_string();
    assert_eq!(f1(&eval), f1(&metrics));
}

#[test]
fn usage_and_runtime_errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = generate(tmp.path());
    let d = tmp.path().join("x");
    assert_eq!(code(&run(&["train", "--dataset", &dataset, "--mode", "sgd"], &d)), 2);
    assert_eq!(code(&run(&["train", "--dataset", "/nonexistent.pnsa"], &d)), 2);
    assert_eq!(code(&run(&["train"], &d)), 2);
    assert_eq!(code(&run(&["train", "--dataset", &dataset, "--set", "train.momentum=1"], &d)), 2);
    assert_eq!(code(&run(&["compare", "--scenario", "ood"], &d)), 2);
    assert_eq!(code(&run(&["frobnicate"], &d)), 2);

    let o = run(&["train", "--dataset", &dataset, "--set", "train.lr=1e300"], &d);
    assert_eq!(code(&o), 3);
    assert!(text(&o.stderr).contains("non-finite loss at epoch"));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# test\nseed = 3\ngen.n = 120\n").unwrap();
    let out = tmp.path().join("g");
    let o = Command::new(BIN)
        .args(["generate", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap()])
        .args(["--set", "gen.height=16", "--set", "gen.width=16"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let meta = fs::read_to_string(out.join("dataset.pnsa.meta")).unwrap();
    assert!(meta.contains("seed: 4") && meta.contains("n: 120"));

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = Command::new(BIN)
        .args(["generate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--force"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("colour"));
}

#[test]
fn compare_writes_paired_rows_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--n-seeds", "2", "--scenario", "limited-holdout"], tmp.path());
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("compare.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "seed",
            "mode",
            "scenario",
            "precision",
            "recall",
            "f1",
            "deficient_accuracy",
            "pns_proxy",
            "mono_violation",
            "epochs_trained"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let modes: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(modes, ["baseline", "miqa-pns", "baseline", "miqa-pns"]);
    assert!(rows.iter().all(|r| &r[2] == "limited-holdout"));

    // Independent recomputation of the deficient-accuracy delta.
    let col = |mode: &str| -> Vec<f64> { rows.iter().filter(|r| &r[1] == mode).map(|r| r[6].parse().unwrap()).collect() };
    let (b, p) = (col("baseline"), col("miqa-pns"));
    let delta = (p[0] - b[0] + p[1] - b[1]) / 2.0;
    let summary = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    let line = summary.lines().find(|l| l.starts_with("delta")).unwrap();
    let field = line.split(' ').find(|f| f.starts_with("deficient_accuracy=")).unwrap();
    let shown: f64 = field["deficient_accuracy=".len()..].parse().unwrap();
    assert!((shown - delta).abs() < 5e-5, "{shown} vs {delta}");
    assert!(summary.contains("[config]") && summary.contains("n_seeds = 2"));
}

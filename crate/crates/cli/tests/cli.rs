use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use strc_core::report::{csv_from_json, strip_env};

fn strc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strc"))
        .args(args)
        .env_remove("STRC_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn theorem2_linear_weight_ends_near_quarter() {
    let o = strc(&["theorem2", "--phi", "poly:1", "--psi", "poly:0,1", "--basis", "legendre", "--nmax", "128"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sums = column(&stdout(&o), 1);
    assert_eq!(sums.len(), 128);
    assert!((sums[127] - 0.25).abs() <= 1e-3);
}

#[test]
fn theorem2_constant_weights_are_exact_from_the_start() {
    let o = strc(&["theorem2", "--phi", "poly:1", "--psi", "poly:1", "--basis", "legendre", "--nmax", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("N,partial_sum,target,error\n"));
    assert!(!csv.contains('\r'));
    for s in column(&csv, 1) {
        assert!((s - 0.5).abs() <= 1e-12);
    }
}

#[test]
fn missing_flag_exits_with_usage() {
    let o = strc(&["theorem2", "--psi", "poly:1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--phi"), "{err}");
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn errors_name_the_offending_field() {
    let cases: [(&[&str], &str); 5] = [
        (&["kernel-trace", "--kernel", "min", "--kernel-n", "0", "--kernel-m", "1", "--eps", "0.1,0.2"], "`eps`"),
        (&["theorem2", "--phi", "poly:1", "--psi", "poly:1", "--tol", "0"], "`tol`"),
        (&["theorem2", "--phi", "poly:1", "--psi", "trig:1,1", "--nmax", "4"], "`psi`"),
        (&["theorem2", "--phi", "poly:1", "--psi", "poly:1", "--basis", "chebyshev"], "`basis`"),
        (&["simulate", "--phi", "poly:1", "--psi", "poly:1", "--paths", "0"], "`paths`"),
    ];
    for (args, field) in cases {
        let o = strc(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(strc(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(strc(&["--help"]).status.code(), Some(0));
}

#[test]
fn non_convergence_exits_two() {
    let o = strc(&["theorem2", "--phi", "poly:0,0,0,1", "--psi", "poly:0,0,0,1", "--basis", "fourier", "--nmax", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NOT converged"));
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Value, String) {
    let stem = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let stem_s = stem.to_str().unwrap().to_owned();
    all.extend(["--out", &stem_s]);
    let o = strc(&all);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{args:?}: {}", stderr(&o));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    (json, csv)
}

const EXPERIMENTS: [&[&str]; 9] = [
    &["coeffs", "--phi", "poly:1,1", "--psi", "trig:2,1,0.5", "--n", "6", "--basis", "fourier"],
    &["theorem2", "--phi", "poly:1", "--psi", "poly:0,1", "--nmax", "16", "--basis", "haar"],
    &["theorem1", "--kernel", "cexp", "--kernel-n", "0", "--kernel-m", "1", "--nmax", "16"],
    &["eq7", "--phi", "poly:0,1", "--psi", "poly:1,0,1", "--nmax", "16"],
    &["basis-independence", "--phi", "poly:1", "--psi", "poly:0,1", "--nmax", "16"],
    &["tensor-trace", "--n", "8", "--sizes", "4,8"],
    &["kernel-trace", "--kernel", "max", "--kernel-n", "1", "--kernel-m", "2"],
    &["simulate", "--phi", "poly:1", "--psi", "poly:0,1", "--n", "8", "--paths", "400", "--seed", "11", "--two-process"],
    &["simulate", "--phi", "poly:1", "--psi", "poly:1", "--brownian", "--mesh", "256", "--paths", "300", "--seed", "5"],
];

#[test]
fn json_reports_regenerate_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (k, args) in EXPERIMENTS.iter().enumerate() {
        let (json, csv) = run_to(dir.path(), &format!("r{k}"), args);
        assert!(json.get("env").is_some());
        assert_eq!(csv_from_json(&json).unwrap(), csv, "{args:?}");
    }
}

#[test]
fn payloads_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    for (k, args) in EXPERIMENTS.iter().enumerate() {
        let mut one = args.to_vec();
        one.extend(["--workers", "1"]);
        let mut three = args.to_vec();
        three.extend(["--workers", "3"]);
        let (a, csv_a) = run_to(dir.path(), &format!("a{k}"), &one);
        let (b, csv_b) = run_to(dir.path(), &format!("b{k}"), &three);
        assert_eq!(a["env"]["workers"], 1);
        assert_eq!(b["env"]["workers"], 3);
        assert_eq!(
            serde_json::to_string(&strip_env(&a)).unwrap(),
            serde_json::to_string(&strip_env(&b)).unwrap(),
            "{args:?}"
        );
        assert_eq!(csv_a, csv_b);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        "experiment = \"theorem2\"\nphi = \"poly:1\"\npsi = \"poly:0,1\"\nbasis = \"fourier\"\nnmax = 32\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let o = strc(&["--config", c]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 33);
    let o = strc(&["--config", c, "--nmax", "8", "--tol", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 9);

    std::fs::write(&cfg, "phi = \"poly:1\"\nnmx = 3\n").unwrap();
    let o = strc(&["theorem2", "--config", c]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nmx"));
}

#[test]
fn coefficient_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["coeffs", "--phi", "poly:1,2", "--psi", "poly:0,1", "--n", "5", "--json"];
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_strc"))
            .args(args)
            .env("STRC_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    assert_eq!(&std::fs::read(&files[0]).unwrap()[..4], b"STRC");
    let second = run();
    let a: Value = serde_json::from_slice(&first.stdout).unwrap();
    let b: Value = serde_json::from_slice(&second.stdout).unwrap();
    assert_eq!(strip_env(&a), strip_env(&b));

    // A damaged entry is recomputed, not trusted.
    std::fs::write(&files[0], b"STRC garbage").unwrap();
    let third = run();
    let c: Value = serde_json::from_slice(&third.stdout).unwrap();
    assert_eq!(strip_env(&a), strip_env(&c));
}

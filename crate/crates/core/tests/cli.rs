use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_betawishart"));
    c.env_remove("BETAWISHART_OUTPUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of CSV output as `header → cell` lookups.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn cell<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(h, _)| h == name).unwrap().1
}

fn cell_f64(row: &[(String, String)], name: &str) -> f64 {
    cell(row, name).parse().unwrap()
}

#[test]
fn cdf_row_has_documented_columns() {
    let out = run(&[
        "cdf", "--beta", "1", "--m", "10", "--n", "3", "--sigma", "identity", "--K", "60", "--x",
        "16.2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "x,value,raw_value,degrees_used,last_layer_ratio,converged"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    // truncated-series value at the published median point
    assert!((cell_f64(&rows[0], "value") - 0.49427).abs() < 1e-4);
    assert_eq!(cell(&rows[0], "converged"), "true");
}

#[test]
fn quantile_median() {
    let out = run(&[
        "quantile", "--alpha", "0.5", "--beta", "1", "--m", "10", "--n", "3", "--sigma",
        "identity", "--K", "60",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    let x = cell_f64(&rows[0], "value");
    assert!((x - 16.2693).abs() < 1e-3, "{x}");
}

#[test]
fn grid_and_pdf() {
    let out = run(&[
        "pdf", "--beta", "2", "--m", "3", "--n", "1", "--sigma", "0.69", "--grid", "0.5:5:10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 10);
    assert_eq!(cell_f64(&rows[0], "x"), 0.5);
    assert_eq!(cell_f64(&rows[9], "x"), 5.0);
    assert!(rows.iter().all(|r| cell_f64(r, "value") > 0.0));
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        vec!["cdf", "--beta", "1", "--m", "3", "--n", "3", "--x", "1"],
        vec!["cdf", "--beta", "3", "--m", "3", "--n", "1", "--x", "1"],
        vec!["cdf", "--beta", "1", "--m", "3", "--n", "1", "--x", "-1"],
        vec![
            "cdf", "--beta", "1", "--m", "3", "--n", "1", "--sigma", "1,2", "--x", "1",
        ],
        vec![
            "cdf", "--beta", "1", "--m", "3", "--n", "1", "--x", "1", "--bogus",
        ],
        vec![
            "capacity", "--beta", "1", "--m", "3", "--n", "1", "--rho", "1",
        ],
        vec![
            "joint", "--beta", "1", "--m", "3", "--n", "2", "--ells", "1,2",
        ],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unreachable_quantile_exits_3_with_partial_output() {
    let out = run(&[
        "quantile", "--alpha", "0.5,0.99", "--beta", "1", "--m", "50", "--n", "3", "--K", "90",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert_eq!(cell(&rows[1], "value"), "");
    assert_eq!(cell(&rows[1], "converged"), "false");
    assert!(cell(&rows[1], "note").contains("peaks at"));
}

#[test]
fn json_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&[
        "cdf",
        "--beta",
        "2",
        "--m",
        "2",
        "--n",
        "1",
        "--sigma",
        "1.81,1.31",
        "--x",
        "1,2",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["library_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["command"], "cdf");
    assert_eq!(doc["config"]["cdf"]["spec"]["beta"], 2);
    assert_eq!(doc["config"]["cdf"]["budget"]["k"], 60);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1]["value"].as_f64().unwrap() > rows[0]["value"].as_f64().unwrap());
    assert_eq!(rows[0]["converged"], true);
    assert!(doc["generated_at_unix"].as_u64().is_some());
    // nothing but the target is left in the directory
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("BETAWISHART_OUTPUT_DIR", dir.path())
        .args([
            "simulate", "--beta", "1", "--m", "3", "--n", "1", "--count", "5", "--seed", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# beta=1 m=3 n=1 sigma=1,1,1");
    assert_eq!(lines[1], "# seed=3 count=5");
    assert_eq!(lines[2], "ell1");
    assert_eq!(lines.len(), 8);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        vec![
            "compare".to_string(),
            "--beta".into(),
            "4".into(),
            "--m".into(),
            "3".into(),
            "--n".into(),
            "2".into(),
            "--sigma".into(),
            "2,1,0.5".into(),
            "--count".into(),
            "3000".into(),
            "--seed".into(),
            "42".into(),
            "--ks-threshold".into(),
            "1".into(),
            "--layer-tol".into(),
            "1e-6".into(),
            "--K".into(),
            "150".into(),
            "--output".into(),
            dir.path().join(name).to_str().unwrap().to_string(),
        ]
    };
    assert_eq!(bin().args(args("a.csv")).status().unwrap().code(), Some(0));
    assert_eq!(bin().args(args("b.csv")).status().unwrap().code(), Some(0));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn compare_threshold_controls_exit() {
    let base = [
        "compare",
        "--beta",
        "1",
        "--m",
        "10",
        "--n",
        "3",
        "--count",
        "20000",
        "--seed",
        "1",
        "--layer-tol",
        "1e-6",
    ];
    let out = run(&base);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 11);
    let ks = rows.iter().find(|r| cell(r, "statistic") == "ks").unwrap();
    assert!(cell_f64(ks, "value") < 0.02);
    let raw = rows
        .iter()
        .find(|r| cell(r, "statistic") == "ks_raw")
        .unwrap();
    assert!(cell_f64(raw, "value") >= cell_f64(ks, "value"));
    for r in rows
        .iter()
        .filter(|r| cell(r, "statistic").starts_with("decile"))
    {
        assert!(cell_f64(r, "value").abs() < 0.02);
    }
    let mut strict = base.to_vec();
    strict.extend(["--ks-threshold", "1e-6"]);
    assert_eq!(run(&strict).status.code(), Some(1));
}

#[test]
fn splitting_check_command() {
    let out = run(&[
        "splitting-check",
        "--a",
        "1,2,3",
        "--b",
        "1,0.5",
        "--kappa",
        "1",
        "--count",
        "20000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert!((cell_f64(&rows[0], "exact") - 3.0).abs() < 1e-12);
    assert_eq!(cell(&rows[0], "pass"), "true");
}

#[test]
fn capacity_command() {
    let out = run(&[
        "capacity",
        "--beta",
        "2",
        "--m",
        "2",
        "--n",
        "1",
        "--sigma",
        "1.81,1.31",
        "--K",
        "150",
        "--rho",
        "0,1,10",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(cell_f64(&rows[0], "value"), 0.0);
    assert!(cell_f64(&rows[1], "value") > 0.0);
    assert!(cell_f64(&rows[2], "value") > cell_f64(&rows[1], "value"));
    assert_eq!(cell(&rows[0], "unit"), "bits");

    let db = run(&[
        "capacity",
        "--beta",
        "2",
        "--m",
        "2",
        "--n",
        "1",
        "--sigma",
        "1.81,1.31",
        "--K",
        "150",
        "--snr-db",
        "10",
        "--unit",
        "nats",
    ]);
    let rows_db = csv_rows(&stdout(&db));
    let bits = cell_f64(&rows[2], "value");
    let nats = cell_f64(&rows_db[0], "value");
    assert!((bits * std::f64::consts::LN_2 - nats).abs() < 1e-5);

    // truncation too short to reach the tail cutoff
    let short = run(&[
        "capacity",
        "--beta",
        "2",
        "--m",
        "3",
        "--n",
        "1",
        "--sigma",
        "1.81,1.31,0.69",
        "--K",
        "20",
        "--rho",
        "1",
    ]);
    assert_eq!(short.status.code(), Some(3));
}

#[test]
fn sigma_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sigma.txt");
    fs::write(&path, "2 0.5 0\n0.5 2 0\n0 0 1\n").unwrap();
    let from_file = run(&[
        "cdf",
        "--beta",
        "1",
        "--m",
        "3",
        "--n",
        "1",
        "--sigma",
        path.to_str().unwrap(),
        "--x",
        "3",
    ]);
    let from_list = run(&[
        "cdf",
        "--beta",
        "1",
        "--m",
        "3",
        "--n",
        "1",
        "--sigma",
        "2.5,1.5,1",
        "--x",
        "3",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    let a = cell_f64(&csv_rows(&stdout(&from_file))[0], "value");
    let b = cell_f64(&csv_rows(&stdout(&from_list))[0], "value");
    assert!((a - b).abs() < 1e-12, "{a} {b}");

    fs::write(&path, "1 2\n3 4\n").unwrap();
    let asym = run(&[
        "cdf",
        "--beta",
        "1",
        "--m",
        "2",
        "--n",
        "1",
        "--sigma",
        path.to_str().unwrap(),
        "--x",
        "3",
    ]);
    assert_eq!(asym.status.code(), Some(2));
}

#[test]
fn joint_density_command() {
    let out = run(&[
        "joint", "--beta", "1", "--m", "2", "--n", "1", "--sigma", "5,2", "--ells", "1", "--ells",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert_eq!(cell(&rows[1], "ells"), "5");
    assert!(cell_f64(&rows[0], "value") > 0.0);
}

#[test]
fn table2_reproduces_published_peaks() {
    let out = run(&["table2", "--K", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    for (row, published) in rows.iter().zip([0.999, 0.999, 0.973]) {
        assert!((cell_f64(row, "sup_probability") - published).abs() <= 0.01);
        assert_eq!(cell(row, "pass"), "true");
    }
}

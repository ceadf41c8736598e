use eigenzeros::cli::main_with_args;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, Option<Value>, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let mut argv = vec!["eigenzeros"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let code = main_with_args(argv);
    let text = std::fs::read_to_string(&out).unwrap_or_default();
    (code, serde_json::from_str(&text).ok(), text)
}

#[test]
fn average_reports_theory_and_estimate() {
    let (code, v, _) = run(&[
        "average", "--sphere", "2", "--degree", "3", "--trials", "400", "--seed", "7",
    ]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    assert_eq!(v["command"], "average");
    assert_eq!(v["theory"]["formula_id"], "THM_1_1");
    assert_eq!(v["theory"]["value"].as_f64().unwrap(), 12.0);
    let mean = v["estimate"]["mean"].as_f64().unwrap();
    let stderr = v["estimate"]["stderr"].as_f64().unwrap();
    assert!((mean - 12.0).abs() <= 4.0 * stderr);
    assert_eq!(v["estimate"]["trials"], 400);
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["experimental"], false);
    assert!(v["histogram"].is_object());
    assert!(v["diagnostics"]["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn zonal_lists_2m_zeros() {
    let (code, v, _) = run(&["zonal", "--degree", "4", "--alpha", "0.05"]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    assert_eq!(v["theory"]["formula_id"], "SEC5_ZONAL");
    assert_eq!(v["zeros"].as_array().unwrap().len(), 8);
    for z in v["zeros"].as_array().unwrap() {
        let n: f64 = z
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_f64().unwrap().powi(2))
            .sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}

#[test]
fn invariants_pass() {
    let (code, v, _) = run(&["invariants", "--sphere", "2", "--degree", "6"]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], true, "{c}");
    }
    let (code, _, _) = run(&["invariants", "--sphere", "1", "--degree", "50"]);
    assert_eq!(code, 0);
}

#[test]
fn conjecture_is_flagged_experimental() {
    let (code, v, _) = run(&["conjecture", "--degrees", "1,2", "--trials", "50"]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    assert_eq!(v["experimental"], true);
    assert_eq!(v["theory"]["formula_id"], "SEC5_CONJECTURE");
    assert!((v["theory"]["value"].as_f64().unwrap() - 12f64.sqrt()).abs() < 1e-12);
}

#[test]
fn embedding_and_crofton_reports() {
    let (code, v, _) = run(&["embedding", "--sphere", "2", "--degree", "1"]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    assert_eq!(v["theory"]["formula_id"], "THM_2_4");
    assert!((v["estimate"]["mean"].as_f64().unwrap() - 3.0).abs() < 1e-4);

    let (code, v, _) = run(&["crofton-length", "--source", "equator", "--trials", "200"]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    assert_eq!(v["theory"]["formula_id"], "SEC3_CROFTON");
    assert!((v["estimate"]["mean"].as_f64().unwrap() - std::f64::consts::TAU).abs() < 1e-12);
}

#[test]
fn count_prints_points() {
    let (code, v, _) = run(&["count", "--sphere", "1", "--degree", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v.unwrap()["zeros"].as_array().unwrap().len(), 10);
    let (code, v, _) = run(&["count", "--sphere", "2", "--degree", "3"]);
    assert_eq!(code, 0);
    let v = v.unwrap();
    assert!(v["zeros"].as_array().unwrap().len() <= 18);
    assert_eq!(v["diagnostics"]["status"], "Complete");
}

#[test]
fn invalid_configurations_exit_2() {
    for args in [
        &["average", "--degree", "51"][..],
        &["average", "--trials", "1000001"],
        &["average", "--depth", "10"],
        &["average", "--sphere", "3"],
        &["conjecture", "--degrees", "1"],
        &["zonal", "--degree", "3", "--alpha", "2"],
        &["crofton-length", "--source", "equator", "--degree", "2"],
        &["embedding", "--quad-depth", "12"],
        &["no-such-command"],
    ] {
        let (code, _, _) = run(args);
        assert_eq!(code, 2, "{args:?}");
    }
}

#[test]
fn degenerate_zonal_pair_exits_4() {
    let (code, v, _) = run(&["zonal", "--degree", "3", "--alpha", "0"]);
    assert_eq!(code, 4);
    assert_eq!(v.unwrap()["diagnostics"]["status"], "Degenerate");
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        &["average", "--degree", "2", "--trials", "60", "--seed", "3"][..],
        &[
            "crofton-length",
            "--degree",
            "3",
            "--source",
            "random",
            "--trials",
            "300",
        ],
        &[
            "average", "--degree", "2", "--trials", "60", "--format", "csv",
        ],
    ] {
        let (_, _, a) = run(args);
        let (_, _, b) = run(args);
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
    let (_, _, a) = run(&["average", "--degree", "2", "--trials", "60", "--seed", "3"]);
    let (_, _, b) = run(&["average", "--degree", "2", "--trials", "60", "--seed", "4"]);
    assert_ne!(a, b);
}

#[test]
fn csv_has_fixed_header_and_one_row() {
    let (code, _, text) = run(&["zonal", "--degree", "2", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(headers[0], "command");
    assert_eq!(headers.len(), 26);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let col = |name: &str| rows[0][headers.iter().position(|h| h == name).unwrap()].to_owned();
    assert_eq!(col("formula_id"), "SEC5_ZONAL");
    assert_eq!(col("zero_count"), "4");
    assert_eq!(col("status"), "Complete");
}

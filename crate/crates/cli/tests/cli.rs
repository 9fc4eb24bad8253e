use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn fanobound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanobound"))
        .args(args)
        .env_remove("FANOBOUND_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

/// Data rows of a CSV as (header, rows).
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn normal_mean_integrated_value() {
    let o = fanobound(&["bound", "normal-mean", "--d", "10", "--n", "100", "--sigma2", "1", "--mode", "integrated"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let value = v["result"]["value"].as_f64().unwrap();
    let expected = 81.0 * std::f64::consts::LN_2 / 400.0 * 0.1;
    assert!(((value - expected) / expected).abs() < 1e-12);
    assert!((value - 0.014037).abs() < 1e-6);
    assert_eq!(v["result"]["pipeline"], "normal-mean-integrated");
}

#[test]
fn sparse_location_records_eps() {
    let o = fanobound(&["bound", "sparse-location", "--d", "32", "--s", "4", "--n", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &json(&o)["result"];
    assert!(r["eps"].as_f64().unwrap() > 0.0);
    assert!(r["value"].as_f64().unwrap() > 0.0);
    assert_eq!(r["valid"], true);
}

#[test]
fn missing_key_exits_2_and_names_it() {
    let o = fanobound(&["bound", "sparse-location", "--d", "32", "--n", "200"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`s`"), "{}", stderr(&o));

    let o = fanobound(&["bound", "--d", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`problem`"));
}

#[test]
fn bad_values_exit_2() {
    let o = fanobound(&["bound", "normal-mean", "--d", "10", "--n", "100", "--sigma2", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`sigma2`"));
    let o = fanobound(&["bound", "normal-mean", "--d", "10", "--n", "100", "--mode", "sharp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`mode`"));
    // Library domain errors are configuration errors too.
    let o = fanobound(&["bound", "normal-mean", "--d", "1", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, "# normal mean\nproblem = normal-mean\nd = 10\nn = 50\nsigma2 = 1\nmode = integrated\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = json(&fanobound(&["bound", "--config", p]));
    assert_eq!(from_file["config"]["n"], "50");
    let overridden = fanobound(&["bound", "--config", p, "--n", "100"]);
    assert_eq!(overridden.status.code(), Some(0));
    let overridden = json(&overridden);
    assert_eq!(overridden["config"]["n"], "100");
    let a = from_file["result"]["value"].as_f64().unwrap();
    let b = overridden["result"]["value"].as_f64().unwrap();
    assert!((a / b - 2.0).abs() < 1e-12);

    fs::write(&path, "problem = normal-mean\nd = 10\nn = 50\nalpha = 3\n").unwrap();
    let o = fanobound(&["bound", "--config", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`alpha`"));
}

#[test]
fn inapplicable_bound_exits_3() {
    // r = t leaves no volume ratio to work with.
    let o = fanobound(&["bound", "normal-mean-tail", "--d", "2", "--n", "10", "--r", "1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["result"]["valid"], false);
}

#[test]
fn seed_from_environment_and_flag() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fanobound"));
        cmd.args(["bound", "compressed-sensing", "--d", "16", "--s", "2", "--n", "12"]).args(extra);
        cmd.env_remove("FANOBOUND_SEED");
        if let Some(e) = env {
            cmd.env("FANOBOUND_SEED", e);
        }
        cmd.output().unwrap()
    };
    let default = json(&run(None, &[]));
    assert_eq!(default["config"]["seed"], "0");
    let env = json(&run(Some("42"), &[]));
    assert_eq!(env["config"]["seed"], "42");
    let flag = json(&run(Some("42"), &["--seed", "7"]));
    assert_eq!(flag["config"]["seed"], "7");
    // The design depends on the seed.
    assert_ne!(default["result"]["aux"], env["result"]["aux"]);
    assert_eq!(run(Some("x"), &[]).status.code(), Some(2));
}

#[test]
fn outputs_are_reproducible_and_reference_the_manifest() {
    let args = ["bound", "sparse-location", "--d", "24", "--s", "4", "--n", "100", "--out"];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let mut full: Vec<&str> = args.to_vec();
        full.push(dir.path().to_str().unwrap());
        assert_eq!(fanobound(&full).status.code(), Some(0));
    }
    for name in ["bound.json", "bound.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let manifest: Value = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["manifest"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(manifest["timestamps"]["started_unix"].as_u64().unwrap() > 0);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    let csv_text = fs::read_to_string(a.path().join("bound.csv")).unwrap();
    assert_eq!(csv_text.lines().next().unwrap(), format!("# schema=fanobound.bound-table/1 manifest={hash}"));
    let result: Value = serde_json::from_slice(&fs::read(a.path().join("bound.json")).unwrap()).unwrap();
    assert_eq!(result["manifest"], hash);
    let (header, rows) = csv(&csv_text);
    assert_eq!(
        header.join(","),
        "pipeline,d,s,n,sigma2,t,eps,mi_bound_nats,log_ratio_nats,bound,valid"
    );
    assert_eq!(rows.len(), 1);
}

#[test]
fn verify_unknown_suite_exits_2() {
    let o = fanobound(&["verify", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("prop1-exhaustive"));
}

#[test]
fn verify_prop1_default_seed() {
    let o = fanobound(&["verify", "prop1-exhaustive"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("1000/1000"), "{text}");
    assert!(text.lines().last().unwrap().starts_with("PASS"));
}

#[test]
fn verify_quadrature_and_fault_injection() {
    let o = fanobound(&["verify", "quadrature", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = fanobound(&["verify", "quadrature", "--seed", "3", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_is_byte_identical() {
    let a = fanobound(&["verify", "decoder-oracle", "--seed", "11"]);
    let b = fanobound(&["verify", "decoder-oracle", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn table_normal_mean_scales_as_inverse_n() {
    let o = fanobound(&["table", "normal-mean", "--d", "10", "--sweep", "n=50,100,200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# schema=fanobound.bound-table/1 manifest="));
    let (header, rows) = csv(&text);
    let n = column(&header, &rows, "n");
    let bound = column(&header, &rows, "bound");
    for i in 1..3 {
        let rel = (bound[i] * n[i] - bound[0] * n[0]) / (bound[0] * n[0]);
        assert!(rel.abs() < 1e-12);
    }
}

#[test]
fn table_regression_scales_as_inverse_c_squared() {
    let o = fanobound(&["table", "regression", "--d", "9", "--n", "100", "--sweep", "scale=1,2,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = csv(&stdout(&o));
    let c = column(&header, &rows, "scale");
    let bound = column(&header, &rows, "bound");
    for i in 0..3 {
        let rel = (bound[i] * c[i] * c[i] - bound[0]) / bound[0];
        assert!(rel.abs() < 1e-12);
    }
}

#[test]
fn table_sparse_location_grows_with_d() {
    // Both sweeps stay on one side of the exact-count cutoff.
    for sweep in ["d=8,12,16,24,32", "d=64,128,256"] {
        let o = fanobound(&["table", "sparse-location", "--s", "4", "--n", "200", "--sweep", sweep]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let (header, rows) = csv(&stdout(&o));
        let bound = column(&header, &rows, "bound");
        let log_ratio = column(&header, &rows, "log_ratio_nats");
        assert!(bound.windows(2).all(|w| w[1] > w[0]), "{sweep}: {bound:?}");
        assert!(log_ratio.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn table_with_matched_risk() {
    let o = fanobound(&[
        "table", "normal-mean", "--d", "10", "--sweep", "n=50,100", "--risk-reps", "2000", "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# schema=fanobound.risk-table/1"));
    let (header, rows) = csv(&text);
    let bound = column(&header, &rows, "bound");
    let lower = column(&header, &rows, "risk_lower");
    let mean = column(&header, &rows, "risk_mean");
    for i in 0..2 {
        assert!(bound[i] <= lower[i]);
    }
    // Sample-mean risk is sigma2 d / n.
    assert!((mean[0] - 0.2).abs() < 0.02 && (mean[1] - 0.1).abs() < 0.01);

    let o = fanobound(&["table", "normal-mean-tail", "--d", "2", "--n", "10", "--r", "1", "--sweep", "t=0.1", "--risk-reps", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

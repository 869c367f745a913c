use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn opineq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opineq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = opineq(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn column(v: &Value, name: &str) -> Vec<Value> {
    let idx = v["columns"].as_array().unwrap().iter().position(|c| c["name"] == name).unwrap();
    v["rows"].as_array().unwrap().iter().map(|r| r[idx].clone()).collect()
}

#[test]
fn gamma_signs_and_metadata() {
    let o = opineq(&["gamma", "--dimension", "1.5,2,3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in ["# command: gamma", "# seed: 1", "# param dimension=1.5,2,3", "gamma=quadrature"] {
        assert!(text.contains(line), "{line} missing");
    }
    let v = json(&["gamma", "--dimension", "1.5,2,3"]);
    let g: Vec<f64> = column(&v, "gamma").iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(g[0] < 0.0 && g[1].abs() < 1e-8 && g[2] > 0.0);
    let single = json(&["gamma", "--dimension", "2"]);
    assert!(column(&single, "gamma")[0].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = opineq(&["gamma", "--output", path.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn kato_is_independent_of_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_opineq"))
            .args(["kato", "--side", "10", "--extent", "5", "--samples", "30", "--seed", "9"])
            .env("OPINEQ_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    assert!(text.contains("# seed: 9"));
    let counts: u64 = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("bin_upper"))
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(counts, 30);
    let bad = Command::new(env!("CARGO_BIN_EXE_opineq")).args(["bounds", "--z", "1"]).env("OPINEQ_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn kato_equality_case() {
    let v = json(&["kato", "--field", "zero", "--phi", "nonnegative", "--side", "8", "--samples", "10"]);
    let max = v["summary"].as_array().unwrap().iter().find(|s| s["name"] == "max_violation").unwrap();
    assert!(max["value"].as_f64().unwrap().abs() < 1e-14);
}

#[test]
fn hydrogen_levels_scale_with_charge() {
    let one = json(&["hydrogen", "--z", "1", "--m-max", "1"]);
    let two = json(&["hydrogen", "--z", "2", "--m-max", "1"]);
    let e1 = column(&one, "energy");
    let e2 = column(&two, "energy");
    for (a, b) in e1.iter().zip(&e2) {
        assert!((b.as_f64().unwrap() / a.as_f64().unwrap() - 4.0).abs() < 1e-9);
    }
    assert_eq!(column(&one, "degeneracy"), vec![Value::from(1), Value::from(3)]);
}

#[test]
fn failed_assertion_exits_one_with_record() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("h.json");
    let o = opineq(&["hydrogen", "--m-max", "0", "--tol", "1e-9", "--format", "json", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let record: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(record["kind"], "assertion");
    assert_eq!(record["failed"][0], "energies");
    let written: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(written["assertions"].as_array().unwrap().iter().filter(|a| a["passed"] == false).count(), 1);
}

#[test]
fn positivity_with_nonrel_column() {
    let v = json(&["positivity", "--sigma-grid", "2", "--nonrel"]);
    assert!(column(&v, "nonrel_normalized")[0].as_f64().unwrap() < 0.0);
    let ratio = column(&v, "lambda_ratio")[0].as_f64().unwrap();
    assert!((ratio - 0.25).abs() < 1e-6);
    let o = opineq(&["positivity", "--nonrel", "--dimension", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_reports() {
    let v = json(&["bounds", "--z", "1", "--delta", "0"]);
    let values: Vec<f64> = column(&v, "value").iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(values, vec![0.0, 1.0, 3.0, 5.5, 10.0, 2.0]);
    let field = json(&["bounds", "--z", "1", "--b", "1", "--r", "2"]);
    assert_eq!(column(&field, "value")[0].as_f64().unwrap(), 2.0);
    assert_eq!(column(&field, "provenance")[0], "closed-form");
    let o = opineq(&["bounds", "--z", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let record: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(record["status"], "failed");
}

#[test]
fn critical_mellin_with_printed_constants() {
    let v = json(&["critical", "--method", "mellin", "--m-max", "1"]);
    let nu = column(&v, "nu_c")[0].as_f64().unwrap();
    assert!((nu - 0.2284732905).abs() < 1e-8);
    let names: Vec<&str> = v["summary"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"printed_constant") && names.contains(&"printed_constant_fourth_power"));
    assert_ne!(opineq(&["critical", "--method", "secant"]).status.code(), Some(0));
}

#[test]
fn config_file_merges_with_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# gamma sweep\ncommand = gamma\ndimension = 2.5\nseed = 5\n").unwrap();
    let o = opineq(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# param dimension=2.5") && text.contains("# seed: 5"));

    let o = opineq(&["gamma", "--dimension", "3", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).contains("# param dimension=3\n"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--dimension given on the command line"));

    fs::write(&cfg, "command = gamma\nsigma-grid = 1,2\n").unwrap();
    let o = opineq(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown config key sigma-grid"));

    fs::write(&cfg, "nonrel = true\nsigma-grid = 2\n").unwrap();
    let v = json(&["positivity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(v["params"]["nonrel"], "true");
}

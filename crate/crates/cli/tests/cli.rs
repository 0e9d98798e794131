use std::path::Path;
use std::process::{Command, Output};

fn wkde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wkde")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = wkde(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    wkde(args).status.code().unwrap()
}

fn simulate(dir: &Path, model: &str, n: usize, seed: u64) -> String {
    let p = dir.join(format!("{model}_{n}_{seed}.csv"));
    let ps = p.to_str().unwrap().to_string();
    ok(&["simulate", "--model", model, "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", &ps]);
    ps
}

#[test]
fn simulate_writes_header_and_rows() {
    let s = ok(&["simulate", "--model", "f3", "--n", "25", "--seed", "4"]);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "x");
    assert_eq!(lines.len(), 26);
    let want = wkde::MixtureModel::f3().sample(25, 4);
    for (l, w) in lines[1..].iter().zip(want) {
        assert_eq!(l.parse::<f64>().unwrap(), w);
    }
    assert_eq!(s, ok(&["--seed", "4", "simulate", "--model", "F3", "--n", "25"]));
}

#[test]
fn estimate_f_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "F1", 600, 2);
    let s = ok(&["estimate-f", "--input", &input, "--x0", "0.2,0.7", "--model", "F1"]);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    for (p, x0) in arr.iter().zip([0.2, 0.7]) {
        assert_eq!(p["x0"].as_f64().unwrap(), x0);
        for key in ["f_hat", "h_selected", "theta_tilde", "gamma_hat"] {
            assert!(p[key].as_f64().unwrap().is_finite(), "{key}");
        }
        assert!(p["flags"]["gamma_floor"].is_boolean());
    }
    // Same numbers as the library on the same halves.
    let xs = wkde::MixtureModel::f1().sample(600, 2);
    let c = wkde::EstimatorConfig { delta: Some(0.1), ..Default::default() };
    let e = wkde::estimate_f(&xs[..300], &xs[300..], &c, 0.2, 1).unwrap();
    assert_eq!(arr[0]["f_hat"].as_f64().unwrap(), e.f_hat);
}

#[test]
fn estimate_f_oracle_needs_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "F2", 400, 1);
    assert_eq!(code(&["estimate-f", "--input", &input, "--oracle"]), 2);
    let s = ok(&["estimate-f", "--input", &input, "--oracle", "--model", "F2", "--x0", "0.5"]);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v[0]["theta_tilde"].as_f64().unwrap(), 0.45);
}

#[test]
fn estimate_theta_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "F2", 1000, 8);
    let s = ok(&["estimate-theta", "--input", &input, "--model", "F2", "--tau", "0.8"]);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    let xs = wkde::MixtureModel::f2().sample(1000, 8);
    let storey = wkde::theta::storey_theta(&xs, 0.8).unwrap();
    assert_eq!(v["storey_theta"].as_f64().unwrap(), storey);
    let raw = v["theta_raw"].as_f64().unwrap();
    let tilde = v["theta_tilde"].as_f64().unwrap();
    assert_eq!(v["truncated"].as_bool().unwrap(), raw != tilde);
    assert!((0.15..=0.85).contains(&tilde));
    assert!(v["b_selected"].as_f64().unwrap() > 0.0);
}

#[test]
fn tables_have_documented_headers() {
    let mc = ok(&["mse-table", "--models", "F3", "--n", "100", "--reps", "2", "--points", "0.3"]);
    assert!(mc.starts_with("model,n,x0,reps,mse,se\nF3,100,0.3,2,"));
    let cal = ok(&["calibrate", "--param", "kappa", "--grid", "0.5,1", "--models", "F1", "--n", "100", "--reps", "2", "--points", "0.4"]);
    assert!(cal.starts_with("model,param,param_value,x0,risk\nF1,kappa,0.5,0.4,"));
    assert_eq!(cal.lines().count(), 3);
    let th = ok(&["theta-compare", "--models", "F2", "--n", "100", "--reps", "2"]);
    assert!(th.starts_with("model,method,rep,abs_error\nF2,Sym-Ker,0,"));
    let dat = ok(&["theta-compare", "--models", "F2", "--n", "100", "--reps", "2", "--format", "dat"]);
    assert!(dat.starts_with("# model method rep abs_error\nF2 Sym-Ker 0 "));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    let ps = p.to_str().unwrap();
    assert_eq!(ok(&["--out", ps, "mse-table", "--models", "F1", "--n", "60", "--reps", "2"]), "");
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"kappa": 2.0, "lambda": 0.5}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let base = ["calibrate", "--param", "lambda", "--grid", "0.5", "--models", "F3", "--n", "100", "--reps", "2"];
    let a = ok(&[&["--config", c][..], &base[..]].concat());
    assert!(a.contains("F3,lambda,0.5,,"));
    let mc = |extra: &[&str]| ok(&[&["mse-table", "--models", "F2", "--n", "80", "--reps", "2"][..], extra].concat());
    assert_eq!(mc(&["--config", c]), mc(&["--kappa", "2", "--lambda", "0.5"]));
    assert_ne!(mc(&["--config", c]), mc(&[]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "F1", 200, 1);
    assert_eq!(code(&["estimate-f", "--input", &input, "--kappa", "-1"]), 2);
    assert_eq!(code(&["estimate-f", "--input", &input, "--delta", "1.5"]), 2);
    assert_eq!(code(&["estimate-f", "--input", &input, "--x0", "1.5"]), 2);
    assert_eq!(code(&["simulate", "--model", "F9", "--n", "5"]), 2);
    assert_eq!(code(&["simulate", "--model", "F1", "--n", "0"]), 2);
    assert_eq!(code(&["mse-table", "--reps", "1", "--n", "100"]), 2);
    assert_eq!(code(&["mse-table", "--reps", "2", "--n", "10"]), 2);
    assert_eq!(code(&["calibrate", "--param", "sigma", "--grid", "1"]), 2);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x\n0.2\nabc\n").unwrap();
    assert_eq!(code(&["estimate-theta", "--input", bad.to_str().unwrap()]), 2);
    std::fs::write(&bad, "x\n0.2\n1.7\n").unwrap();
    assert_eq!(code(&["estimate-theta", "--input", bad.to_str().unwrap()]), 2);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"kapa": 1}"#).unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap(), "mse-table", "--n", "60", "--reps", "2"]), 2);

    assert_eq!(code(&["estimate-theta", "--input", "/no/such/file.csv"]), 1);
    assert_eq!(code(&["--config", "/no/such.json", "mse-table"]), 1);
    let out = dir.path().join("missing/dir/t.csv");
    assert_eq!(code(&["--out", out.to_str().unwrap(), "mse-table", "--n", "60", "--reps", "2", "--models", "F1"]), 1);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnc-scsg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn zero_epoch_run_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gd.csv");
    let o = cli(&["run", "--method", "gd", "--epochs", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "epoch,f,grad_norm,ifo,perturbed,lambda_min,tau\n");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gd.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["reason"], "budget");
    assert_eq!(summary["epochs"], 0);
}

#[test]
fn run_prints_csv_without_out() {
    let o = cli(&["run", "--method", "cnc-scsg", "--epochs", "3", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.csv"));
        let o = cli(&["run", "--epochs", "40", "--probe-every", "10", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        bodies.push((fs::read(&out).unwrap(), fs::read(out.with_extension("summary.json")).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn theory_gamma_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "theory.toml",
        "mode = \"theory\"\nn = 80\nb = 5\neps = 0.2\ngamma = 0.4\ng_thres = 1e-20\n\
         smoothness = 1.0\nrho = 1.0\ngrad_bound = 5e-5\ntau = 2e-9\nf_gap = 1.0\n\
         problem = \"quadratic\"\nspectrum = [1.0, -1.0]\n",
    );
    let o = cli(&["validate-config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("γ ≤ 1/3"), "{}", stdout(&o));
}

#[test]
fn practical_config_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ok.toml", "b = 5\neps = 0.03\n");
    let o = cli(&["validate-config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "ok");
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let o = cli(&["run", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "b = 5\neps = 0.03\nlearning_rate = 1\n");
    let o = cli(&["run", "--config", &cfg]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn missing_file_is_runtime_failure() {
    let o = cli(&["run", "--config", "/definitely/not/here.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_data_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let o = cli(&["gen-data", "--n", "40", "--d", "4", "--seed", "7", "--out", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("y,z_1,z_2,z_3,z_4\n"));
    assert_eq!(text.lines().count(), 41);

    // a relative data_file resolves next to the config
    let cfg = write(dir.path(), "file.toml", "data_file = \"data.csv\"\nb = 5\neps = 0.03\nmax_epochs = 5\n");
    let from_file = cli(&["run", "--config", &cfg]);
    let generated = cli(&["run", "--epochs", "5"]);
    assert_eq!(from_file.status.code(), Some(0));
    let cfg7 = write(dir.path(), "gen.toml", "data_seed = 7\nb = 5\neps = 0.03\nmax_epochs = 5\n");
    let seeded = cli(&["run", "--config", &cfg7]);
    assert_eq!(stdout(&from_file), stdout(&seeded));
    assert_eq!(generated.status.code(), Some(0));
}

#[test]
fn sweep_writes_traces_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", "data_seed = 7\nb = 5\neps = 0.03\ninit_scale = 2.0\n");
    let out = dir.path().join("out");
    let o = cli(&["sweep", "--config", &cfg, "--seeds", "0..49", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csvs = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 50);
    let agg: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    let m = &agg["methods"][0];
    assert_eq!(m["method"], "cnc-scsg");
    assert_eq!(m["runs"], 50);
    assert!(m["escape_quantiles"]["median"].is_number());
}

#[test]
fn certify_reports_the_saddle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.toml",
        "problem = \"quadratic\"\nspectrum = [2.0, -1.0]\nnoise = [[0.0, 1.0], [0.0, -1.0]]\nb = 1\neps = 0.1\n",
    );
    let point = write(dir.path(), "x.json", "[0.3, -0.7]\n");
    let o = cli(&["certify", "--config", &cfg, "--point", &point]);
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((rep["lambda_min"].as_f64().unwrap() + 1.0).abs() <= 1e-6);
    // (e₂ᵀ∇f_z)² averages to (Hx)₂² + 1 = 0.49 + 1
    assert!((rep["tau"].as_f64().unwrap() - 1.49).abs() <= 1e-6);
    assert_eq!(rep["converged"], true);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use augment::runner::without_wall_clock;

const MORRIS: &str = "\
experiment = \"morris\"
seeds = [5, 6]
n_burn = 50
n_keep = 300
model.lambda = 1.0
model.q = 1.0
";

fn augment(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_augment"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_into(config: &str, sub: &str, out: &Path) -> Output {
    let o = augment(&[sub, "--config", config, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn two_seeds_write_two_traces_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MORRIS);
    let out = dir.path().join("out");
    run_into(&cfg, "morris", &out);
    for seed in [5, 6] {
        let trace = fs::read_to_string(out.join(format!("morris_seed{seed}_da.csv"))).unwrap();
        let mut lines = trace.lines();
        assert_eq!(lines.next(), Some("A,theta_1,theta_2,theta_3,theta_4"));
        assert_eq!(lines.count(), 300);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("morris_seed{seed}.json"))).unwrap()).unwrap();
        assert_eq!(summary["status"], "ok");
        assert_eq!(summary["seed"], seed);
        assert!(summary["wall_clock"]["total_seconds"].is_number());
    }
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MORRIS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_into(&cfg, "morris", &a);
    run_into(&cfg, "morris", &b);
    for name in ["morris_seed5_da.csv", "morris_seed6_da.csv", "morris_seed5.config.toml"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let ja = fs::read_to_string(a.join("morris_seed5.json")).unwrap();
    let jb = fs::read_to_string(b.join("morris_seed5.json")).unwrap();
    assert_eq!(without_wall_clock(&ja).unwrap(), without_wall_clock(&jb).unwrap());
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MORRIS);
    let first = dir.path().join("first");
    run_into(&cfg, "morris", &first);
    let echoed = first.join("morris_seed6.config.toml");
    let second = dir.path().join("second");
    run_into(echoed.to_str().unwrap(), "morris", &second);
    let a = fs::read_to_string(first.join("morris_seed6.json")).unwrap();
    let b = fs::read_to_string(second.join("morris_seed6.json")).unwrap();
    assert_eq!(without_wall_clock(&a).unwrap(), without_wall_clock(&b).unwrap());
    assert!(!second.join("morris_seed5.json").exists());
}

#[test]
fn seed_override_runs_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MORRIS);
    let out = dir.path().join("out");
    let o = augment(&["morris", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed-override", "9", "--quiet"]);
    assert!(o.status.success());
    assert!(out.join("morris_seed9.json").exists());
    assert!(!out.join("morris_seed5.json").exists());
}

#[test]
fn unknown_key_exits_with_config_code_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &MORRIS.replace("n_burn", "n_burnin"));
    let o = augment(&["morris", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:3:"), "{err}");
}

#[test]
fn invalid_model_parameter_points_at_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &MORRIS.replace("model.lambda = 1.0", "model.lambda = -1.0"));
    let o = augment(&["morris", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:5: model.lambda"), "{err}");
}

#[test]
fn subcommand_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MORRIS);
    let o = augment(&["ising", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lattice_run_orders_kernels_by_iact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "i.toml",
        "experiment = \"ising\"\nseeds = [2]\nn_burn = 100\nn_keep = 2000\nmodel.side = 8\nmodel.beta = 0.44\n",
    );
    let out = dir.path().join("out");
    run_into(&cfg, "ising", &out);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ising_seed2.json")).unwrap()).unwrap();
    let order = s["kernels_by_iact"].as_array().unwrap();
    assert_eq!(order.len(), 3);
    let taus: Vec<f64> = order.iter().map(|e| e[1].as_f64().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[0] <= w[1]));
    for k in ["metropolis", "gibbs", "swendsen-wang"] {
        let t = fs::read_to_string(out.join(format!("ising_seed2_{k}.csv"))).unwrap();
        assert_eq!(t.lines().count(), 2001);
    }
}

#[test]
fn compare_baselines_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "experiment = \"compare-baselines\"\nseeds = [1990]\nn_burn = 500\nn_keep = 20000\n",
    );
    let out = dir.path().join("out");
    run_into(&cfg, "compare-baselines", &out);
    let table = fs::read_to_string(out.join("compare-baselines_seed1990_table.csv")).unwrap();
    let methods: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["laplace", "gauss-hermite", "importance-sampling", "sir", "da-gibbs"]);
}

#[test]
fn verify_flag_prints_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MORRIS);
    let o = augment(&["morris", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--verify", "--quiet"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 6, "{text}");
}
